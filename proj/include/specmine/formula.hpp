#pragma once

#include <algorithm>
#include <cctype>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "specmine/value.hpp"

namespace specmine {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

inline const char* to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

inline CmpOp negate(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
  }
  return CmpOp::Eq;
}

inline CmpOp flip(CmpOp op) {  // mirror across the comparison: x op y == y flip(op) x
  switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;
  }
}

// A single comparison "x <op> y" where x is a parameter and y is either a
// parameter or a constant.  Atoms are normalized on construction:
//   - addresses admit only ==/!=
//   - integer < / > against constants fold to <= / >= (integer semantics)
//   - boolean != c folds to == (1-c)
//   - parameter pairs are oriented by name, flipping the operator
class Atom {
 public:
  static Atom against_const(ParamId lhs, CmpOp op, Value rhs) {
    Atom a;
    a.lhs_ = std::move(lhs);
    a.op_ = op;
    a.const_rhs_ = std::move(rhs);
    a.normalize_const();
    return a;
  }

  static Atom against_param(ParamId lhs, CmpOp op, ParamId rhs) {
    Atom a;
    a.lhs_ = std::move(lhs);
    a.op_ = op;
    a.param_rhs_ = std::move(rhs);
    a.normalize_params();
    return a;
  }

  const ParamId& lhs() const { return lhs_; }
  CmpOp op() const { return op_; }
  bool rhs_is_param() const { return param_rhs_.has_value(); }
  const ParamId& rhs_param() const { return *param_rhs_; }
  const Value& rhs_const() const { return *const_rhs_; }

  Atom negated() const {
    Atom a = *this;
    a.op_ = specmine::negate(a.op_);
    if (!a.rhs_is_param()) a.normalize_const();
    return a;
  }

  std::string text() const {
    std::ostringstream os;
    os << lhs_.name << ' ' << to_string(op_) << ' ';
    if (rhs_is_param())
      os << param_rhs_->name;
    else
      os << const_rhs_->str();
    return os.str();
  }

  // Ordering key used for deterministic candidate/survivor ordering.
  std::string key() const {
    std::string k = lhs_.name;
    k += '\x01';
    k += static_cast<char>('0' + static_cast<int>(op_));
    k += '\x01';
    if (rhs_is_param()) {
      k += 'p';
      k += param_rhs_->name;
    } else {
      k += 'c';
      k += const_rhs_->is_addr() ? "a" + const_rhs_->as_addr()
                                 : "i" + const_rhs_->as_int().str();
    }
    return k;
  }

  friend bool operator==(const Atom& a, const Atom& b) { return a.key() == b.key(); }
  friend bool operator<(const Atom& a, const Atom& b) { return a.key() < b.key(); }

  std::vector<ParamId> params() const {
    std::vector<ParamId> ps{lhs_};
    if (rhs_is_param()) ps.push_back(*param_rhs_);
    return ps;
  }

  bool state_only() const {
    if (!lhs_.is_state()) return false;
    return !rhs_is_param() || param_rhs_->is_state();
  }

  bool eval(const Valuation& v) const;

 private:
  Atom() = default;

  bool ordered_op() const { return op_ != CmpOp::Eq && op_ != CmpOp::Ne; }

  void check_types(DomainType l, DomainType r) const {
    bool laddr = l == DomainType::Addr, raddr = r == DomainType::Addr;
    if (laddr != raddr) fail("TypeError", "mixed address/integer comparison: " + text());
    if (laddr && ordered_op())
      fail("TypeError", "addresses admit only ==/!=: " + text());
  }

  void normalize_const() {
    DomainType rt = const_rhs_->is_addr() ? DomainType::Addr : DomainType::Int;
    check_types(lhs_.type, rt);
    if (rt == DomainType::Addr) return;
    const BigInt& c = const_rhs_->as_int();
    if (op_ == CmpOp::Lt) {
      op_ = CmpOp::Le;
      const_rhs_ = Value::integer(c - 1);
    } else if (op_ == CmpOp::Gt) {
      op_ = CmpOp::Ge;
      const_rhs_ = Value::integer(c + 1);
    }
    if (lhs_.type == DomainType::Bool && op_ == CmpOp::Ne) {
      const BigInt& b = const_rhs_->as_int();
      if (b == 0 || b == 1) {
        op_ = CmpOp::Eq;
        const_rhs_ = Value::integer(BigInt(1) - b);
      }
    }
  }

  void normalize_params() {
    check_types(lhs_.type, param_rhs_->type);
    if (param_rhs_->name < lhs_.name) {
      std::swap(lhs_, *param_rhs_);
      op_ = flip(op_);
    }
  }

  ParamId lhs_;
  CmpOp op_ = CmpOp::Eq;
  std::optional<ParamId> param_rhs_;
  std::optional<Value> const_rhs_;
};

// Boolean combinations of atoms, immutable with cheap value copies.
class Formula {
 public:
  enum class Kind { True, False, Atom, Not, And, Or };

  Formula() : Formula(always()) {}

  static Formula always() { return Formula(make(Kind::True)); }
  static Formula never() { return Formula(make(Kind::False)); }

  static Formula atom(Atom a) {
    auto n = make(Kind::Atom);
    n->atom = std::move(a);
    return Formula(std::move(n));
  }

  static Formula negation(Formula f) {
    if (f.kind() == Kind::True) return never();
    if (f.kind() == Kind::False) return always();
    auto n = make(Kind::Not);
    n->kids.push_back(std::move(f));
    return Formula(std::move(n));
  }

  // Empty conjunction is True, a singleton collapses to its only child.
  static Formula conjunction(std::vector<Formula> kids) {
    if (kids.empty()) return always();
    if (kids.size() == 1) return kids.front();
    auto n = make(Kind::And);
    n->kids = std::move(kids);
    return Formula(std::move(n));
  }

  static Formula disjunction(std::vector<Formula> kids) {
    if (kids.empty()) return never();
    if (kids.size() == 1) return kids.front();
    auto n = make(Kind::Or);
    n->kids = std::move(kids);
    return Formula(std::move(n));
  }

  static Formula all_of(const std::vector<Atom>& atoms) {
    std::vector<Formula> kids;
    kids.reserve(atoms.size());
    for (const auto& a : atoms) kids.push_back(atom(a));
    return conjunction(std::move(kids));
  }

  Kind kind() const { return node_->kind; }
  const Atom& as_atom() const { return *node_->atom; }
  const std::vector<Formula>& kids() const { return node_->kids; }

  bool is_true() const { return kind() == Kind::True; }
  bool is_false() const { return kind() == Kind::False; }

  bool eval(const Valuation& v) const {
    switch (kind()) {
      case Kind::True: return true;
      case Kind::False: return false;
      case Kind::Atom: return as_atom().eval(v);
      case Kind::Not: return !kids()[0].eval(v);
      case Kind::And:
        for (const auto& k : kids())
          if (!k.eval(v)) return false;
        return true;
      case Kind::Or:
        for (const auto& k : kids())
          if (k.eval(v)) return true;
        return false;
    }
    return false;
  }

  void collect_params(std::vector<ParamId>& out) const {
    switch (kind()) {
      case Kind::Atom:
        for (auto& p : as_atom().params()) out.push_back(p);
        break;
      case Kind::Not:
      case Kind::And:
      case Kind::Or:
        for (const auto& k : kids()) k.collect_params(out);
        break;
      default:
        break;
    }
  }

  std::vector<ParamId> free_params() const {
    std::vector<ParamId> out;
    collect_params(out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(),
                          [](const ParamId& a, const ParamId& b) { return a.name == b.name; }),
              out.end());
    return out;
  }

  void collect_atoms(std::vector<Atom>& out) const {
    switch (kind()) {
      case Kind::Atom: out.push_back(as_atom()); break;
      case Kind::Not:
      case Kind::And:
      case Kind::Or:
        for (const auto& k : kids()) k.collect_atoms(out);
        break;
      default: break;
    }
  }

  std::string text() const {
    std::ostringstream os;
    print(os, 0);
    return os.str();
  }

  friend bool operator==(const Formula& a, const Formula& b) {
    return a.text() == b.text();
  }

 private:
  struct Node {
    Kind kind;
    std::optional<Atom> atom;
    std::vector<Formula> kids;
  };

  static std::shared_ptr<Node> make(Kind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return n;
  }

  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  // Precedence levels: Or=0, And=1, Not=2, atoms=3.
  int precedence() const {
    switch (kind()) {
      case Kind::Or: return 0;
      case Kind::And: return 1;
      case Kind::Not: return 2;
      default: return 3;
    }
  }

  void print(std::ostream& os, int parent_prec) const {
    int prec = precedence();
    bool parens = prec < parent_prec;
    if (parens) os << '(';
    switch (kind()) {
      case Kind::True: os << "true"; break;
      case Kind::False: os << "false"; break;
      case Kind::Atom: os << as_atom().text(); break;
      case Kind::Not:
        os << "!(";
        kids()[0].print(os, 0);
        os << ')';
        break;
      case Kind::And: {
        bool first = true;
        for (const auto& k : kids()) {
          if (!first) os << " && ";
          first = false;
          k.print(os, 1);
        }
        break;
      }
      case Kind::Or: {
        bool first = true;
        for (const auto& k : kids()) {
          if (!first) os << " || ";
          first = false;
          k.print(os, 1);  // Or children with equal precedence need no parens,
                           // but And children of Or print bare — same level 1
        }
        break;
      }
    }
    if (parens) os << ')';
  }

  std::shared_ptr<const Node> node_;
};

inline bool Atom::eval(const Valuation& v) const {
  auto it = v.find(lhs_.name);
  if (it == v.end()) fail("UnboundParam", "'" + lhs_.name + "' unbound in " + text());
  const Value& l = it->second;
  Value r;
  if (rhs_is_param()) {
    auto jt = v.find(param_rhs_->name);
    if (jt == v.end()) fail("UnboundParam", "'" + param_rhs_->name + "' unbound in " + text());
    r = jt->second;
  } else {
    r = *const_rhs_;
  }
  if (l.is_addr() || r.is_addr()) {
    if (!l.is_addr() || !r.is_addr()) fail("TypeError", "mixed comparison in " + text());
    switch (op_) {
      case CmpOp::Eq: return l.as_addr() == r.as_addr();
      case CmpOp::Ne: return l.as_addr() != r.as_addr();
      default: fail("TypeError", "ordered comparison on addresses in " + text());
    }
  }
  const BigInt& a = l.as_int();
  const BigInt& b = r.as_int();
  switch (op_) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
  }
  return false;
}

// --- text syntax -----------------------------------------------------------
//
// C-like precedence: !  binds tighter than &&, which binds tighter than ||.
// Atoms are "name op operand" where operand is a parameter name, a decimal
// integer, an 0x-prefixed address literal, or true/false.

class FormulaParser {
 public:
  FormulaParser(std::string text, const ParamTable& params)
      : text_(std::move(text)), params_(params) {}

  Formula parse() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ != text_.size())
      fail("ParseError", "trailing input at offset " + std::to_string(pos_) + " in formula");
    return f;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(const std::string& tok) {
    skip_ws();
    if (text_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Formula parse_or() {
    std::vector<Formula> kids{parse_and()};
    while (eat("||")) kids.push_back(parse_and());
    return Formula::disjunction(std::move(kids));
  }

  Formula parse_and() {
    std::vector<Formula> kids{parse_not()};
    while (eat("&&")) kids.push_back(parse_not());
    return Formula::conjunction(std::move(kids));
  }

  Formula parse_not() {
    if (eat("!")) return Formula::negation(parse_not());
    return parse_primary();
  }

  Formula parse_primary() {
    skip_ws();
    if (eat("(")) {
      Formula f = parse_or();
      if (!eat(")")) fail("ParseError", "expected ')' in formula");
      return f;
    }
    std::string ident = parse_ident();
    if (ident == "true") return Formula::always();
    if (ident == "false") return Formula::never();
    CmpOp op = parse_op();
    return parse_rhs(ident, op);
  }

  std::string parse_ident() {
    skip_ws();
    size_t start = pos_;
    auto ident_char = [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    };
    if (pos_ < text_.size() &&
        (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    }
    if (pos_ == start) fail("ParseError", "expected identifier at offset " + std::to_string(pos_));
    return text_.substr(start, pos_ - start);
  }

  CmpOp parse_op() {
    if (eat("==")) return CmpOp::Eq;
    if (eat("!=")) return CmpOp::Ne;
    if (eat("<=")) return CmpOp::Le;
    if (eat(">=")) return CmpOp::Ge;
    if (eat("<")) return CmpOp::Lt;
    if (eat(">")) return CmpOp::Gt;
    fail("ParseError", "expected comparison operator at offset " + std::to_string(pos_));
  }

  ParamId lookup(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) fail("UnknownParam", "'" + name + "' not declared");
    return it->second;
  }

  Formula parse_rhs(const std::string& lhs_name, CmpOp op) {
    ParamId lhs = lookup(lhs_name);
    skip_ws();
    char c = peek();
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      // address literal or integer
      if (text_.compare(pos_, 2, "0x") == 0) {
        size_t start = pos_;
        pos_ += 2;
        while (pos_ < text_.size() &&
               std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return Formula::atom(Atom::against_const(
            lhs, op, Value::address(text_.substr(start, pos_ - start))));
      }
      size_t start = pos_;
      if (c == '-') ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == start || (c == '-' && pos_ == start + 1))
        fail("ParseError", "bad integer literal at offset " + std::to_string(start));
      return Formula::atom(Atom::against_const(
          lhs, op, Value::integer(BigInt(text_.substr(start, pos_ - start)))));
    }
    std::string ident = parse_ident();
    if (ident == "true") return Formula::atom(Atom::against_const(lhs, op, Value::integer(1)));
    if (ident == "false") return Formula::atom(Atom::against_const(lhs, op, Value::integer(0)));
    return Formula::atom(Atom::against_param(lhs, op, lookup(ident)));
  }

  std::string text_;
  const ParamTable& params_;
  size_t pos_ = 0;
};

inline Formula parse_formula(const std::string& text, const ParamTable& params) {
  return FormulaParser(text, params).parse();
}

}  // namespace specmine
