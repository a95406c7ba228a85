#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "specmine/formula.hpp"

namespace specmine {

// Decision procedure for the mined fragment: order and equality over
// unbounded integers (booleans as 0/1-bounded integers), equality over
// opaque addresses.  Formulas are normalized to DNF; each conjunct is
// decided with union-find over address terms plus a difference-constraint
// graph with negative-cycle detection over the integer terms.

struct SatBudget {
  std::size_t max_conjunct_atoms = 64;
  std::size_t max_conjuncts = 4096;
};

struct SatResult {
  bool satisfiable = false;
  Valuation witness;  // populated and verified when satisfiable
};

namespace detail {

// Negation normal form: negations pushed onto atoms (the comparison set is
// closed under negation).  Integer disequalities stay atomic here; the
// conjunct solver case-splits them locally.
inline Formula nnf(const Formula& f, bool negated) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::True: return negated ? Formula::never() : Formula::always();
    case K::False: return negated ? Formula::always() : Formula::never();
    case K::Not: return nnf(f.kids()[0], !negated);
    case K::And:
    case K::Or: {
      std::vector<Formula> kids;
      kids.reserve(f.kids().size());
      for (const auto& k : f.kids()) kids.push_back(nnf(k, negated));
      bool conj = (f.kind() == K::And) != negated;
      return conj ? Formula::conjunction(std::move(kids))
                  : Formula::disjunction(std::move(kids));
    }
    case K::Atom:
      return Formula::atom(negated ? f.as_atom().negated() : f.as_atom());
  }
  return Formula::never();
}

// Cheap per-conjunct contradiction filter applied while distributing; the
// full decision runs afterwards, so this only has to be sound, not complete.
struct ConjunctSketch {
  std::map<std::string, BigInt> lo, hi;           // integer bounds vs constants
  std::map<std::string, std::string> addr_eq;     // var -> address constant
  std::map<std::string, std::set<std::string>> addr_ne;
  std::map<std::pair<std::string, std::string>, int> pair_ops;  // bitmask of CmpOp
  std::set<std::string> seen;  // atom keys already in the conjunct

  static int op_bit(CmpOp op) { return 1 << static_cast<int>(op); }

  static int conflicting_bits(CmpOp op) {
    switch (op) {
      case CmpOp::Eq: return op_bit(CmpOp::Ne) | op_bit(CmpOp::Lt) | op_bit(CmpOp::Gt);
      case CmpOp::Ne: return op_bit(CmpOp::Eq);
      case CmpOp::Lt: return op_bit(CmpOp::Eq) | op_bit(CmpOp::Gt) | op_bit(CmpOp::Ge);
      case CmpOp::Le: return op_bit(CmpOp::Gt);
      case CmpOp::Gt: return op_bit(CmpOp::Eq) | op_bit(CmpOp::Lt) | op_bit(CmpOp::Le);
      case CmpOp::Ge: return op_bit(CmpOp::Lt);
    }
    return 0;
  }

  bool duplicate(const Atom& a) const { return seen.count(a.key()) > 0; }

  bool admits(const Atom& a) const {
    if (a.rhs_is_param()) {
      auto it = pair_ops.find({a.lhs().name, a.rhs_param().name});
      return it == pair_ops.end() || (it->second & conflicting_bits(a.op())) == 0;
    }
    const std::string& x = a.lhs().name;
    if (a.lhs().type == DomainType::Addr) {
      const std::string& c = a.rhs_const().as_addr();
      auto eq = addr_eq.find(x);
      if (a.op() == CmpOp::Eq) {
        if (eq != addr_eq.end() && eq->second != c) return false;
        auto ne = addr_ne.find(x);
        return ne == addr_ne.end() || !ne->second.count(c);
      }
      return eq == addr_eq.end() || eq->second != c;
    }
    const BigInt& c = a.rhs_const().as_int();
    auto lo_it = lo.find(x);
    auto hi_it = hi.find(x);
    switch (a.op()) {
      case CmpOp::Eq:
        if (lo_it != lo.end() && c < lo_it->second) return false;
        if (hi_it != hi.end() && c > hi_it->second) return false;
        return true;
      case CmpOp::Le:
        return lo_it == lo.end() || lo_it->second <= c;
      case CmpOp::Ge:
        return hi_it == hi.end() || hi_it->second >= c;
      case CmpOp::Ne:
        // only refutable when the bounds pin the variable to exactly c
        return !(lo_it != lo.end() && hi_it != hi.end() && lo_it->second == c &&
                 hi_it->second == c);
      default:
        return true;  // Lt/Gt against constants fold away at normalization
    }
  }

  void add(const Atom& a) {
    seen.insert(a.key());
    if (a.rhs_is_param()) {
      pair_ops[{a.lhs().name, a.rhs_param().name}] |= op_bit(a.op());
      return;
    }
    const std::string& x = a.lhs().name;
    if (a.lhs().type == DomainType::Addr) {
      if (a.op() == CmpOp::Eq)
        addr_eq.emplace(x, a.rhs_const().as_addr());
      else
        addr_ne[x].insert(a.rhs_const().as_addr());
      return;
    }
    const BigInt& c = a.rhs_const().as_int();
    auto raise = [](std::map<std::string, BigInt>& m, const std::string& k, const BigInt& v,
                    bool is_lo) {
      auto it = m.find(k);
      if (it == m.end())
        m.emplace(k, v);
      else if (is_lo ? v > it->second : v < it->second)
        it->second = v;
    };
    switch (a.op()) {
      case CmpOp::Eq:
        raise(lo, x, c, true);
        raise(hi, x, c, false);
        break;
      case CmpOp::Le: raise(hi, x, c, false); break;
      case CmpOp::Ge: raise(lo, x, c, true); break;
      default: break;
    }
  }
};

using Conjunct = std::vector<Atom>;

inline void distribute(const Formula& f, Conjunct& current, ConjunctSketch sketch,
                       std::vector<Conjunct>& out, const SatBudget& budget) {
  using K = Formula::Kind;
  switch (f.kind()) {
    case K::True:
      if (out.size() >= budget.max_conjuncts)
        fail("ComplexityBudgetExceeded", "DNF conjunct budget exhausted");
      out.push_back(current);
      return;
    case K::False:
      return;
    case K::Atom: {
      const Atom& a = f.as_atom();
      if (sketch.duplicate(a)) {
        if (out.size() >= budget.max_conjuncts)
          fail("ComplexityBudgetExceeded", "DNF conjunct budget exhausted");
        out.push_back(current);
        return;
      }
      if (!sketch.admits(a)) return;  // provably contradictory branch
      if (current.size() >= budget.max_conjunct_atoms)
        fail("ComplexityBudgetExceeded", "conjunct atom budget exhausted");
      sketch.add(a);
      current.push_back(a);
      if (out.size() >= budget.max_conjuncts)
        fail("ComplexityBudgetExceeded", "DNF conjunct budget exhausted");
      out.push_back(current);
      current.pop_back();
      return;
    }
    case K::Or:
      for (const auto& k : f.kids()) distribute(k, current, sketch, out, budget);
      return;
    case K::And: {
      // Fold one child at a time: expand the first child into conjuncts,
      // then recurse on the rest for each.
      std::vector<Conjunct> heads;
      {
        std::vector<Conjunct> tmp;
        distribute(f.kids()[0], current, sketch, tmp, budget);
        heads = std::move(tmp);
      }
      Formula rest = Formula::conjunction(
          std::vector<Formula>(f.kids().begin() + 1, f.kids().end()));
      for (auto& head : heads) {
        ConjunctSketch s2;
        for (const auto& a : head) s2.add(a);
        distribute(rest, head, std::move(s2), out, budget);
      }
      return;
    }
    case K::Not:
      fail("InternalError", "negation survived NNF");
  }
}

inline std::vector<Conjunct> to_dnf(const Formula& f, const SatBudget& budget) {
  Formula n = nnf(f, false);
  std::vector<Conjunct> out;
  Conjunct current;
  distribute(n, current, ConjunctSketch{}, out, budget);
  return out;
}

class UnionFind {
 public:
  int node(const std::string& key) {
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(parent_.size());
    index_.emplace(key, id);
    parent_.push_back(id);
    return id;
  }
  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void merge(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::map<std::string, int> index_;
  std::vector<int> parent_;
};

// Difference-constraint system d(v) <= d(u) + w per edge (u,v,w); all-zero
// initial distances emulate a super-source so any negative cycle is found.
struct DiffGraph {
  std::vector<std::string> names;  // node 0 is the distinguished zero node
  std::map<std::string, int> index;
  struct Edge { int u, v; BigInt w; };
  std::vector<Edge> edges;

  DiffGraph() { node("\x01zero"); }

  int node(const std::string& n) {
    auto it = index.find(n);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(names.size());
    index.emplace(n, id);
    names.push_back(n);
    return id;
  }

  // x - y <= c
  void le(int x, int y, BigInt c) { edges.push_back({y, x, std::move(c)}); }

  std::optional<std::vector<BigInt>> solve() const {
    std::vector<BigInt> dist(names.size(), BigInt(0));
    for (std::size_t round = 0; round + 1 < names.size() || round == 0; ++round) {
      bool changed = false;
      for (const auto& e : edges) {
        BigInt cand = dist[e.u] + e.w;
        if (cand < dist[e.v]) {
          dist[e.v] = std::move(cand);
          changed = true;
        }
      }
      if (!changed) return dist;
    }
    for (const auto& e : edges)
      if (dist[e.u] + e.w < dist[e.v]) return std::nullopt;  // negative cycle
    return dist;
  }
};

inline std::optional<Valuation> solve_conjunct_expanded(const Conjunct& atoms);

// Integer disequalities are not difference constraints; case-split each one
// into its strict sides and try the resulting pure systems in order.
inline std::optional<Valuation> solve_conjunct(const Conjunct& atoms,
                                               std::size_t expansion_cap = 4096) {
  std::size_t ne_index = atoms.size();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Atom& a = atoms[i];
    if (a.op() == CmpOp::Ne && a.lhs().type != DomainType::Addr) {
      ne_index = i;
      break;
    }
  }
  if (ne_index == atoms.size()) return solve_conjunct_expanded(atoms);
  if (expansion_cap < 2)
    fail("ComplexityBudgetExceeded", "disequality case-split budget exhausted");
  const Atom& a = atoms[ne_index];
  for (CmpOp side : {CmpOp::Lt, CmpOp::Gt}) {
    Conjunct variant = atoms;
    variant[ne_index] = a.rhs_is_param() ? Atom::against_param(a.lhs(), side, a.rhs_param())
                                         : Atom::against_const(a.lhs(), side, a.rhs_const());
    if (auto w = solve_conjunct(variant, expansion_cap / 2)) return w;
  }
  return std::nullopt;
}

inline std::optional<Valuation> solve_conjunct_expanded(const Conjunct& atoms) {
  // Address fragment: union-find over parameters and constants.
  UnionFind uf;
  std::vector<std::pair<int, int>> addr_disequalities;
  std::map<int, std::string> const_of_class;  // assigned after merging
  std::vector<std::string> addr_params;
  std::set<std::string> addr_consts;

  auto addr_term = [&](const Atom& a, bool rhs) -> int {
    if (!rhs) {
      addr_params.push_back(a.lhs().name);
      return uf.node("p:" + a.lhs().name);
    }
    if (a.rhs_is_param()) {
      addr_params.push_back(a.rhs_param().name);
      return uf.node("p:" + a.rhs_param().name);
    }
    addr_consts.insert(a.rhs_const().as_addr());
    return uf.node("c:" + a.rhs_const().as_addr());
  };

  DiffGraph g;
  std::set<std::string> int_params;

  for (const Atom& a : atoms) {
    if (a.lhs().type == DomainType::Addr) {
      int l = addr_term(a, false);
      int r = addr_term(a, true);
      if (a.op() == CmpOp::Eq)
        uf.merge(l, r);
      else
        addr_disequalities.emplace_back(l, r);
      continue;
    }
    int x = g.node(a.lhs().name);
    int_params.insert(a.lhs().name);
    if (a.rhs_is_param()) {
      int y = g.node(a.rhs_param().name);
      int_params.insert(a.rhs_param().name);
      switch (a.op()) {
        case CmpOp::Eq: g.le(x, y, 0); g.le(y, x, 0); break;
        case CmpOp::Lt: g.le(x, y, -1); break;
        case CmpOp::Le: g.le(x, y, 0); break;
        case CmpOp::Gt: g.le(y, x, -1); break;
        case CmpOp::Ge: g.le(y, x, 0); break;
        case CmpOp::Ne: fail("InternalError", "integer disequality survived NNF");
      }
    } else {
      const BigInt& c = a.rhs_const().as_int();
      switch (a.op()) {
        case CmpOp::Eq: g.le(x, 0, c); g.le(0, x, -c); break;
        case CmpOp::Le: g.le(x, 0, c); break;
        case CmpOp::Ge: g.le(0, x, -c); break;
        default: fail("InternalError", "unnormalized constant comparison");
      }
    }
    if (a.lhs().type == DomainType::Bool) {
      g.le(x, 0, 1);
      g.le(0, x, 0);
    }
    if (a.rhs_is_param() && a.rhs_param().type == DomainType::Bool) {
      int y = g.node(a.rhs_param().name);
      g.le(y, 0, 1);
      g.le(0, y, 0);
    }
  }

  // Decide addresses: a disequality inside one class, or two distinct
  // constants merged, is a contradiction.
  for (auto [l, r] : addr_disequalities)
    if (uf.find(l) == uf.find(r)) return std::nullopt;
  for (const auto& c : addr_consts) {
    int root = uf.find(uf.node("c:" + c));
    auto it = const_of_class.find(root);
    if (it != const_of_class.end() && it->second != c) return std::nullopt;
    const_of_class.emplace(root, c);
  }

  auto dist = g.solve();
  if (!dist) return std::nullopt;

  Valuation w;
  const BigInt& zero_ref = (*dist)[0];
  for (const auto& p : int_params)
    w[p] = Value::integer((*dist)[g.index.at(p)] - zero_ref);

  // Address witnesses: constants name their class; other classes get fresh
  // identifiers distinct from every mentioned constant.
  std::map<int, std::string> rep;
  for (auto& [root, c] : const_of_class) rep[root] = c;
  std::sort(addr_params.begin(), addr_params.end());
  addr_params.erase(std::unique(addr_params.begin(), addr_params.end()), addr_params.end());
  int fresh = 0;
  for (const auto& p : addr_params) {
    int root = uf.find(uf.node("p:" + p));
    auto it = rep.find(root);
    if (it == rep.end()) {
      std::string cand;
      do {
        cand = "0xfresh" + std::to_string(fresh++);
      } while (addr_consts.count(cand));
      it = rep.emplace(root, cand).first;
    }
    w[p] = Value::address(it->second);
  }
  return w;
}

}  // namespace detail

inline SatResult sat(const Formula& f, const SatBudget& budget = {}) {
  auto conjuncts = detail::to_dnf(f, budget);
  for (const auto& c : conjuncts) {
    auto w = detail::solve_conjunct(c);
    if (!w) continue;
    // Complete the witness over the formula's free parameters so the
    // soundness check below can evaluate the whole formula.
    Valuation full = *w;
    for (const auto& p : f.free_params())
      if (!full.count(p.name)) full[p.name] = zero_of(p.type);
    if (!f.eval(full)) fail("InternalError", "sat witness fails evaluation: " + f.text());
    return SatResult{true, std::move(full)};
  }
  return SatResult{};
}

inline bool implies(const Formula& f, const Formula& g, const SatBudget& budget = {}) {
  return !sat(Formula::conjunction({f, Formula::negation(g)}), budget).satisfiable;
}

inline bool equivalent(const Formula& f, const Formula& g, const SatBudget& budget = {}) {
  return implies(f, g, budget) && implies(g, f, budget);
}

// Equivalent disjunction-of-conjunctions form with unsatisfiable and
// subsumed branches removed.  Mined state formulas are stored this way so
// later satisfiability queries against them stay linear instead of
// re-expanding a tower of negations.
inline Formula normalized_dnf(const Formula& f, const SatBudget& budget = {}) {
  auto conjuncts = detail::to_dnf(f, budget);

  std::vector<std::set<std::string>> keysets;
  std::vector<detail::Conjunct> kept;
  for (auto& c : conjuncts) {
    if (!detail::solve_conjunct(c)) continue;
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    std::set<std::string> keys;
    for (const auto& a : c) keys.insert(a.key());
    // drop branches that merely restrict an existing one, and branches an
    // incoming one generalizes
    bool subsumed = false;
    for (std::size_t i = 0; i < kept.size() && !subsumed; ++i)
      subsumed = std::includes(keys.begin(), keys.end(), keysets[i].begin(), keysets[i].end());
    if (subsumed) continue;
    for (std::size_t i = kept.size(); i-- > 0;) {
      if (std::includes(keysets[i].begin(), keysets[i].end(), keys.begin(), keys.end())) {
        kept.erase(kept.begin() + i);
        keysets.erase(keysets.begin() + i);
      }
    }
    kept.push_back(std::move(c));
    keysets.push_back(std::move(keys));
  }
  if (kept.empty()) return Formula::never();
  std::vector<Formula> branches;
  for (const auto& c : kept) branches.push_back(Formula::all_of(c));
  return Formula::disjunction(std::move(branches));
}

}  // namespace specmine
