#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <variant>

#include "specmine/errors.hpp"

namespace specmine {

using BigInt = boost::multiprecision::cpp_int;

// Runtime values: arbitrary-precision integers (chain words must not wrap)
// and opaque address identifiers that only support equality.  Booleans are
// integers restricted to {0,1} by their declared domain.
class Value {
 public:
  Value() : rep_(BigInt(0)) {}

  static Value integer(BigInt v) { return Value(std::move(v)); }
  static Value integer(long long v) { return Value(BigInt(v)); }
  static Value boolean(bool b) { return Value(BigInt(b ? 1 : 0)); }
  static Value address(std::string a) { return Value(std::move(a)); }
  static Value address_zero() { return Value(std::string("0x0")); }

  bool is_int() const { return std::holds_alternative<BigInt>(rep_); }
  bool is_addr() const { return std::holds_alternative<std::string>(rep_); }

  const BigInt& as_int() const {
    if (!is_int()) fail("TypeError", "address value used as integer");
    return std::get<BigInt>(rep_);
  }
  const std::string& as_addr() const {
    if (!is_addr()) fail("TypeError", "integer value used as address");
    return std::get<std::string>(rep_);
  }

  std::string str() const {
    return is_int() ? as_int().str() : as_addr();
  }

  friend bool operator==(const Value& a, const Value& b) {
    return a.rep_ == b.rep_;
  }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

  // Total order so values can key std::map; addresses sort lexicographically
  // after all integers.  Not a semantic order.
  friend bool operator<(const Value& a, const Value& b) {
    if (a.rep_.index() != b.rep_.index()) return a.rep_.index() < b.rep_.index();
    if (a.is_int()) return a.as_int() < b.as_int();
    return a.as_addr() < b.as_addr();
  }

 private:
  explicit Value(BigInt v) : rep_(std::move(v)) {}
  explicit Value(std::string a) : rep_(std::move(a)) {}

  std::variant<BigInt, std::string> rep_;
};

enum class ParamKind { Input, StateVar, Env };
enum class DomainType { Int, Addr, Bool };

inline const char* to_string(ParamKind k) {
  switch (k) {
    case ParamKind::Input: return "input";
    case ParamKind::StateVar: return "state";
    case ParamKind::Env: return "env";
  }
  return "?";
}

inline const char* to_string(DomainType t) {
  switch (t) {
    case DomainType::Int: return "int";
    case DomainType::Addr: return "addr";
    case DomainType::Bool: return "bool";
  }
  return "?";
}

inline DomainType domain_from_string(const std::string& s) {
  if (s == "int") return DomainType::Int;
  if (s == "addr") return DomainType::Addr;
  if (s == "bool") return DomainType::Bool;
  fail("MalformedSchema", "unknown domain type '" + s + "'");
}

struct ParamId {
  std::string name;
  ParamKind kind = ParamKind::Input;
  DomainType type = DomainType::Int;

  bool is_state() const { return kind == ParamKind::StateVar; }

  friend bool operator==(const ParamId& a, const ParamId& b) {
    return a.name == b.name && a.kind == b.kind && a.type == b.type;
  }
  friend bool operator<(const ParamId& a, const ParamId& b) {
    return a.name < b.name;
  }
};

// Partial map from parameter names to values.  Used both for event argument
// bindings (theta) and for state valuations.
using Binding = std::map<std::string, Value>;
using Valuation = Binding;

// Name -> declared parameter, for formula parsing and type lookups.
using ParamTable = std::map<std::string, ParamId>;

inline Value zero_of(DomainType t) {
  switch (t) {
    case DomainType::Addr: return Value::address_zero();
    case DomainType::Bool: return Value::boolean(false);
    case DomainType::Int: return Value::integer(0);
  }
  return Value::integer(0);
}

}  // namespace specmine
