#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "specmine/slicing.hpp"
#include "specmine/solver.hpp"

namespace specmine {

// Likely pre-/post-conditions of one function: the conjunction of every
// comparison template instance that held on all successful observations.
struct FunctionConditions {
  std::string event;
  Formula pre;
  Formula post;
  std::uint64_t support = 0;
};

using ConditionsMap = std::map<std::string, FunctionConditions>;

struct InferOptions {
  std::uint64_t min_support = 1;
  std::size_t max_consts_per_var = 20;
};

struct PredicatePool {
  std::vector<Atom> atoms;  // state-variable vocabulary, canonical order
};

namespace detail {

struct EventObservations {
  std::vector<Valuation> pre;   // pre_state ∪ args
  std::vector<Valuation> post;  // post_state ∪ args
};

// Rank used when pruning survivors: an implier must be strictly "smaller"
// to shadow an implied atom, so equalities shadow the bounds they entail.
inline std::tuple<int, std::size_t, std::string> prune_rank(const Atom& a) {
  int op_rank;
  switch (a.op()) {
    case CmpOp::Eq: op_rank = 0; break;
    case CmpOp::Lt:
    case CmpOp::Gt: op_rank = 1; break;
    default: op_rank = 2; break;
  }
  std::string t = a.text();
  return {op_rank, t.size(), t};
}

inline std::vector<Atom> prune_implied(const std::vector<Atom>& survivors) {
  std::vector<Atom> kept;
  for (const auto& a : survivors) {
    bool drop = false;
    for (const auto& b : survivors) {
      if (b == a) continue;
      if (prune_rank(b) >= prune_rank(a)) continue;
      try {
        if (implies(Formula::atom(b), Formula::atom(a))) {
          drop = true;
          break;
        }
      } catch (const Error&) {
      }
    }
    if (!drop) kept.push_back(a);
  }
  return kept;
}

inline ParamTable relevant_params(const ContractSchema& schema,
                                  const EventObservations& obs) {
  ParamTable table;
  for (const auto& sv : schema.state_vars) table[sv.name] = sv;
  if (obs.pre.empty()) return table;
  // Arguments and environment symbols qualify only when bound on every
  // observation of the event, so every surviving atom stays evaluable.
  std::set<std::string> always;
  bool first = true;
  for (const auto& v : obs.pre) {
    std::set<std::string> names;
    for (const auto& [k, _] : v) names.insert(k);
    if (first) {
      always = std::move(names);
      first = false;
    } else {
      std::set<std::string> inter;
      std::set_intersection(always.begin(), always.end(), names.begin(), names.end(),
                            std::inserter(inter, inter.begin()));
      always = std::move(inter);
    }
  }
  for (const auto& name : always) {
    if (table.count(name)) continue;
    DomainType t = obs.pre.front().at(name).is_addr() ? DomainType::Addr : DomainType::Int;
    // Declared inputs keep their kind; anything else is an env symbol.
    table[name] = ParamId{name, ParamKind::Env, t};
  }
  for (const auto& fn : schema.functions)
    for (const auto& in : fn.inputs)
      if (table.count(in.name) && table[in.name].kind == ParamKind::Env) table[in.name] = in;
  return table;
}

// Constant pool per variable: {0,1} plus the observed value levels, capped
// at max_consts (most frequent kept).  A variable with many distinct values
// is a counter/amount, not an enum; equality against its incidental values
// says nothing, so such variables keep only the {0,1} boundary.  Addresses
// contribute no constants; identity invariants against literal addresses
// are deployment noise.
inline std::map<std::string, std::vector<BigInt>> collect_constants(
    const std::vector<Slice>& slices, std::size_t max_consts) {
  constexpr std::size_t kEnumCardinality = 12;
  std::map<std::string, std::map<BigInt, std::uint64_t>> freq;
  auto note = [&](const Binding& b) {
    for (const auto& [k, v] : b)
      if (v.is_int()) ++freq[k][v.as_int()];
  };
  for (const auto& s : slices)
    for (const auto& st : s.steps) {
      note(st.args);
      note(st.pre_state);
      note(st.post_state);
    }
  std::map<std::string, std::vector<BigInt>> out;
  for (auto& [name, counts] : freq) {
    std::set<BigInt> chosen{BigInt(0), BigInt(1)};
    if (counts.size() <= kEnumCardinality) {
      std::vector<std::pair<BigInt, std::uint64_t>> items(counts.begin(), counts.end());
      std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      for (const auto& [v, _] : items) {
        if (chosen.size() >= max_consts + 2) break;
        chosen.insert(v);
      }
    }
    out[name] = std::vector<BigInt>(chosen.begin(), chosen.end());
  }
  return out;
}

inline std::vector<Atom> candidate_atoms(const ParamTable& params,
                                         const std::map<std::string, std::vector<BigInt>>& consts) {
  std::set<Atom> cands;
  std::vector<ParamId> ps;
  for (const auto& [_, p] : params) ps.push_back(p);

  static const BigInt small_bound = 1;
  for (const auto& p : ps) {
    if (p.type == DomainType::Addr) continue;
    std::vector<BigInt> ks{BigInt(0), BigInt(1)};
    auto it = consts.find(p.name);
    if (it != consts.end()) ks = it->second;
    for (const auto& c : ks) {
      cands.insert(Atom::against_const(p, CmpOp::Eq, Value::integer(c)));
      if (p.type == DomainType::Bool) continue;
      cands.insert(Atom::against_const(p, CmpOp::Ne, Value::integer(c)));
      // Ordered bounds only near zero; a bound against an arbitrary
      // observed value pins nothing transferable.
      if (c >= -small_bound && c <= small_bound) {
        cands.insert(Atom::against_const(p, CmpOp::Le, Value::integer(c)));
        cands.insert(Atom::against_const(p, CmpOp::Ge, Value::integer(c)));
      }
    }
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      const ParamId& a = ps[i];
      const ParamId& b = ps[j];
      if (a.type != b.type) continue;
      if (a.type == DomainType::Addr || a.type == DomainType::Bool) {
        cands.insert(Atom::against_param(a, CmpOp::Eq, b));
        cands.insert(Atom::against_param(a, CmpOp::Ne, b));
      } else {
        for (CmpOp op : {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge})
          cands.insert(Atom::against_param(a, op, b));
      }
    }
  }
  return std::vector<Atom>(cands.begin(), cands.end());
}

inline std::vector<Atom> surviving(const std::vector<Atom>& candidates,
                                   const std::vector<Valuation>& observations) {
  std::vector<Atom> out;
  for (const auto& a : candidates) {
    bool ok = true;
    for (const auto& v : observations) {
      if (!a.eval(v)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(a);
  }
  return out;
}

}  // namespace detail

// Instantiates every "x ⋈ y" template per event side and keeps exactly the
// instances that were never falsified across the corpus.
inline ConditionsMap infer_conditions(const std::vector<Slice>& slices,
                                      const ContractSchema& schema,
                                      const InferOptions& opts = {}) {
  if (slices.empty()) fail("EmptyCorpus", "inference needs at least one slice");

  std::map<std::string, detail::EventObservations> by_event;
  for (const auto& s : slices) {
    for (const auto& st : s.steps) {
      if (!st.success()) continue;
      auto& obs = by_event[st.event];
      Valuation pre = st.args;
      for (const auto& [k, v] : st.pre_state) pre[k] = v;
      Valuation post = st.args;
      for (const auto& [k, v] : st.post_state) post[k] = v;
      obs.pre.push_back(std::move(pre));
      obs.post.push_back(std::move(post));
    }
  }

  auto consts = detail::collect_constants(slices, opts.max_consts_per_var);

  ConditionsMap result;
  for (const auto& [event, obs] : by_event) {
    FunctionConditions fc;
    fc.event = event;
    fc.support = obs.pre.size();
    if (fc.support >= opts.min_support) {
      ParamTable params = detail::relevant_params(schema, obs);
      auto candidates = detail::candidate_atoms(params, consts);
      auto pre_atoms = detail::prune_implied(detail::surviving(candidates, obs.pre));
      auto post_atoms = detail::prune_implied(detail::surviving(candidates, obs.post));
      fc.pre = Formula::all_of(pre_atoms);
      fc.post = Formula::all_of(post_atoms);
    } else {
      fc.pre = Formula::always();
      fc.post = Formula::always();
    }
    result[event] = std::move(fc);
  }
  return result;
}

// State-variable vocabulary harvested from the inferred conditions.  When a
// variable shows several distinct constants (an enum-like level set), the
// missing equality atoms over its mentioned constants are completed so the
// vocabulary partitions the levels.
inline PredicatePool build_predicate_pool(const ConditionsMap& conds,
                                          const ContractSchema& schema) {
  (void)schema;
  std::set<Atom> pool;
  std::map<std::string, std::set<BigInt>> int_consts;
  std::map<std::string, ParamId> state_params;

  for (const auto& [_, fc] : conds) {
    for (const Formula* side : {&fc.pre, &fc.post}) {
      std::vector<Atom> atoms;
      side->collect_atoms(atoms);
      for (const auto& a : atoms) {
        if (!a.state_only()) continue;
        pool.insert(a);
        if (!a.rhs_is_param() && a.rhs_const().is_int() &&
            a.lhs().type == DomainType::Int) {
          int_consts[a.lhs().name].insert(a.rhs_const().as_int());
          state_params.emplace(a.lhs().name, a.lhs());
        }
      }
    }
  }
  for (const auto& [name, cs] : int_consts) {
    std::set<BigInt> eq_seen;
    for (const auto& a : pool)
      if (a.op() == CmpOp::Eq && !a.rhs_is_param() && a.lhs().name == name &&
          a.rhs_const().is_int())
        eq_seen.insert(a.rhs_const().as_int());
    if (eq_seen.size() >= 2)
      for (const auto& c : cs)
        pool.insert(Atom::against_const(state_params.at(name), CmpOp::Eq, Value::integer(c)));
  }
  if (pool.empty()) fail("EmptyPool", "no state-variable atom survived inference");
  PredicatePool p;
  p.atoms.assign(pool.begin(), pool.end());
  return p;
}

inline Json conditions_to_json(const ConditionsMap& conds) {
  Json j = Json::object();
  for (const auto& [event, fc] : conds) {
    j[event] = {{"pre", fc.pre.text()}, {"post", fc.post.text()}, {"support", fc.support}};
  }
  return j;
}

inline ConditionsMap conditions_from_json(const Json& j, const ParamTable& params) {
  ConditionsMap out;
  for (const auto& [event, v] : j.items()) {
    FunctionConditions fc;
    fc.event = event;
    fc.pre = parse_formula(v.at("pre").get<std::string>(), params);
    fc.post = parse_formula(v.at("post").get<std::string>(), params);
    fc.support = v.at("support").get<std::uint64_t>();
    out[event] = std::move(fc);
  }
  return out;
}

}  // namespace specmine
