#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "specmine/efsm.hpp"
#include "specmine/invariants.hpp"

namespace specmine {

struct MinerConfig {
  bool allow_loops = true;  // restrict the spurious-path search to loop-once paths
  std::optional<std::uint64_t> max_rmpath_actions;
  std::uint64_t seed = 0;   // recorded for provenance; mining itself is deterministic
  std::size_t max_witness_disjuncts = 256;
};

struct TerminationBudget {
  std::uint64_t concrete_states = 0;   // distinct observed valuations
  std::uint64_t slice_count = 0;
  std::uint64_t function_count = 0;
  std::uint64_t max_states_seen = 0;
  std::uint64_t rmpath_actions = 0;

  std::uint64_t bound() const {
    return (concrete_states + 1) * max_states_seen * function_count * max_states_seen;
  }
};

struct MiningReport {
  Json actions = Json::array();
  std::uint64_t rmpath_count = 0;
  std::uint64_t construct_rounds = 0;
  TerminationBudget budget;

  Json to_json(const Efsm& model) const {
    Json j;
    j["actions"] = actions;
    j["rmpath_count"] = rmpath_count;
    j["construct_rounds"] = construct_rounds;
    j["budget"] = {{"concrete_states", budget.concrete_states},
                   {"slices", budget.slice_count},
                   {"functions", budget.function_count},
                   {"max_states", budget.max_states_seen},
                   {"rmpath_actions", budget.rmpath_actions},
                   {"bound", budget.bound()}};
    j["states"] = Json::array();
    for (const auto& s : model.states)
      j["states"].push_back({{"id", s.id}, {"formula", s.formula.text()}});
    j["transitions"] = Json::array();
    for (const auto& t : model.transitions)
      j["transitions"].push_back({{"src", t.src}, {"event", t.event}, {"dst", t.dst}});
    j["support"] = Json::object();
    for (const auto& [k, n] : model.support) j["support"][trans_key_str(k)] = n;
    return j;
  }
};

namespace detail {

// Projection of an inferred condition onto state variables; used as the
// splitting predicate.  Conditions are conjunctions of atoms, so filtering
// conjuncts is exact.  Anything non-conjunctive degrades to True, which
// simply disables guard splitting for that transition.
inline Formula state_part(const Formula& f) {
  std::vector<Atom> atoms;
  switch (f.kind()) {
    case Formula::Kind::True:
      return Formula::always();
    case Formula::Kind::Atom:
      atoms.push_back(f.as_atom());
      break;
    case Formula::Kind::And:
      for (const auto& k : f.kids()) {
        if (k.kind() != Formula::Kind::Atom) return Formula::always();
        atoms.push_back(k.as_atom());
      }
      break;
    default:
      return Formula::always();
  }
  std::vector<Atom> kept;
  for (const auto& a : atoms)
    if (a.state_only()) kept.push_back(a);
  return Formula::all_of(kept);
}

// Concrete view of the corpus: distinct state valuations, and per-step
// abstractions that stay fixed for the lifetime of a mining run.
struct CorpusIndex {
  struct StepInfo {
    int pre = 0;
    int post = 0;
    std::string event;
    bool guard_ok = false;
    bool update_ok = false;
  };

  std::vector<Valuation> values;              // id -> valuation
  std::map<Valuation, int> ids;
  std::vector<std::vector<StepInfo>> slices;  // success steps only
  std::map<int, std::vector<StepInfo>> steps_from;

  int value_id(const Valuation& v) {
    auto it = ids.find(v);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(values.size());
    ids.emplace(v, id);
    values.push_back(v);
    return id;
  }
};

inline CorpusIndex index_corpus(const std::vector<Slice>& slices, const ConditionsMap& conds) {
  CorpusIndex idx;
  for (const auto& s : slices) {
    std::vector<CorpusIndex::StepInfo> steps;
    for (const auto& st : s.steps) {
      if (!st.success()) fail("MalformedSlice", "mining corpus must be success-only");
      auto it = conds.find(st.event);
      if (it == conds.end())
        fail("MissingConditions", "no inferred conditions for event '" + st.event + "'");
      CorpusIndex::StepInfo info;
      info.pre = idx.value_id(st.pre_state);
      info.post = idx.value_id(st.post_state);
      info.event = st.event;
      Valuation pre = st.args;
      for (const auto& [k, v] : st.pre_state) pre[k] = v;
      Valuation post = st.args;
      for (const auto& [k, v] : st.post_state) post[k] = v;
      try {
        info.guard_ok = it->second.pre.eval(pre);
      } catch (const Error&) {
        info.guard_ok = false;
      }
      try {
        info.update_ok = it->second.post.eval(post);
      } catch (const Error&) {
        info.update_ok = false;
      }
      steps.push_back(info);
    }
    idx.slices.push_back(std::move(steps));
  }
  for (const auto& sl : idx.slices)
    for (const auto& st : sl) idx.steps_from[st.pre].push_back(st);
  return idx;
}

// alpha over the observed valuations for the current model version.
inline std::vector<std::optional<int>> abstract_corpus(const CorpusIndex& idx, const Efsm& m) {
  std::vector<std::optional<int>> alpha(idx.values.size());
  for (std::size_t i = 0; i < idx.values.size(); ++i)
    alpha[i] = abstract_state(idx.values[i], m);
  return alpha;
}

}  // namespace detail

// Two-state seed: the all-zero conjunction and its complement.  Guards and
// updates come straight from the inferred conditions.
inline Efsm init_model(const ConditionsMap& conds, const ContractSchema& schema,
                       const ParamTable& env_params) {
  if (conds.empty()) fail("MissingConditions", "cannot initialize from empty conditions");
  if (schema.state_vars.empty())
    fail("DegenerateSchema", "no state variables; the zero state would be vacuous");
  Efsm m;
  m.params = full_param_table(schema, env_params);

  std::vector<Atom> zero_atoms;
  for (const auto& sv : schema.state_vars)
    zero_atoms.push_back(Atom::against_const(sv, CmpOp::Eq, zero_of(sv.type)));
  Formula zero = Formula::all_of(zero_atoms);

  SymbolicState q0;
  q0.id = 0;
  q0.formula = zero;
  q0.is_initial = true;
  SymbolicState rest;
  rest.id = 1;
  rest.formula = normalized_dnf(Formula::negation(zero));
  m.states = {q0, rest};
  for (const auto& [event, _] : conds) m.alphabet.insert(event);
  return m;
}

// Adds every transition (q_i, g_m, m, u_m, q_j) whose endpoints are
// compatible with the condition: sat(q_i ∧ g_m) and sat(q_j ∧ u_m).
// Conditions are fixed per event, so one pass reaches the fixpoint.
inline std::size_t construct(Efsm& m, const ConditionsMap& conds, bool allow_loops = true,
                             const SatBudget& budget = {}) {
  std::size_t added = 0;
  for (const auto& [event, fc] : conds) {
    std::map<int, bool> src_ok, dst_ok;
    for (const auto& q : m.states) {
      src_ok[q.id] = sat(Formula::conjunction({q.formula, fc.pre}), budget).satisfiable;
      dst_ok[q.id] = sat(Formula::conjunction({q.formula, fc.post}), budget).satisfiable;
    }
    for (const auto& qi : m.states) {
      if (!src_ok[qi.id]) continue;
      for (const auto& qj : m.states) {
        if (!dst_ok[qj.id]) continue;
        if (!allow_loops && qi.id == qj.id) continue;
        if (m.find_transition(qi.id, event, qj.id)) continue;
        EfsmTransition t;
        t.src = qi.id;
        t.event = event;
        t.guard = fc.pre;
        t.update = fc.post;
        t.dst = qj.id;
        m.transitions.push_back(std::move(t));
        ++added;
      }
    }
  }
  m.sort_all();
  return added;
}

struct SpuriousHit {
  SymbolicPath prefix;  // supported
  TransKey extension;   // prefix ⊕ extension has no concrete witness
};

// Searches shortest-first for a supported symbolic path whose one-transition
// extension has no witness chain in the observed history.  A path is
// supported when some chain of individually observed steps realizes it,
// starting from a concrete state of the initial symbolic state.
inline std::optional<SpuriousHit> find_spurious(const Efsm& m, const detail::CorpusIndex& idx,
                                                bool loop_once,
                                                std::size_t node_cap = 2000000) {
  auto alpha = detail::abstract_corpus(idx, m);
  int q0 = m.initial_state();

  struct Node {
    SymbolicPath path;
    std::vector<int> concrete;  // endpoint witnesses, sorted
  };
  Node root;
  root.path.states.push_back(q0);
  for (std::size_t i = 0; i < idx.values.size(); ++i)
    if (alpha[i] && *alpha[i] == q0) root.concrete.push_back(static_cast<int>(i));
  if (root.concrete.empty())
    fail("InvariantBroken", "no observed concrete state abstracts to the initial state");

  std::deque<Node> queue{std::move(root)};
  std::size_t processed = 0;
  while (!queue.empty()) {
    Node node = std::move(queue.front());
    queue.pop_front();
    if (++processed > node_cap) fail("PathBudgetExceeded", "spurious-path search exploded");
    int last = node.path.states.back();
    std::set<TransKey> used(node.path.transitions.begin(), node.path.transitions.end());
    for (const auto& t : m.transitions) {
      if (t.src != last) continue;
      if (loop_once && used.count(t.key())) continue;
      std::vector<int> next;
      for (int s : node.concrete) {
        auto it = idx.steps_from.find(s);
        if (it == idx.steps_from.end()) continue;
        for (const auto& step : it->second) {
          if (step.event != t.event || !step.guard_ok || !step.update_ok) continue;
          if (!alpha[step.post] || *alpha[step.post] != t.dst) continue;
          next.push_back(step.post);
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      if (next.empty()) {
        SpuriousHit hit;
        hit.prefix = node.path;
        hit.extension = t.key();
        return hit;
      }
      Node child;
      child.path = node.path;
      child.path.states.push_back(t.dst);
      child.path.transitions.push_back(t.key());
      child.concrete = std::move(next);
      queue.push_back(std::move(child));
    }
  }
  return std::nullopt;
}

namespace detail {

// Replaces q_n by the given candidate formulas, keeping only pieces that
// cover at least one observed valuation.  A piece without observed coverage
// describes no history behavior and would linger as an unreachable state,
// so the state shrinks instead of splitting.
inline std::vector<int> apply_split(Efsm& m, int state_id,
                                    const std::vector<Formula>& pieces,
                                    const CorpusIndex& idx, Json* dropped_out) {
  const SymbolicState* q = m.find_state(state_id);
  if (!q) fail("InternalError", "split of unknown state");
  bool was_initial = q->is_initial;

  std::vector<Formula> kept;
  Json dropped = Json::array();
  for (const auto& piece : pieces) {
    Formula f = normalized_dnf(piece);
    bool observed = false;
    for (const auto& v : idx.values)
      if (f.eval(v)) {
        observed = true;
        break;
      }
    if (observed)
      kept.push_back(f);
    else
      dropped.push_back(f.text());
  }
  if (kept.empty())
    fail("InvariantBroken", "split eliminated every observed witness of state " +
                                std::to_string(state_id));

  int next_id = 0;
  for (const auto& s : m.states) next_id = std::max(next_id, s.id + 1);

  std::vector<SymbolicState> new_states;
  for (const auto& s : m.states)
    if (s.id != state_id) new_states.push_back(s);
  std::vector<int> fresh_ids;
  Valuation genesis_witness;
  if (was_initial) {
    // the piece holding the initial state's witness inherits the flag
    for (const auto& v : idx.values)
      if (q->formula.eval(v)) {
        genesis_witness = v;
        break;
      }
  }
  bool initial_assigned = false;
  for (const auto& f : kept) {
    SymbolicState ns;
    ns.id = next_id++;
    ns.formula = f;
    ns.parent = state_id;
    ns.is_initial =
        was_initial && !initial_assigned && !genesis_witness.empty() && f.eval(genesis_witness);
    initial_assigned = initial_assigned || ns.is_initial;
    new_states.push_back(ns);
    fresh_ids.push_back(ns.id);
  }
  m.states = std::move(new_states);

  std::vector<EfsmTransition> kept_ts;
  for (const auto& t : m.transitions)
    if (t.src != state_id && t.dst != state_id) kept_ts.push_back(t);
  m.transitions = std::move(kept_ts);
  m.sort_all();
  if (dropped_out) *dropped_out = std::move(dropped);
  return fresh_ids;
}

}  // namespace detail

// One refinement action: try the guard split; otherwise remove the offending
// transition when it was never observed; otherwise split off the exact
// witness states that do take it.
inline Json split_remove(Efsm& m, const SpuriousHit& hit, const detail::CorpusIndex& idx,
                         const ContractSchema& schema, const MinerConfig& cfg,
                         const SatBudget& budget = {}) {
  int qn = std::get<0>(hit.extension);
  const auto* t = m.find_transition(std::get<0>(hit.extension), std::get<1>(hit.extension),
                                    std::get<2>(hit.extension));
  if (!t) fail("InternalError", "spurious transition vanished");
  const SymbolicState* q = m.find_state(qn);
  if (!q) fail("InternalError", "spurious source state vanished");

  Json action;
  action["kind"] = "rmpath";
  action["transition"] = trans_key_str(hit.extension);
  action["state"] = qn;

  Formula g = detail::state_part(t->guard);
  Formula with_g = Formula::conjunction({q->formula, g});
  Formula without_g = Formula::conjunction({q->formula, Formula::negation(g)});
  bool sat_with = sat(with_g, budget).satisfiable;
  bool sat_without = sat(without_g, budget).satisfiable;

  if (sat_with && sat_without) {
    Json dropped;
    auto fresh = detail::apply_split(m, qn, {with_g, without_g}, idx, &dropped);
    action["mode"] = "split-guard";
    action["new_states"] = fresh;
    if (!dropped.empty()) action["dropped_pieces"] = dropped;
    return action;
  }

  // Concrete traversals of the offending transition anywhere in history.
  auto alpha = detail::abstract_corpus(idx, m);
  std::set<int> sources;
  for (const auto& sl : idx.slices) {
    for (const auto& step : sl) {
      if (step.event != std::get<1>(hit.extension) || !step.guard_ok || !step.update_ok)
        continue;
      if (!alpha[step.pre] || *alpha[step.pre] != qn) continue;
      if (!alpha[step.post] || *alpha[step.post] != std::get<2>(hit.extension)) continue;
      sources.insert(step.pre);
    }
  }

  if (sources.empty()) {
    std::vector<EfsmTransition> kept;
    for (const auto& tr : m.transitions)
      if (tr.key() != hit.extension) kept.push_back(tr);
    m.transitions = std::move(kept);
    action["mode"] = "remove-transition";
    return action;
  }

  if (sources.size() > cfg.max_witness_disjuncts)
    fail("CorpusTooDiverse",
         "witness split needs " + std::to_string(sources.size()) +
             " disjuncts; use coarser predicates");

  std::vector<Formula> points;
  for (int s : sources) {
    std::vector<Atom> eqs;
    for (const auto& sv : schema.state_vars)
      eqs.push_back(Atom::against_const(sv, CmpOp::Eq, idx.values[s].at(sv.name)));
    points.push_back(Formula::all_of(eqs));
  }
  Formula pred = Formula::disjunction(std::move(points));
  Formula rest = Formula::conjunction({q->formula, Formula::negation(pred)});
  Json dropped;
  auto fresh = detail::apply_split(m, qn, {pred, rest}, idx, &dropped);
  action["mode"] = "split-witness";
  action["new_states"] = fresh;
  if (!dropped.empty()) action["dropped_pieces"] = dropped;
  return action;
}

// The full loop under the fair scheduling: construct to fixpoint, then
// refine on the first spurious path found, until none remains.
inline std::pair<Efsm, MiningReport> mine(const std::vector<Slice>& slices,
                                          const ConditionsMap& conds,
                                          const ContractSchema& schema,
                                          const ParamTable& env_params,
                                          const MinerConfig& cfg = {}) {
  if (slices.empty()) fail("EmptyCorpus", "mining needs at least one slice");
  Valuation zero = schema.zero_state();
  bool any_step = false;
  for (const auto& s : slices) {
    if (s.steps.empty()) continue;
    any_step = true;
    if (s.steps.front().pre_state != zero)
      fail("NonZeroGenesis", "a session starts from a non-zero state; the abstraction "
                             "assumes zero-valued genesis");
  }
  if (!any_step) fail("EmptyCorpus", "every slice is empty");

  auto idx = detail::index_corpus(slices, conds);

  MiningReport report;
  report.budget.concrete_states = idx.values.size();
  report.budget.slice_count = slices.size();
  report.budget.function_count = schema.functions.size();

  Efsm m = init_model(conds, schema, env_params);
  report.budget.max_states_seen = m.states.size();

  SatBudget sat_budget;
  for (;;) {
    std::size_t added;
    do {
      added = construct(m, conds, cfg.allow_loops, sat_budget);
      ++report.construct_rounds;
      if (added > 0) report.actions.push_back({{"kind", "construct"}, {"added", added}});
    } while (added > 0);

    auto hit = find_spurious(m, idx, cfg.allow_loops);
    if (!hit) break;

    Json action = split_remove(m, *hit, idx, schema, cfg, sat_budget);
    report.actions.push_back(std::move(action));
    ++report.rmpath_count;
    report.budget.rmpath_actions = report.rmpath_count;
    report.budget.max_states_seen =
        std::max<std::uint64_t>(report.budget.max_states_seen, m.states.size());
    std::uint64_t bound = cfg.max_rmpath_actions.value_or(report.budget.bound());
    if (report.rmpath_count > bound)
      fail("BudgetExceeded", "RmPath actions exceeded the termination bound (" +
                                 std::to_string(bound) + "); this indicates a mining bug");
  }

  // Training behaviors must replay on the fixpoint model; record support.
  m.clear_support();
  for (const auto& s : slices) {
    auto out = replay(s, m);
    if (!out.accepted)
      fail("InvariantBroken", "training slice rejected at step " +
                                  std::to_string(out.reject_index) + " (" + out.reason + ")");
    m.add_support(out.path_transitions);
  }
  check_model_invariants(m, sat_budget);
  return {std::move(m), std::move(report)};
}

}  // namespace specmine
