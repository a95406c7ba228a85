#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "specmine/fsm.hpp"
#include "specmine/slicing.hpp"
#include "specmine/solver.hpp"

namespace specmine {

struct SymbolicState {
  int id = 0;
  Formula formula;
  bool is_initial = false;
  int parent = -1;  // lineage for debugging splits; not semantic
};

using TransKey = std::tuple<int, std::string, int>;  // (src, event, dst)

struct EfsmTransition {
  int src = 0;
  std::string event;
  Formula guard;
  Formula update;
  int dst = 0;

  TransKey key() const { return {src, event, dst}; }
};

inline std::string trans_key_str(const TransKey& k) {
  return std::to_string(std::get<0>(k)) + ":" + std::get<1>(k) + ":" +
         std::to_string(std::get<2>(k));
}

class Efsm {
 public:
  std::vector<SymbolicState> states;        // sorted by id
  std::vector<EfsmTransition> transitions;  // sorted by (src, event, dst)
  std::set<std::string> alphabet;
  std::map<TransKey, std::uint64_t> support;
  ParamTable params;  // every parameter formulas may mention

  const SymbolicState* find_state(int id) const {
    for (const auto& s : states)
      if (s.id == id) return &s;
    return nullptr;
  }

  int initial_state() const {
    for (const auto& s : states)
      if (s.is_initial) return s.id;
    fail("InvariantBroken", "no initial state");
  }

  const EfsmTransition* find_transition(int src, const std::string& event, int dst) const {
    for (const auto& t : transitions)
      if (t.src == src && t.event == event && t.dst == dst) return &t;
    return nullptr;
  }

  void sort_all() {
    std::sort(states.begin(), states.end(),
              [](const SymbolicState& a, const SymbolicState& b) { return a.id < b.id; });
    std::sort(transitions.begin(), transitions.end(),
              [](const EfsmTransition& a, const EfsmTransition& b) { return a.key() < b.key(); });
  }

  void add_support(const std::vector<TransKey>& visited) {
    for (const auto& k : visited) ++support[k];
  }

  void clear_support() { support.clear(); }

  Fsm event_skeleton() const {
    Fsm m;
    for (const auto& s : states) m.states.push_back(s.id);
    m.initial = initial_state();
    for (const auto& t : transitions) m.edges.push_back(Fsm::Edge{t.src, t.event, t.dst});
    m.normalize();
    return m;
  }
};

// Predicate abstraction: the unique state whose formula holds on s.
// Returns nullopt when no state covers s; two covering states violate the
// disjointness invariant and abort.
inline std::optional<int> abstract_state(const Valuation& s, const Efsm& m) {
  std::optional<int> found;
  for (const auto& q : m.states) {
    if (!q.formula.eval(s)) continue;
    if (found)
      fail("AmbiguousAbstraction",
           "states " + std::to_string(*found) + " and " + std::to_string(q.id) +
               " both cover a concrete state");
    found = q.id;
  }
  return found;
}

struct ReplayOutcome {
  bool accepted = false;
  std::vector<int> path_states;          // visited symbolic states, starting at q0
  std::vector<TransKey> path_transitions;
  std::size_t reject_index = 0;
  std::string reason;  // NoState | NoTransition | GuardFalse | UpdateFalse
};

// Walks a success-only slice through the model: abstract pre and post of
// each step, demand a matching transition, and check its guard on
// (pre ∪ args) and update on (post ∪ args).
inline ReplayOutcome replay(const Slice& slice, const Efsm& m) {
  ReplayOutcome out;
  out.path_states.push_back(m.initial_state());
  for (std::size_t i = 0; i < slice.steps.size(); ++i) {
    const auto& step = slice.steps[i];
    if (!step.success()) fail("MalformedSlice", "replay requires success-only slices");
    auto merge = [&](const Binding& state) {
      Valuation v = step.args;
      for (const auto& [k, val] : state) v[k] = val;
      return v;
    };
    auto qi = abstract_state(step.pre_state, m);
    if (!qi) return ReplayOutcome{false, out.path_states, out.path_transitions, i, "NoState"};
    auto qj = abstract_state(step.post_state, m);
    if (!qj) return ReplayOutcome{false, out.path_states, out.path_transitions, i, "NoState"};
    if (i == 0) out.path_states[0] = *qi;
    const auto* t = m.find_transition(*qi, step.event, *qj);
    if (!t)
      return ReplayOutcome{false, out.path_states, out.path_transitions, i, "NoTransition"};
    bool guard_ok, update_ok;
    try {
      guard_ok = t->guard.eval(merge(step.pre_state));
    } catch (const Error&) {
      guard_ok = false;  // a guard parameter this step does not bind
    }
    if (!guard_ok)
      return ReplayOutcome{false, out.path_states, out.path_transitions, i, "GuardFalse"};
    try {
      update_ok = t->update.eval(merge(step.post_state));
    } catch (const Error&) {
      update_ok = false;
    }
    if (!update_ok)
      return ReplayOutcome{false, out.path_states, out.path_transitions, i, "UpdateFalse"};
    out.path_states.push_back(*qj);
    out.path_transitions.push_back(t->key());
  }
  out.accepted = true;
  return out;
}

struct SymbolicPath {
  std::vector<int> states;           // q0 .. qn
  std::vector<TransKey> transitions;  // t1 .. tn

  std::vector<std::string> word() const {
    std::vector<std::string> w;
    for (const auto& t : transitions) w.push_back(std::get<1>(t));
    return w;
  }
};

// Breadth-first, shortest-first enumeration of symbolic paths from the
// initial state; ties break by (event, dst).  With loop_once a transition
// instance appears at most once per path, which makes the stream finite.
class PathEnumerator {
 public:
  PathEnumerator(const Efsm& m, bool loop_once) : model_(m), loop_once_(loop_once) {
    SymbolicPath root;
    root.states.push_back(m.initial_state());
    queue_.push_back(std::move(root));
  }

  std::optional<SymbolicPath> next() {
    if (queue_.empty()) return std::nullopt;
    SymbolicPath cur = std::move(queue_.front());
    queue_.pop_front();
    int last = cur.states.back();
    std::set<TransKey> used(cur.transitions.begin(), cur.transitions.end());
    for (const auto& t : model_.transitions) {
      if (t.src != last) continue;
      if (loop_once_ && used.count(t.key())) continue;
      SymbolicPath ext = cur;
      ext.states.push_back(t.dst);
      ext.transitions.push_back(t.key());
      queue_.push_back(std::move(ext));
    }
    return cur;
  }

 private:
  const Efsm& model_;
  bool loop_once_;
  std::deque<SymbolicPath> queue_;
};

inline std::vector<SymbolicPath> enumerate_paths(const Efsm& m, bool loop_once,
                                                 std::size_t max_paths = 1000000,
                                                 std::size_t max_len = SIZE_MAX) {
  PathEnumerator en(m, loop_once);
  std::vector<SymbolicPath> out;
  while (auto p = en.next()) {
    if (p->transitions.size() > max_len) break;
    out.push_back(std::move(*p));
    if (out.size() > max_paths) fail("PathBudgetExceeded", "too many symbolic paths");
  }
  return out;
}

// Event-level acceptance; guards and updates are ignored so two models can
// be compared across formula vocabularies.
inline bool accepts_word(const Efsm& m, const std::vector<std::string>& word,
                         bool loop_once = false) {
  if (!loop_once) return m.event_skeleton().accepts(word);
  struct Frame {
    int state;
    std::size_t pos;
    std::set<TransKey> used;
  };
  std::vector<Frame> stack{{m.initial_state(), 0, {}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.pos == word.size()) return true;
    for (const auto& t : m.transitions) {
      if (t.src != f.state || t.event != word[f.pos]) continue;
      if (f.used.count(t.key())) continue;
      Frame nf = f;
      nf.state = t.dst;
      ++nf.pos;
      nf.used.insert(t.key());
      stack.push_back(std::move(nf));
    }
  }
  return false;
}

// Display form: drops conjuncts implied by the rest of the conjunction.
// The stored formula stays authoritative.
inline Formula display_formula(const Formula& f) {
  if (f.kind() != Formula::Kind::And) return f;
  const auto& kids = f.kids();
  std::vector<bool> keep(kids.size(), true);
  for (std::size_t i = 0; i < kids.size(); ++i) {
    std::vector<Formula> rest;
    for (std::size_t j = 0; j < kids.size(); ++j)
      if (j != i && keep[j]) rest.push_back(kids[j]);
    if (rest.empty()) break;
    try {
      if (implies(Formula::conjunction(rest), kids[i])) keep[i] = false;
    } catch (const Error&) {
      // keep conjuncts the budgeted solver cannot decide
    }
  }
  std::vector<Formula> kept;
  for (std::size_t i = 0; i < kids.size(); ++i)
    if (keep[i]) kept.push_back(kids[i]);
  return Formula::conjunction(std::move(kept));
}

inline Json efsm_to_json(const Efsm& m) {
  Json j;
  j["params"] = Json::array();
  for (const auto& [name, p] : m.params)
    j["params"].push_back(
        {{"name", name}, {"kind", to_string(p.kind)}, {"type", to_string(p.type)}});
  j["states"] = Json::array();
  for (const auto& s : m.states)
    j["states"].push_back({{"id", s.id},
                           {"formula", s.formula.text()},
                           {"initial", s.is_initial},
                           {"parent", s.parent}});
  j["initial"] = m.initial_state();
  j["transitions"] = Json::array();
  for (const auto& t : m.transitions)
    j["transitions"].push_back({{"src", t.src},
                                {"event", t.event},
                                {"guard", t.guard.text()},
                                {"update", t.update.text()},
                                {"dst", t.dst}});
  j["alphabet"] = std::vector<std::string>(m.alphabet.begin(), m.alphabet.end());
  j["support"] = Json::object();
  for (const auto& [k, n] : m.support) j["support"][trans_key_str(k)] = n;
  return j;
}

inline Efsm efsm_from_json(const Json& j) {
  Efsm m;
  for (const auto& p : j.at("params")) {
    ParamId id;
    id.name = p.at("name").get<std::string>();
    const std::string kind = p.at("kind").get<std::string>();
    id.kind = kind == "state" ? ParamKind::StateVar
              : kind == "env" ? ParamKind::Env
                              : ParamKind::Input;
    id.type = domain_from_string(p.at("type").get<std::string>());
    m.params[id.name] = id;
  }
  for (const auto& s : j.at("states")) {
    SymbolicState st;
    st.id = s.at("id").get<int>();
    st.formula = parse_formula(s.at("formula").get<std::string>(), m.params);
    st.is_initial = s.at("initial").get<bool>();
    if (s.contains("parent")) st.parent = s.at("parent").get<int>();
    m.states.push_back(std::move(st));
  }
  for (const auto& t : j.at("transitions")) {
    EfsmTransition tr;
    tr.src = t.at("src").get<int>();
    tr.event = t.at("event").get<std::string>();
    tr.guard = parse_formula(t.at("guard").get<std::string>(), m.params);
    tr.update = parse_formula(t.at("update").get<std::string>(), m.params);
    tr.dst = t.at("dst").get<int>();
    m.transitions.push_back(std::move(tr));
  }
  for (const auto& e : j.at("alphabet")) m.alphabet.insert(e.get<std::string>());
  if (j.contains("support")) {
    for (const auto& [k, v] : j.at("support").items()) {
      auto c1 = k.find(':');
      auto c2 = k.rfind(':');
      TransKey key{std::stoi(k.substr(0, c1)), k.substr(c1 + 1, c2 - c1 - 1),
                   std::stoi(k.substr(c2 + 1))};
      m.support[key] = v.get<std::uint64_t>();
    }
  }
  m.sort_all();
  return m;
}

inline std::string efsm_to_dot(const Efsm& m, const std::string& name = "efsm") {
  std::ostringstream os;
  os << "digraph " << name << " {\n  rankdir=LR;\n";
  for (const auto& s : m.states) {
    std::string label = display_formula(s.formula).text();
    for (auto& c : label)
      if (c == '"') c = '\'';
    os << "  q" << s.id << " [shape=" << (s.is_initial ? "doublecircle" : "circle")
       << " label=\"q" << s.id << "\\n" << label << "\"];\n";
  }
  for (const auto& t : m.transitions) {
    std::string guard = display_formula(t.guard).text();
    for (auto& c : guard)
      if (c == '"') c = '\'';
    os << "  q" << t.src << " -> q" << t.dst << " [label=\"" << t.event << " [" << guard
       << "]\"];\n";
  }
  os << "}\n";
  return os.str();
}

// Model validity: every state satisfiable, states pairwise disjoint,
// exactly one initial.
inline void check_model_invariants(const Efsm& m, const SatBudget& budget = {}) {
  int initials = 0;
  for (const auto& s : m.states) {
    if (s.is_initial) ++initials;
    if (!sat(s.formula, budget).satisfiable)
      fail("InvariantBroken", "state " + std::to_string(s.id) + " is unsatisfiable");
  }
  if (initials != 1) fail("InvariantBroken", "expected exactly one initial state");
  for (std::size_t i = 0; i < m.states.size(); ++i)
    for (std::size_t j = i + 1; j < m.states.size(); ++j)
      if (sat(Formula::conjunction({m.states[i].formula, m.states[j].formula}), budget)
              .satisfiable)
        fail("InvariantBroken", "states " + std::to_string(m.states[i].id) + " and " +
                                    std::to_string(m.states[j].id) + " overlap");
}

}  // namespace specmine
