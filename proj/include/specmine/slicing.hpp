#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specmine/trace.hpp"

namespace specmine {

// Configuration for parametric trace slicing.  binding_params name the
// session-identifying inputs.  key_source lets creation events, which do not
// take the session id as an input, derive it from a state expression
// ("pre:<var>" or "post:<var>").  Events that bind no binding parameter are
// dropped by default; with drop_unbound=false they join every slice, which
// matches the textbook projection exactly.
struct SliceConfig {
  std::vector<std::string> binding_params;
  std::map<std::string, std::string> key_source;
  bool drop_unbound = true;
  std::string source;

  static SliceConfig from_json(const Json& j) {
    SliceConfig c;
    for (const auto& p : j.at("binding_params")) c.binding_params.push_back(p.get<std::string>());
    if (c.binding_params.empty())
      fail("MalformedConfig", "binding_params must be nonempty");
    if (j.contains("key_source"))
      for (const auto& [k, v] : j.at("key_source").items())
        c.key_source[k] = v.get<std::string>();
    if (j.contains("drop_unbound")) c.drop_unbound = j.at("drop_unbound").get<bool>();
    if (j.contains("source")) c.source = j.at("source").get<std::string>();
    return c;
  }

  Json to_json() const {
    Json j;
    j["binding_params"] = binding_params;
    if (!key_source.empty()) {
      j["key_source"] = Json::object();
      for (const auto& [k, v] : key_source) j["key_source"][k] = v;
    }
    j["drop_unbound"] = drop_unbound;
    if (!source.empty()) j["source"] = source;
    return j;
  }
};

struct SliceKey {
  Binding values;
  int run = 0;

  friend bool operator<(const SliceKey& a, const SliceKey& b) {
    if (a.values != b.values) return a.values < b.values;
    return a.run < b.run;
  }
  friend bool operator==(const SliceKey& a, const SliceKey& b) {
    return a.values == b.values && a.run == b.run;
  }
};

struct Slice {
  SliceKey key;
  std::vector<ObservationStep> steps;
};

struct SliceResult {
  std::vector<Slice> slices;
  bool no_sessions = false;
};

// theta' is less informative than theta: wherever theta' is defined, theta
// is defined and agrees.  The empty binding is below everything.
inline bool less_informative(const Binding& lesser, const Binding& greater) {
  for (const auto& [k, v] : lesser) {
    auto it = greater.find(k);
    if (it == greater.end() || !(it->second == v)) return false;
  }
  return true;
}

namespace detail {

inline std::optional<Value> derived_key_value(const ObservationStep& step,
                                              const std::string& expr) {
  auto colon = expr.find(':');
  if (colon == std::string::npos)
    fail("MalformedConfig", "key_source expression '" + expr + "' must be pre:<var> or post:<var>");
  std::string side = expr.substr(0, colon);
  std::string var = expr.substr(colon + 1);
  const Binding& state = side == "pre" ? step.pre_state
                         : side == "post"
                             ? step.post_state
                             : (fail("MalformedConfig", "key_source side '" + side + "'"), step.pre_state);
  auto it = state.find(var);
  if (it == state.end())
    fail("MalformedConfig", "key_source variable '" + var + "' not a state variable");
  return it->second;
}

// Projection of a step's binding onto the slicing parameters, including any
// key_source derivation for creation events.
inline Binding slicing_binding(const ObservationStep& step, const SliceConfig& cfg) {
  Binding b;
  for (const auto& p : cfg.binding_params) {
    auto it = step.args.find(p);
    if (it != step.args.end()) b[p] = it->second;
  }
  auto ks = cfg.key_source.find(step.event);
  if (ks != cfg.key_source.end() && b.empty()) {
    if (cfg.binding_params.size() != 1)
      fail("MalformedConfig", "key_source requires a single binding parameter");
    if (auto v = derived_key_value(step, ks->second)) b[cfg.binding_params[0]] = *v;
  }
  return b;
}

}  // namespace detail

// Splits an interleaved history into per-session slices.  Only successful
// steps participate; reverts carry no state transition.  A key reused after
// its session ended (creation event seen again) starts a fresh run.
inline SliceResult slice(const Trace& t, const SliceConfig& cfg) {
  if (cfg.binding_params.empty()) fail("MalformedConfig", "binding_params must be nonempty");

  struct Pending {
    Binding binding;  // projection onto binding params (possibly partial)
    const ObservationStep* step;
    bool session_start;
  };
  std::vector<Pending> relevant;
  std::vector<const ObservationStep*> unbound;
  std::set<Binding> keys;

  for (const auto& step : t.steps) {
    if (!step.success()) continue;
    Binding b = detail::slicing_binding(step, cfg);
    if (b.empty()) {
      unbound.push_back(&step);
      continue;
    }
    bool starts = cfg.key_source.count(step.event) > 0;
    if (b.size() == cfg.binding_params.size()) keys.insert(b);
    relevant.push_back(Pending{std::move(b), &step, starts});
  }

  if (keys.empty()) return SliceResult{{}, true};

  std::map<SliceKey, std::vector<const ObservationStep*>> buckets;
  std::map<Binding, int> current_run;
  for (const auto& p : relevant) {
    for (const auto& key : keys) {
      if (!less_informative(p.binding, key)) continue;
      auto [it, fresh] = current_run.try_emplace(key, 0);
      bool exists = buckets.count(SliceKey{key, it->second}) > 0;
      if (p.session_start && exists) ++it->second;
      buckets[SliceKey{key, it->second}].push_back(p.step);
      (void)fresh;
    }
  }
  if (!cfg.drop_unbound) {
    for (auto& [key, steps] : buckets)
      for (const auto* s : unbound) steps.push_back(s);
  }

  SliceResult result;
  for (auto& [key, steps] : buckets) {
    std::sort(steps.begin(), steps.end(),
              [](const ObservationStep* a, const ObservationStep* b) { return a->seq < b->seq; });
    Slice s;
    s.key = key;
    for (const auto* p : steps) s.steps.push_back(*p);
    result.slices.push_back(std::move(s));
  }
  return result;
}

// Scans per-session test traces for inputs that stay constant inside every
// trace but differ across traces; those are the session-identifying
// parameters a slicing configuration needs.
inline SliceConfig infer_binding_hint(const std::vector<Trace>& test_traces) {
  if (test_traces.empty()) fail("NoStableParam", "no test traces given");

  std::set<std::string> input_names;
  for (const auto& t : test_traces)
    for (const auto& fn : t.schema.functions)
      for (const auto& in : fn.inputs) input_names.insert(in.name);

  std::vector<std::string> chosen;
  for (const auto& name : input_names) {
    bool constant_everywhere = true;
    std::set<Value> per_trace_values;
    int traces_binding = 0;
    for (const auto& t : test_traces) {
      std::set<Value> seen;
      for (const auto& step : t.steps) {
        if (!step.success()) continue;
        auto it = step.args.find(name);
        if (it != step.args.end()) seen.insert(it->second);
      }
      if (seen.size() > 1) {
        constant_everywhere = false;
        break;
      }
      if (seen.size() == 1) {
        ++traces_binding;
        per_trace_values.insert(*seen.begin());
      }
    }
    if (constant_everywhere && traces_binding >= 2 && per_trace_values.size() >= 2)
      chosen.push_back(name);
  }
  if (chosen.empty())
    fail("NoStableParam", "no input is per-trace constant and cross-trace varying");
  std::sort(chosen.begin(), chosen.end());
  SliceConfig cfg;
  cfg.binding_params = std::move(chosen);
  cfg.source = "inferred from test traces";
  return cfg;
}

inline Json slice_to_json(const Slice& s) {
  Json j;
  j["key"] = Json::object();
  for (const auto& [k, v] : s.key.values) j["key"][k] = detail::encode_value(v);
  j["run"] = s.key.run;
  j["steps"] = Json::array();
  for (const auto& st : s.steps) j["steps"].push_back(step_to_json(st));
  return j;
}

}  // namespace specmine
