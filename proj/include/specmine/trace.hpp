#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "specmine/schema.hpp"

namespace specmine {

enum class TxStatus { Success, Reverted };

// One decoded transaction: event name, argument/environment bindings, and
// the touched state before and after.  Reverted steps keep pre == post.
struct ObservationStep {
  std::uint64_t seq = 0;
  std::string event;
  Binding args;        // declared inputs plus environment symbols
  Binding pre_state;   // total over declared state variables
  Binding post_state;
  TxStatus status = TxStatus::Success;

  bool success() const { return status == TxStatus::Success; }
};

struct Trace {
  ContractSchema schema;
  std::vector<ObservationStep> steps;
  ParamTable env_params;  // symbols seen in args but not declared as inputs
};

namespace detail {

inline Value decode_value(const Json& j, DomainType expect, const std::string& where,
                          std::uint64_t line_no) {
  auto bad = [&](const std::string& what) -> Value {
    fail("MalformedLine",
         "line " + std::to_string(line_no) + ": " + what + " at " + where);
  };
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s.rfind("0x", 0) == 0) {
      if (expect == DomainType::Addr || expect == DomainType::Int) {
        if (expect == DomainType::Int) return bad("integer expected, got address");
        return Value::address(s);
      }
      return bad("address not allowed here");
    }
    // decimal string form for integers wider than a JSON number
    if (expect == DomainType::Addr) return bad("address literal must start with 0x");
    try {
      return Value::integer(BigInt(s));
    } catch (...) {
      return bad("unparsable integer '" + s + "'");
    }
  }
  if (j.is_boolean()) {
    if (expect == DomainType::Addr) return bad("boolean where address expected");
    return Value::boolean(j.get<bool>());
  }
  if (j.is_number_integer()) {
    if (expect == DomainType::Addr) return bad("number where address expected");
    Value v = j.is_number_unsigned() ? Value::integer(BigInt(j.get<std::uint64_t>()))
                                     : Value::integer(BigInt(j.get<std::int64_t>()));
    if (expect == DomainType::Bool && v.as_int() != 0 && v.as_int() != 1)
      return bad("boolean must be 0 or 1");
    return v;
  }
  return bad("unsupported value");
}

inline DomainType infer_env_type(const Json& j) {
  if (j.is_string() && j.get<std::string>().rfind("0x", 0) == 0) return DomainType::Addr;
  return DomainType::Int;
}

inline Json encode_value(const Value& v) {
  if (v.is_addr()) return v.as_addr();
  const BigInt& i = v.as_int();
  static const BigInt lo = BigInt(std::numeric_limits<std::int64_t>::min());
  static const BigInt hi = BigInt(std::numeric_limits<std::int64_t>::max());
  if (i >= lo && i <= hi) return static_cast<std::int64_t>(i);
  return i.str();  // decimal string keeps wide values exact
}

}  // namespace detail

// Reads the JSONL history format: one observation per line,
//   {"seq":n,"event":e,"args":{...},"pre":{...},"post":{...},"status":...}
inline Trace parse_history(std::istream& in, const ContractSchema& schema) {
  schema.validate();
  Trace trace;
  trace.schema = schema;
  std::string line;
  std::uint64_t line_no = 0;
  bool have_prev = false;
  std::uint64_t prev_seq = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      fail("MalformedLine", "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("seq") || !j.contains("event") ||
        !j.contains("pre") || !j.contains("post") || !j.contains("status"))
      fail("MalformedLine", "line " + std::to_string(line_no) + ": missing required field");

    ObservationStep step;
    step.seq = j.at("seq").get<std::uint64_t>();
    if (have_prev && step.seq <= prev_seq)
      fail("MalformedLine",
           "line " + std::to_string(line_no) + ": seq not strictly increasing");
    prev_seq = step.seq;
    have_prev = true;

    step.event = j.at("event").get<std::string>();
    const auto* fn = schema.find_function(step.event);
    if (!fn) fail("UnknownEvent", "line " + std::to_string(line_no) + ": '" + step.event + "'");

    const std::string status = j.at("status").get<std::string>();
    if (status == "success")
      step.status = TxStatus::Success;
    else if (status == "reverted")
      step.status = TxStatus::Reverted;
    else
      fail("MalformedLine", "line " + std::to_string(line_no) + ": bad status '" + status + "'");

    if (j.contains("args")) {
      for (const auto& [k, v] : j.at("args").items()) {
        const ParamId* declared = nullptr;
        for (const auto& in_param : fn->inputs)
          if (in_param.name == k) declared = &in_param;
        if (declared) {
          step.args[k] = detail::decode_value(v, declared->type, "args." + k, line_no);
        } else {
          DomainType t = detail::infer_env_type(v);
          auto it = trace.env_params.find(k);
          if (it == trace.env_params.end()) {
            if (schema.find_state_var(k))
              fail("MalformedLine",
                   "line " + std::to_string(line_no) + ": arg '" + k + "' names a state variable");
            trace.env_params[k] = ParamId{k, ParamKind::Env, t};
          } else if (it->second.type != t) {
            fail("MalformedLine",
                 "line " + std::to_string(line_no) + ": env '" + k + "' changes type");
          }
          step.args[k] = detail::decode_value(v, t, "args." + k, line_no);
        }
      }
    }

    for (const char* side : {"pre", "post"}) {
      Binding& dst = side[1] == 'r' ? step.pre_state : step.post_state;
      const Json& obj = j.at(side);
      for (const auto& sv : schema.state_vars) {
        if (!obj.contains(sv.name))
          fail("MissingStateVar",
               "line " + std::to_string(line_no) + ": " + side + " lacks '" + sv.name + "'");
        dst[sv.name] = detail::decode_value(obj.at(sv.name), sv.type,
                                            std::string(side) + "." + sv.name, line_no);
      }
    }

    if (step.status == TxStatus::Reverted && step.pre_state != step.post_state)
      fail("MalformedLine",
           "line " + std::to_string(line_no) + ": reverted step changes state");

    trace.steps.push_back(std::move(step));
  }
  return trace;
}

inline Json step_to_json(const ObservationStep& step) {
  Json j;
  j["seq"] = step.seq;
  j["event"] = step.event;
  j["args"] = Json::object();
  for (const auto& [k, v] : step.args) j["args"][k] = detail::encode_value(v);
  j["pre"] = Json::object();
  for (const auto& [k, v] : step.pre_state) j["pre"][k] = detail::encode_value(v);
  j["post"] = Json::object();
  for (const auto& [k, v] : step.post_state) j["post"][k] = detail::encode_value(v);
  j["status"] = step.status == TxStatus::Success ? "success" : "reverted";
  return j;
}

inline void serialize(const Trace& trace, std::ostream& out) {
  for (const auto& step : trace.steps) out << step_to_json(step).dump() << '\n';
}

// Event names of successful steps, in order; bindings are dropped.
inline std::vector<std::string> project_nonparametric(const Trace& t) {
  std::vector<std::string> out;
  for (const auto& s : t.steps)
    if (s.success()) out.push_back(s.event);
  return out;
}

// Parameter table covering state vars, every declared input, and the given
// environment symbols; used to parse and print formulas consistently.
inline ParamTable full_param_table(const ContractSchema& schema, const ParamTable& env) {
  ParamTable t = env;
  for (const auto& sv : schema.state_vars) t[sv.name] = sv;
  for (const auto& fn : schema.functions)
    for (const auto& in : fn.inputs) t[in.name] = in;
  return t;
}

}  // namespace specmine
