#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <vector>

#include "specmine/value.hpp"

namespace specmine {

using Json = nlohmann::json;

// Declared shape of a contract: its state variables and interface functions.
// Transaction-environment symbols (msg.value, caller, ...) are not declared
// here; they are discovered from traces and carry ParamKind::Env.
struct ContractSchema {
  struct Function {
    std::string name;
    std::vector<ParamId> inputs;
  };

  std::vector<ParamId> state_vars;
  std::vector<Function> functions;

  const Function* find_function(const std::string& name) const {
    for (const auto& f : functions)
      if (f.name == name) return &f;
    return nullptr;
  }

  const ParamId* find_state_var(const std::string& name) const {
    for (const auto& v : state_vars)
      if (v.name == name) return &v;
    return nullptr;
  }

  Valuation zero_state() const {
    Valuation v;
    for (const auto& sv : state_vars) v[sv.name] = zero_of(sv.type);
    return v;
  }

  void validate() const {
    std::set<std::string> state_names;
    for (const auto& sv : state_vars)
      if (!state_names.insert(sv.name).second)
        fail("MalformedSchema", "duplicate state variable '" + sv.name + "'");
    std::set<std::string> fn_names;
    std::map<std::string, DomainType> input_types;
    for (const auto& f : functions) {
      if (!fn_names.insert(f.name).second)
        fail("MalformedSchema", "duplicate function '" + f.name + "'");
      std::set<std::string> seen;
      for (const auto& in : f.inputs) {
        if (!seen.insert(in.name).second)
          fail("MalformedSchema", "duplicate input '" + in.name + "' on " + f.name);
        if (state_names.count(in.name))
          fail("MalformedSchema", "input '" + in.name + "' shadows a state variable");
        auto it = input_types.find(in.name);
        if (it != input_types.end() && it->second != in.type)
          fail("MalformedSchema", "input '" + in.name + "' declared with conflicting types");
        input_types.emplace(in.name, in.type);
      }
    }
  }

  static ContractSchema from_json(const Json& j) {
    ContractSchema s;
    for (const auto& v : j.at("state_vars")) {
      s.state_vars.push_back(ParamId{v.at("name").get<std::string>(), ParamKind::StateVar,
                                     domain_from_string(v.at("type").get<std::string>())});
    }
    for (const auto& f : j.at("functions")) {
      Function fn;
      fn.name = f.at("name").get<std::string>();
      if (f.contains("inputs"))
        for (const auto& in : f.at("inputs"))
          fn.inputs.push_back(ParamId{in.at("name").get<std::string>(), ParamKind::Input,
                                      domain_from_string(in.at("type").get<std::string>())});
      s.functions.push_back(std::move(fn));
    }
    s.validate();
    return s;
  }

  Json to_json() const {
    Json j;
    j["state_vars"] = Json::array();
    for (const auto& v : state_vars)
      j["state_vars"].push_back({{"name", v.name}, {"type", to_string(v.type)}});
    j["functions"] = Json::array();
    for (const auto& f : functions) {
      Json fj;
      fj["name"] = f.name;
      fj["inputs"] = Json::array();
      for (const auto& in : f.inputs)
        fj["inputs"].push_back({{"name", in.name}, {"type", to_string(in.type)}});
      j["functions"].push_back(std::move(fj));
    }
    return j;
  }
};

}  // namespace specmine
