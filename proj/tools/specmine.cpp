// Command-line pipeline: generate synthetic histories, slice them into
// sessions, infer function conditions, mine the state machine, run the
// k-tail baseline, and score models against each other or held-out traces.
// Stages communicate through files only, so each artifact can be inspected
// and each stage rerun in isolation.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "specmine/efsm.hpp"
#include "specmine/invariants.hpp"
#include "specmine/ktail.hpp"
#include "specmine/metrics.hpp"
#include "specmine/miner.hpp"
#include "specmine/simgen.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

int log_level() {
  const char* env = std::getenv("SPECMINE_LOG");
  if (!env) return 0;
  std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[specmine] " << msg << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) specmine::fail("IoError", "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) specmine::fail("IoError", "cannot write '" + path + "'");
  out << content;
}

std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

// Reproducibility record.  The hash covers only the deterministic core
// (inputs, flags, seed, version); timings go to the side file alone so two
// identical runs emit byte-identical artifacts.
class Manifest {
 public:
  explicit Manifest(std::string stage) : stage_(std::move(stage)) {
    core_["stage"] = stage_;
    core_["tool_version"] = kToolVersion;
    start_ = std::chrono::steady_clock::now();
  }

  void input(const std::string& flag, const std::string& path, const std::string& content) {
    core_["inputs"][flag] = {{"path", path}, {"fnv1a", hex64(fnv1a(content))}};
  }

  void flag(const std::string& name, const specmine::Json& value) { core_["flags"][name] = value; }

  std::string hash() const { return hex64(fnv1a(core_.dump())); }

  void write(const std::string& artifact_path) const {
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start_)
                       .count();
    specmine::Json j = core_;
    j["hash"] = hash();
    j["elapsed_ms"] = elapsed;
    write_file(artifact_path + ".manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string stage_;
  specmine::Json core_ = specmine::Json::object();
  std::chrono::steady_clock::time_point start_;
};

struct LoadedTrace {
  specmine::ContractSchema schema;
  specmine::Trace trace;
  specmine::SliceConfig config;
  std::vector<specmine::Slice> slices;
};

LoadedTrace load_and_slice(const std::string& trace_path, const std::string& schema_path,
                           const std::string& config_path, Manifest& man) {
  LoadedTrace out;
  std::string schema_text = read_file(schema_path);
  man.input("schema", schema_path, schema_text);
  out.schema = specmine::ContractSchema::from_json(specmine::Json::parse(schema_text));

  std::string trace_text = read_file(trace_path);
  man.input("trace", trace_path, trace_text);
  std::istringstream in(trace_text);
  out.trace = specmine::parse_history(in, out.schema);

  std::string cfg_text = read_file(config_path);
  man.input("slice-config", config_path, cfg_text);
  out.config = specmine::SliceConfig::from_json(specmine::Json::parse(cfg_text));

  auto result = specmine::slice(out.trace, out.config);
  if (result.no_sessions)
    std::cerr << "specmine: warning: no step binds a binding parameter; no sessions found\n";
  out.slices = std::move(result.slices);
  log_info("sliced " + std::to_string(out.trace.steps.size()) + " steps into " +
           std::to_string(out.slices.size()) + " sessions");
  return out;
}

// Models come in two JSON dialects: the full mined form (with params and
// formulas) and the plain event automaton.  Scoring only needs the latter.
specmine::Fsm load_event_model(const std::string& path, Manifest& man, const std::string& flag) {
  std::string text = read_file(path);
  man.input(flag, path, text);
  specmine::Json j = specmine::Json::parse(text);
  if (j.contains("params")) return specmine::efsm_from_json(j).event_skeleton();
  return specmine::Fsm::from_json(j);
}

int run_gen(const std::string& fixture, std::uint64_t instances, std::uint64_t txs,
            std::uint64_t seed, const std::string& out_path, const std::string& truth_out,
            const std::string& schema_out, const std::string& config_out) {
  auto fixtures = specmine::builtin_fixtures();
  auto it = fixtures.find(fixture);
  if (it == fixtures.end()) specmine::fail("UnknownFixture", "no fixture named '" + fixture + "'");
  const auto& rc = it->second;

  Manifest man("gen");
  man.flag("fixture", fixture);
  man.flag("instances", instances);
  man.flag("txs", txs);
  man.flag("seed", seed);

  specmine::GenProtocol proto{instances, txs, seed};
  specmine::Trace trace = specmine::simulate(rc, proto);
  std::ostringstream os;
  specmine::serialize(trace, os);
  write_file(out_path, os.str());
  man.write(out_path);
  if (!truth_out.empty()) {
    specmine::Json truth = rc.ground_truth.to_json();
    truth["manifest_hash"] = man.hash();
    write_file(truth_out, truth.dump(2) + "\n");
  }
  if (!schema_out.empty()) write_file(schema_out, rc.schema.to_json().dump(2) + "\n");
  if (!config_out.empty()) {
    specmine::SliceConfig cfg;
    cfg.binding_params = {rc.session_param};
    cfg.source = "fixture " + fixture;
    write_file(config_out, cfg.to_json().dump(2) + "\n");
  }
  log_info("generated " + std::to_string(trace.steps.size()) + " transactions");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specmine: session slicing, condition inference, and model mining "
               "over transaction histories"};
  app.require_subcommand(1);

  // ---- gen -----------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a synthetic history from a built-in fixture");
  std::string gen_fixture = "gamechannel";
  std::uint64_t gen_instances = 100, gen_txs = 100, gen_seed = 0;
  std::string gen_out, gen_truth_out, gen_schema_out, gen_config_out;
  bool gen_list = false;
  gen->add_option("--fixture", gen_fixture, "fixture name");
  gen->add_option("--instances", gen_instances, "contract deployments");
  gen->add_option("--txs", gen_txs, "random transactions per deployment");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("-o,--out", gen_out, "output trace (JSONL)");
  gen->add_option("--truth-out", gen_truth_out, "write the fixture's ground-truth automaton");
  gen->add_option("--schema-out", gen_schema_out, "write the fixture's schema");
  gen->add_option("--slice-config-out", gen_config_out, "write a slicing config for the fixture");
  gen->add_flag("--list", gen_list, "list available fixtures");

  // ---- slice ---------------------------------------------------------
  auto* sl = app.add_subcommand("slice", "split an interleaved history into sessions");
  std::string sl_trace, sl_schema, sl_config, sl_out, sl_infer_out;
  std::vector<std::string> sl_tests;
  sl->add_option("--trace", sl_trace, "history JSONL");
  sl->add_option("--schema", sl_schema, "schema JSON");
  sl->add_option("--slice-config", sl_config, "slicing config JSON");
  sl->add_option("-o,--out", sl_out, "output slices JSON");
  sl->add_option("--infer-config", sl_infer_out, "infer a slicing config from test traces");
  sl->add_option("--tests", sl_tests, "per-session test traces (JSONL) for --infer-config");

  // ---- infer ---------------------------------------------------------
  auto* inf = app.add_subcommand("infer", "infer function pre-/post-conditions");
  std::string inf_trace, inf_schema, inf_config, inf_out;
  std::uint64_t inf_min_support = 1;
  inf->add_option("--trace", inf_trace, "history JSONL")->required();
  inf->add_option("--schema", inf_schema, "schema JSON")->required();
  inf->add_option("--slice-config", inf_config, "slicing config JSON")->required();
  inf->add_option("--min-support", inf_min_support, "observations required per event");
  inf->add_option("-o,--out", inf_out, "output conditions JSON")->required();

  // ---- mine ----------------------------------------------------------
  auto* mn = app.add_subcommand("mine", "mine a guarded state machine from a history");
  std::string mn_trace, mn_schema, mn_config, mn_out, mn_report;
  std::uint64_t mn_seed = 0, mn_min_support = 1;
  bool mn_no_loops = false;
  mn->add_option("--trace", mn_trace, "history JSONL")->required();
  mn->add_option("--schema", mn_schema, "schema JSON")->required();
  mn->add_option("--slice-config", mn_config, "slicing config JSON")->required();
  mn->add_option("--min-support", mn_min_support, "observations required per event");
  mn->add_option("--seed", mn_seed, "recorded seed (mining is deterministic)");
  mn->add_flag("--no-loops", mn_no_loops, "forbid self-loop transitions entirely");
  mn->add_option("-o,--out", mn_out, "output model JSON")->required();
  mn->add_option("--report", mn_report, "output mining report JSON");

  // ---- ktail ---------------------------------------------------------
  auto* kt = app.add_subcommand("ktail", "passive k-tail baseline over session words");
  std::string kt_trace, kt_schema, kt_config, kt_out;
  std::uint64_t kt_k = 1;
  kt->add_option("--trace", kt_trace, "history JSONL")->required();
  kt->add_option("--schema", kt_schema, "schema JSON")->required();
  kt->add_option("--slice-config", kt_config, "slicing config JSON")->required();
  kt->add_option("-k", kt_k, "tail length (1 or 2 in the usual setups)");
  kt->add_option("-o,--out", kt_out, "output automaton JSON")->required();

  // ---- eval ----------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "score a mined model against a reference");
  std::string ev_mined, ev_truth, ev_trace, ev_schema, ev_config, ev_out;
  std::uint64_t ev_seed = 0, ev_max_sentences = 10000, ev_min_coverage = 20;
  bool ev_exhaustive = false;
  ev->add_option("--mined,--model", ev_mined, "mined model JSON")->required();
  ev->add_option("--truth", ev_truth, "reference model JSON")->required();
  ev->add_option("--trace", ev_trace, "held-out history for the Acc metric");
  ev->add_option("--schema", ev_schema, "schema JSON (with --trace)");
  ev->add_option("--slice-config", ev_config, "slicing config JSON (with --trace)");
  ev->add_option("--seed", ev_seed, "sentence-generation seed");
  ev->add_option("--max-sentences", ev_max_sentences, "sentence budget");
  ev->add_option("--min-coverage", ev_min_coverage, "per-transition coverage target");
  ev->add_flag("--exhaustive", ev_exhaustive, "exact bounded-language comparison");
  ev->add_option("-o,--out", ev_out, "output score JSON");

  // ---- export --------------------------------------------------------
  auto* ex = app.add_subcommand("export", "re-emit a model as DOT or JSON");
  std::string ex_model, ex_format = "dot", ex_out;
  ex->add_option("--model", ex_model, "model JSON")->required();
  ex->add_option("--format", ex_format, "dot or json")->required();
  ex->add_option("-o,--out", ex_out, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (gen_list) {
        for (const auto& [name, rc] : specmine::builtin_fixtures())
          std::cout << name << ": " << rc.schema.functions.size() << " functions, "
                    << rc.ground_truth.states.size() << " ground-truth states, "
                    << rc.ground_truth.edges.size() << " transitions\n";
        return 0;
      }
      if (gen_out.empty()) {
        std::cerr << "specmine gen: -o/--out is required\n";
        return 2;
      }
      return run_gen(gen_fixture, gen_instances, gen_txs, gen_seed, gen_out, gen_truth_out,
                     gen_schema_out, gen_config_out);
    }

    if (sl->parsed()) {
      Manifest man("slice");
      if (!sl_infer_out.empty()) {
        if (sl_tests.empty() || sl_schema.empty()) {
          std::cerr << "specmine slice: --infer-config needs --tests and --schema\n";
          return 2;
        }
        auto schema = specmine::ContractSchema::from_json(
            specmine::Json::parse(read_file(sl_schema)));
        std::vector<specmine::Trace> tests;
        for (const auto& path : sl_tests) {
          std::string text = read_file(path);
          man.input("tests", path, text);
          std::istringstream in(text);
          tests.push_back(specmine::parse_history(in, schema));
        }
        auto cfg = specmine::infer_binding_hint(tests);
        specmine::Json j = cfg.to_json();
        j["manifest_hash"] = man.hash();
        write_file(sl_infer_out, j.dump(2) + "\n");
        man.write(sl_infer_out);
        return 0;
      }
      if (sl_trace.empty() || sl_schema.empty() || sl_config.empty() || sl_out.empty()) {
        std::cerr << "specmine slice: --trace, --schema, --slice-config and -o are required\n";
        return 2;
      }
      auto loaded = load_and_slice(sl_trace, sl_schema, sl_config, man);
      specmine::Json j;
      j["manifest_hash"] = man.hash();
      j["slices"] = specmine::Json::array();
      for (const auto& s : loaded.slices) j["slices"].push_back(specmine::slice_to_json(s));
      write_file(sl_out, j.dump(2) + "\n");
      man.write(sl_out);
      return 0;
    }

    if (inf->parsed()) {
      Manifest man("infer");
      man.flag("min-support", inf_min_support);
      auto loaded = load_and_slice(inf_trace, inf_schema, inf_config, man);
      specmine::InferOptions opts;
      opts.min_support = inf_min_support;
      auto conds = specmine::infer_conditions(loaded.slices, loaded.schema, opts);
      specmine::Json j = specmine::conditions_to_json(conds);
      j["__manifest_hash"] = man.hash();
      write_file(inf_out, j.dump(2) + "\n");
      man.write(inf_out);
      return 0;
    }

    if (mn->parsed()) {
      Manifest man("mine");
      man.flag("seed", mn_seed);
      man.flag("min-support", mn_min_support);
      man.flag("allow-loops", !mn_no_loops);
      auto loaded = load_and_slice(mn_trace, mn_schema, mn_config, man);
      specmine::InferOptions iopts;
      iopts.min_support = mn_min_support;
      auto conds = specmine::infer_conditions(loaded.slices, loaded.schema, iopts);
      specmine::MinerConfig cfg;
      cfg.allow_loops = !mn_no_loops;
      cfg.seed = mn_seed;
      auto [model, report] =
          specmine::mine(loaded.slices, conds, loaded.schema, loaded.trace.env_params, cfg);
      specmine::Json j = specmine::efsm_to_json(model);
      j["manifest_hash"] = man.hash();
      write_file(mn_out, j.dump(2) + "\n");
      man.write(mn_out);
      if (!mn_report.empty()) {
        specmine::Json rj = report.to_json(model);
        rj["manifest_hash"] = man.hash();
        write_file(mn_report, rj.dump(2) + "\n");
      }
      log_info("mined " + std::to_string(model.states.size()) + " states, " +
               std::to_string(model.transitions.size()) + " transitions after " +
               std::to_string(report.rmpath_count) + " refinements");
      return 0;
    }

    if (kt->parsed()) {
      Manifest man("ktail");
      man.flag("k", kt_k);
      auto loaded = load_and_slice(kt_trace, kt_schema, kt_config, man);
      auto words = specmine::slice_words(loaded.slices);
      auto fsm = specmine::ktail(words, kt_k);
      specmine::Json j = fsm.to_json();
      j["manifest_hash"] = man.hash();
      write_file(kt_out, j.dump(2) + "\n");
      man.write(kt_out);
      return 0;
    }

    if (ev->parsed()) {
      Manifest man("eval");
      man.flag("seed", ev_seed);
      man.flag("max-sentences", ev_max_sentences);
      man.flag("min-coverage", ev_min_coverage);
      man.flag("exhaustive", ev_exhaustive);
      auto mined = load_event_model(ev_mined, man, "mined");
      auto truth = load_event_model(ev_truth, man, "truth");
      specmine::Score s;
      if (ev_exhaustive) {
        s = specmine::exhaustive_score(mined, truth);
      } else {
        specmine::GenPolicy pol;
        pol.max_sentences = ev_max_sentences;
        pol.min_transition_coverage = ev_min_coverage;
        pol.seed = ev_seed;
        s = specmine::score(mined, truth, pol);
      }
      if (!ev_trace.empty()) {
        if (ev_schema.empty() || ev_config.empty()) {
          std::cerr << "specmine eval: --trace needs --schema and --slice-config\n";
          return 2;
        }
        auto loaded = load_and_slice(ev_trace, ev_schema, ev_config, man);
        s.acc = specmine::accuracy(mined, loaded.slices);
      }
      specmine::Json j = s.to_json();
      j["manifest_hash"] = man.hash();
      std::string text = j.dump(2) + "\n";
      if (ev_out.empty())
        std::cout << text;
      else {
        write_file(ev_out, text);
        man.write(ev_out);
      }
      return 0;
    }

    if (ex->parsed()) {
      Manifest man("export");
      std::string text = read_file(ex_model);
      man.input("model", ex_model, text);
      specmine::Json j = specmine::Json::parse(text);
      if (ex_format == "dot") {
        if (j.contains("params"))
          write_file(ex_out, specmine::efsm_to_dot(specmine::efsm_from_json(j)));
        else
          write_file(ex_out, specmine::Fsm::from_json(j).to_dot());
      } else if (ex_format == "json") {
        if (j.contains("params")) {
          specmine::Json out = specmine::efsm_to_json(specmine::efsm_from_json(j));
          out["manifest_hash"] = man.hash();
          write_file(ex_out, out.dump(2) + "\n");
        } else {
          write_file(ex_out, specmine::Fsm::from_json(j).to_json().dump(2) + "\n");
        }
      } else {
        std::cerr << "specmine export: --format must be dot or json\n";
        return 2;
      }
      man.write(ex_out);
      return 0;
    }
  } catch (const specmine::Error& e) {
    std::cerr << "specmine: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "specmine: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
