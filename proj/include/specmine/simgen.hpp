#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "specmine/fsm.hpp"
#include "specmine/rng.hpp"
#include "specmine/trace.hpp"

namespace specmine {

// Executable reference model: guards and effects mirror the contract source,
// and ground_truth is the event automaton its sessions realize.  simulate()
// drives it with random transactions the way a black-box fuzzer would.
struct RefFunction {
  std::string name;
  bool creates_session = false;
  bool payable = false;                  // sample and emit msg.value
  std::vector<std::string> int_inputs;   // sampled from the small-domain pool
  std::function<bool(const Valuation& state, const Binding& args)> guard;
  std::function<void(Valuation& state, const Binding& args, const BigInt& timestamp)> effect;
};

struct ReferenceContract {
  std::string name;
  ContractSchema schema;
  Fsm ground_truth;
  std::string session_param = "gameId";
  std::vector<std::string> addr_pool;  // pool[0] is the designated server identity
  std::vector<RefFunction> functions;
  std::function<bool(const Valuation& state)> session_closed;
};

struct GenProtocol {
  std::uint64_t instances = 100;
  std::uint64_t txs_per_instance = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (instances == 0 || txs_per_instance == 0)
      fail("MalformedConfig", "protocol counts must be positive");
  }
};

namespace detail {

inline BigInt sample_small_int(Rng& rng) {
  static const BigInt pool[] = {BigInt(0), BigInt(1), BigInt(2), BigInt(3),
                                BigInt("1000000000000000")};
  return pool[rng.below(5)];
}

}  // namespace detail

// Per instance: deploy fresh, run txs_per_instance random transactions, emit
// one observation per transaction (reverted calls included).  Session ids
// are globally unique so slicing on the session parameter recovers sessions
// exactly; each session starts from the all-zero mapping default.
inline Trace simulate(const ReferenceContract& rc, const GenProtocol& proto) {
  proto.validate();
  Trace trace;
  trace.schema = rc.schema;

  Rng master(proto.seed);
  std::vector<Rng> instance_rngs;
  for (std::uint64_t i = 0; i < proto.instances; ++i) instance_rngs.push_back(master.fork());

  BigInt next_session(1);
  std::uint64_t seq = 0;
  BigInt timestamp(1000);
  const Valuation zero = rc.schema.zero_state();

  for (std::uint64_t inst = 0; inst < proto.instances; ++inst) {
    Rng& rng = instance_rngs[inst];
    std::map<BigInt, Valuation> sessions;  // only sessions that ever advanced
    std::vector<BigInt> open;

    for (std::uint64_t tx = 0; tx < proto.txs_per_instance; ++tx) {
      const RefFunction& fn = rc.functions[rng.below(rc.functions.size())];

      Binding args;
      args["caller"] = Value::address(rc.addr_pool[rng.below(rc.addr_pool.size())]);
      args["server"] = Value::address(rc.addr_pool[0]);
      if (fn.payable) args["msg.value"] = Value::integer(detail::sample_small_int(rng));
      for (const auto& in : fn.int_inputs)
        args[in] = Value::integer(detail::sample_small_int(rng));

      BigInt sid;
      if (fn.creates_session) {
        sid = next_session;
      } else if (!open.empty() && rng.below(8) != 0) {
        sid = open[rng.below(open.size())];
      } else {
        sid = 0;  // an id no session ever gets: exercises mapping defaults
      }
      args[rc.session_param] = Value::integer(sid);

      auto it = sessions.find(sid);
      const Valuation& pre = it != sessions.end() ? it->second : zero;
      timestamp += 1;

      ObservationStep step;
      step.seq = seq++;
      step.event = fn.name;
      step.args = args;
      step.pre_state = pre;

      if (fn.guard(pre, args)) {
        Valuation post = pre;
        fn.effect(post, args, timestamp);
        step.post_state = post;
        step.status = TxStatus::Success;
        sessions[sid] = post;
        if (fn.creates_session) {
          next_session += 1;
          open.push_back(sid);
        }
        if (rc.session_closed && rc.session_closed(post))
          open.erase(std::remove(open.begin(), open.end(), sid), open.end());
      } else {
        step.post_state = pre;
        step.status = TxStatus::Reverted;
      }
      trace.steps.push_back(std::move(step));
    }
  }

  // register the env symbols the steps carry
  trace.env_params["caller"] = ParamId{"caller", ParamKind::Env, DomainType::Addr};
  trace.env_params["server"] = ParamId{"server", ParamKind::Env, DomainType::Addr};
  bool any_payable = false;
  bool session_is_input = false;
  for (const auto& fn : rc.functions) {
    if (fn.payable) any_payable = true;
    for (const auto& in : fn.int_inputs)
      if (in == rc.session_param) session_is_input = true;
  }
  for (const auto& fn : rc.schema.functions)
    for (const auto& in : fn.inputs)
      if (in.name == rc.session_param) session_is_input = true;
  if (any_payable)
    trace.env_params["msg.value"] = ParamId{"msg.value", ParamKind::Env, DomainType::Int};
  if (!session_is_input)
    trace.env_params[rc.session_param] =
        ParamId{rc.session_param, ParamKind::Env, DomainType::Int};
  return trace;
}

namespace fixtures {

// Game status levels of the channel contract.
constexpr int kEnded = 0;
constexpr int kActive = 1;
constexpr int kUserEnd = 2;   // user initiated the end
constexpr int kServerEnd = 3; // server initiated the end

inline ReferenceContract gamechannel() {
  ReferenceContract rc;
  rc.name = "gamechannel";
  rc.addr_pool = {"0x5e77e7", "0xa11ce", "0xb0b", "0xca41"};
  rc.session_param = "gameId";

  auto iv = [](const Valuation& s, const char* k) -> const BigInt& {
    return s.at(k).as_int();
  };
  auto is_server = [](const Binding& a) {
    return a.at("caller").as_addr() == a.at("server").as_addr();
  };
  auto set_int = [](Valuation& s, const char* k, const BigInt& v) {
    s[k] = Value::integer(v);
  };

  ParamId game_id{"gameId", ParamKind::Input, DomainType::Int};
  ParamId round_arg{"_roundId", ParamKind::Input, DomainType::Int};

  rc.schema.state_vars = {
      ParamId{"status", ParamKind::StateVar, DomainType::Int},
      ParamId{"roundId", ParamKind::StateVar, DomainType::Int},
      ParamId{"endInitiatedTime", ParamKind::StateVar, DomainType::Int},
      ParamId{"stake", ParamKind::StateVar, DomainType::Int},
  };
  rc.schema.functions = {
      {"createGame", {}},
      {"serverEndGame", {game_id}},
      {"serverForceGameEnd", {game_id}},
      {"userCancelActiveGame", {game_id}},
      {"serverCancelActiveGame", {game_id}},
      {"serverEndGameConflict", {round_arg, game_id}},
      {"userEndGameConflict", {round_arg, game_id}},
  };

  RefFunction create;
  create.name = "createGame";
  create.creates_session = true;
  create.payable = true;
  create.guard = [iv](const Valuation& s, const Binding& a) {
    return iv(s, "status") == kEnded && iv(s, "stake") == 0 && a.at("msg.value").as_int() > 0;
  };
  create.effect = [set_int](Valuation& s, const Binding& a, const BigInt&) {
    set_int(s, "status", kActive);
    set_int(s, "stake", a.at("msg.value").as_int());
  };

  RefFunction server_end;
  server_end.name = "serverEndGame";
  server_end.guard = [iv, is_server](const Valuation& s, const Binding& a) {
    return is_server(a) && iv(s, "status") == kActive;
  };
  server_end.effect = [set_int](Valuation& s, const Binding&, const BigInt&) {
    set_int(s, "status", kEnded);
  };

  RefFunction force_end;
  force_end.name = "serverForceGameEnd";
  force_end.guard = [iv, is_server](const Valuation& s, const Binding& a) {
    return is_server(a) && iv(s, "status") == kServerEnd;
  };
  force_end.effect = [set_int](Valuation& s, const Binding&, const BigInt&) {
    set_int(s, "status", kEnded);
  };

  RefFunction user_cancel;
  user_cancel.name = "userCancelActiveGame";
  user_cancel.guard = [iv](const Valuation& s, const Binding&) {
    return iv(s, "status") == kActive ||
           (iv(s, "status") == kServerEnd && iv(s, "roundId") == 0);
  };
  user_cancel.effect = [iv, set_int](Valuation& s, const Binding&, const BigInt& ts) {
    if (iv(s, "status") == kActive) {
      set_int(s, "status", kUserEnd);
      set_int(s, "endInitiatedTime", ts);
    } else {
      set_int(s, "status", kEnded);
    }
  };

  RefFunction server_cancel;
  server_cancel.name = "serverCancelActiveGame";
  server_cancel.guard = [iv, is_server](const Valuation& s, const Binding& a) {
    if (!is_server(a)) return false;
    return iv(s, "status") == kActive ||
           (iv(s, "status") == kUserEnd && iv(s, "roundId") == 0);
  };
  server_cancel.effect = [iv, set_int](Valuation& s, const Binding&, const BigInt& ts) {
    if (iv(s, "status") == kActive) {
      set_int(s, "status", kServerEnd);
      set_int(s, "endInitiatedTime", ts);
    } else {
      set_int(s, "status", kEnded);
    }
  };

  RefFunction server_conflict;
  server_conflict.name = "serverEndGameConflict";
  server_conflict.int_inputs = {"_roundId"};
  server_conflict.guard = [iv, is_server](const Valuation& s, const Binding& a) {
    if (!is_server(a)) return false;
    const BigInt& r = a.at("_roundId").as_int();
    if (r <= 0) return false;
    const BigInt& st = iv(s, "status");
    if (st == kUserEnd && iv(s, "roundId") == r) return true;
    return st == kActive || (st == kUserEnd && iv(s, "roundId") < r);
  };
  server_conflict.effect = [iv, set_int](Valuation& s, const Binding& a, const BigInt& ts) {
    const BigInt& r = a.at("_roundId").as_int();
    if (iv(s, "status") == kUserEnd && iv(s, "roundId") == r) {
      set_int(s, "status", kEnded);
    } else {
      set_int(s, "status", kServerEnd);
      set_int(s, "endInitiatedTime", ts);
      set_int(s, "roundId", r);
    }
  };

  RefFunction user_conflict;
  user_conflict.name = "userEndGameConflict";
  user_conflict.int_inputs = {"_roundId"};
  user_conflict.guard = [iv](const Valuation& s, const Binding& a) {
    const BigInt& r = a.at("_roundId").as_int();
    if (r <= 0) return false;
    const BigInt& st = iv(s, "status");
    if (st == kServerEnd && iv(s, "roundId") == r) return true;
    return st == kActive || (st == kServerEnd && iv(s, "roundId") < r);
  };
  user_conflict.effect = [iv, set_int](Valuation& s, const Binding& a, const BigInt& ts) {
    const BigInt& r = a.at("_roundId").as_int();
    if (iv(s, "status") == kServerEnd && iv(s, "roundId") == r) {
      set_int(s, "status", kEnded);
    } else {
      set_int(s, "status", kUserEnd);
      set_int(s, "endInitiatedTime", ts);
      set_int(s, "roundId", r);
    }
  };

  rc.functions = {create,        server_end,      force_end,     user_cancel,
                  server_cancel, server_conflict, user_conflict};
  rc.session_closed = [iv](const Valuation& s) { return iv(s, "status") == kEnded; };

  // Session-level behavior: 0 genesis, 1 active, 2 server-ended pending
  // (round 0), 3 user-ended pending (round 0), 4 server-ended (round > 0),
  // 5 user-ended (round > 0), 6 terminal.
  Fsm& gt = rc.ground_truth;
  gt.states = {0, 1, 2, 3, 4, 5, 6};
  gt.initial = 0;
  gt.edges = {
      {0, "createGame", 1},
      {1, "serverEndGame", 6},
      {1, "serverCancelActiveGame", 2},
      {1, "userCancelActiveGame", 3},
      {1, "serverEndGameConflict", 4},
      {1, "userEndGameConflict", 5},
      {2, "userCancelActiveGame", 6},
      {2, "serverForceGameEnd", 6},
      {2, "userEndGameConflict", 5},
      {3, "serverCancelActiveGame", 6},
      {3, "serverEndGameConflict", 4},
      {4, "serverForceGameEnd", 6},
      {4, "userEndGameConflict", 6},
      {4, "userEndGameConflict", 5},
      {5, "serverEndGameConflict", 6},
      {5, "serverEndGameConflict", 4},
  };
  gt.normalize();
  return rc;
}

inline ReferenceContract rps() {
  ReferenceContract rc;
  rc.name = "rps";
  rc.addr_pool = {"0xdea1e5", "0xa11ce", "0xb0b", "0xca41"};
  rc.session_param = "gameId";

  auto iv = [](const Valuation& s, const char* k) -> const BigInt& {
    return s.at(k).as_int();
  };
  auto set_int = [](Valuation& s, const char* k, const BigInt& v) {
    s[k] = Value::integer(v);
  };

  ParamId game_id{"gameId", ParamKind::Input, DomainType::Int};
  rc.schema.state_vars = {
      ParamId{"stage", ParamKind::StateVar, DomainType::Int},
      ParamId{"pot", ParamKind::StateVar, DomainType::Int},
  };
  rc.schema.functions = {
      {"createGame", {}},
      {"joinGame", {game_id}},
      {"revealGame", {game_id}},
      {"closeGame", {game_id}},
  };

  RefFunction create;
  create.name = "createGame";
  create.creates_session = true;
  create.payable = true;
  create.guard = [iv](const Valuation& s, const Binding& a) {
    return iv(s, "stage") == 0 && iv(s, "pot") == 0 && a.at("msg.value").as_int() > 0;
  };
  create.effect = [set_int](Valuation& s, const Binding& a, const BigInt&) {
    set_int(s, "stage", 1);
    set_int(s, "pot", a.at("msg.value").as_int());
  };

  RefFunction join;
  join.name = "joinGame";
  join.payable = true;
  join.guard = [iv](const Valuation& s, const Binding& a) {
    return iv(s, "stage") == 1 && a.at("msg.value").as_int() == iv(s, "pot");
  };
  join.effect = [iv, set_int](Valuation& s, const Binding& a, const BigInt&) {
    set_int(s, "stage", 2);
    set_int(s, "pot", iv(s, "pot") + a.at("msg.value").as_int());
  };

  RefFunction reveal;
  reveal.name = "revealGame";
  reveal.guard = [iv](const Valuation& s, const Binding&) { return iv(s, "stage") == 2; };
  reveal.effect = [set_int](Valuation& s, const Binding&, const BigInt&) {
    set_int(s, "stage", 3);
  };

  RefFunction close;
  close.name = "closeGame";
  close.guard = [iv](const Valuation& s, const Binding&) {
    return iv(s, "stage") == 1 || iv(s, "stage") == 2;
  };
  close.effect = [set_int](Valuation& s, const Binding&, const BigInt&) {
    set_int(s, "stage", 3);
  };

  rc.functions = {create, join, reveal, close};
  rc.session_closed = [iv](const Valuation& s) { return iv(s, "stage") == 3; };

  Fsm& gt = rc.ground_truth;
  gt.states = {0, 1, 2, 3};
  gt.initial = 0;
  gt.edges = {
      {0, "createGame", 1}, {1, "joinGame", 2},  {1, "closeGame", 3},
      {2, "revealGame", 3}, {2, "closeGame", 3},
  };
  gt.normalize();
  return rc;
}

}  // namespace fixtures

inline std::map<std::string, ReferenceContract> builtin_fixtures() {
  std::map<std::string, ReferenceContract> m;
  m.emplace("gamechannel", fixtures::gamechannel());
  m.emplace("rps", fixtures::rps());
  return m;
}

}  // namespace specmine
