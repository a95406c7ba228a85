#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "specmine/schema.hpp"

namespace specmine {

// Event-labeled automaton with prefix-closed acceptance: a word is accepted
// iff it labels some path from the initial state.  Nondeterminism is allowed
// (k-tail merging and mined models both produce it).
struct Fsm {
  struct Edge {
    int src;
    std::string event;
    int dst;

    friend bool operator<(const Edge& a, const Edge& b) {
      return std::tie(a.src, a.event, a.dst) < std::tie(b.src, b.event, b.dst);
    }
    friend bool operator==(const Edge& a, const Edge& b) {
      return a.src == b.src && a.event == b.event && a.dst == b.dst;
    }
  };

  std::vector<int> states;
  int initial = 0;
  std::vector<Edge> edges;

  void normalize() {
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }

  std::set<std::string> alphabet() const {
    std::set<std::string> a;
    for (const auto& e : edges) a.insert(e.event);
    return a;
  }

  std::vector<const Edge*> outgoing(int state) const {
    std::vector<const Edge*> out;
    for (const auto& e : edges)
      if (e.src == state) out.push_back(&e);
    return out;
  }

  bool accepts(const std::vector<std::string>& word) const {
    std::set<int> current{initial};
    for (const auto& ev : word) {
      std::set<int> next;
      for (const auto& e : edges)
        if (e.event == ev && current.count(e.src)) next.insert(e.dst);
      if (next.empty()) return false;
      current = std::move(next);
    }
    return true;
  }

  std::set<int> reachable() const {
    std::set<int> seen{initial};
    std::vector<int> frontier{initial};
    while (!frontier.empty()) {
      int s = frontier.back();
      frontier.pop_back();
      for (const auto& e : edges)
        if (e.src == s && seen.insert(e.dst).second) frontier.push_back(e.dst);
    }
    return seen;
  }

  // All accepted words of length <= max_len (prefix-closed language cut).
  // Guarded so a pathological model cannot blow up the caller.
  std::vector<std::vector<std::string>> language(std::size_t max_len,
                                                 std::size_t cap = 1000000) const {
    std::vector<std::vector<std::string>> out;
    struct Item {
      std::vector<std::string> word;
      std::set<int> states;
    };
    std::vector<Item> frontier{{{}, {initial}}};
    out.push_back({});
    auto events = alphabet();
    for (std::size_t len = 0; len < max_len && !frontier.empty(); ++len) {
      std::vector<Item> next_frontier;
      for (const auto& item : frontier) {
        for (const auto& ev : events) {
          std::set<int> next;
          for (const auto& e : edges)
            if (e.event == ev && item.states.count(e.src)) next.insert(e.dst);
          if (next.empty()) continue;
          Item ni;
          ni.word = item.word;
          ni.word.push_back(ev);
          ni.states = std::move(next);
          out.push_back(ni.word);
          if (out.size() > cap) fail("LanguageTooLarge", "bounded language enumeration overflow");
          next_frontier.push_back(std::move(ni));
        }
      }
      frontier = std::move(next_frontier);
    }
    return out;
  }

  Json to_json() const {
    Json j;
    j["initial"] = initial;
    j["states"] = Json::array();
    for (int s : states) j["states"].push_back({{"id", s}});
    j["transitions"] = Json::array();
    for (const auto& e : edges)
      j["transitions"].push_back({{"src", e.src}, {"event", e.event}, {"dst", e.dst}});
    return j;
  }

  static Fsm from_json(const Json& j) {
    Fsm m;
    m.initial = j.at("initial").get<int>();
    for (const auto& s : j.at("states")) m.states.push_back(s.at("id").get<int>());
    for (const auto& t : j.at("transitions"))
      m.edges.push_back(Edge{t.at("src").get<int>(), t.at("event").get<std::string>(),
                             t.at("dst").get<int>()});
    m.normalize();
    return m;
  }

  std::string to_dot(const std::string& name = "fsm") const {
    std::ostringstream os;
    os << "digraph " << name << " {\n  rankdir=LR;\n";
    for (int s : states) {
      os << "  q" << s << " [shape=" << (s == initial ? "doublecircle" : "circle")
         << " label=\"q" << s << "\"];\n";
    }
    for (const auto& e : edges)
      os << "  q" << e.src << " -> q" << e.dst << " [label=\"" << e.event << "\"];\n";
    os << "}\n";
    return os.str();
  }
};

// Exact language equality of two prefix-closed automata via a product
// subset construction; returns a separating word when they differ.
inline std::optional<std::vector<std::string>> language_difference(const Fsm& a, const Fsm& b) {
  std::set<std::string> events = a.alphabet();
  for (const auto& e : b.alphabet()) events.insert(e);

  using Pair = std::pair<std::set<int>, std::set<int>>;
  std::map<Pair, std::vector<std::string>> seen;
  std::vector<Pair> frontier;
  Pair start{{a.initial}, {b.initial}};
  seen[start] = {};
  frontier.push_back(start);
  while (!frontier.empty()) {
    Pair cur = frontier.back();
    frontier.pop_back();
    const auto word = seen.at(cur);
    for (const auto& ev : events) {
      std::set<int> na, nb;
      for (const auto& e : a.edges)
        if (e.event == ev && cur.first.count(e.src)) na.insert(e.dst);
      for (const auto& e : b.edges)
        if (e.event == ev && cur.second.count(e.src)) nb.insert(e.dst);
      if (na.empty() && nb.empty()) continue;
      std::vector<std::string> w = word;
      w.push_back(ev);
      if (na.empty() != nb.empty()) return w;  // one side accepts, the other rejects
      Pair next{std::move(na), std::move(nb)};
      if (seen.emplace(next, w).second) frontier.push_back(std::move(next));
    }
  }
  return std::nullopt;
}

inline bool same_language(const Fsm& a, const Fsm& b) {
  return !language_difference(a, b).has_value();
}

// Structural isomorphism by brute-force permutation matching; intended for
// the small hand-derived fixtures only.
inline bool isomorphic(const Fsm& a, const Fsm& b) {
  auto ra = a.reachable();
  auto rb = b.reachable();
  if (ra.size() != rb.size()) return false;
  std::vector<int> va(ra.begin(), ra.end());
  std::vector<int> vb(rb.begin(), rb.end());

  auto edge_set = [](const Fsm& m, const std::set<int>& keep) {
    std::set<std::tuple<int, std::string, int>> es;
    for (const auto& e : m.edges)
      if (keep.count(e.src) && keep.count(e.dst)) es.insert({e.src, e.event, e.dst});
    return es;
  };
  auto ea = edge_set(a, ra);
  auto eb = edge_set(b, rb);
  if (ea.size() != eb.size()) return false;

  std::sort(vb.begin(), vb.end());
  do {
    std::map<int, int> phi;
    for (std::size_t i = 0; i < va.size(); ++i) phi[va[i]] = vb[i];
    if (phi.at(a.initial) != b.initial) continue;
    bool ok = true;
    for (const auto& [s, ev, d] : ea)
      if (!eb.count({phi.at(s), ev, phi.at(d)})) {
        ok = false;
        break;
      }
    if (ok) return true;
  } while (std::next_permutation(vb.begin(), vb.end()));
  return false;
}

}  // namespace specmine
