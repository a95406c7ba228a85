#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "specmine/fsm.hpp"
#include "specmine/slicing.hpp"

namespace specmine {

using Word = std::vector<std::string>;

// Prefix-tree acceptor: a trie over the training words.  State 0 is the
// root; nodes are numbered in BFS order of insertion paths.
struct Pta {
  Fsm machine;  // deterministic tree

  static Pta build(const std::vector<Word>& words) {
    Pta p;
    p.machine.states.push_back(0);
    p.machine.initial = 0;
    std::map<std::pair<int, std::string>, int> child;
    int next = 1;
    for (const auto& w : words) {
      int cur = 0;
      for (const auto& ev : w) {
        auto it = child.find({cur, ev});
        if (it == child.end()) {
          int id = next++;
          p.machine.states.push_back(id);
          p.machine.edges.push_back(Fsm::Edge{cur, ev, id});
          it = child.emplace(std::pair<int, std::string>{cur, ev}, id).first;
        }
        cur = it->second;
      }
    }
    p.machine.normalize();
    return p;
  }

  std::size_t node_count() const { return machine.states.size(); }
};

inline Pta build_pta(const std::vector<Word>& words) { return Pta::build(words); }

namespace detail {

// Future behaviors of a state up to depth k: the prefix-closed set of event
// sequences that label paths out of it.
inline std::set<Word> tail_set(const Fsm& m, int state, std::size_t k) {
  std::set<Word> out;
  std::set<std::pair<int, Word>> frontier{{state, {}}};
  out.insert({});
  for (std::size_t depth = 0; depth < k && !frontier.empty(); ++depth) {
    std::set<std::pair<int, Word>> next;
    for (const auto& [src, word] : frontier) {
      for (const auto& e : m.edges) {
        if (e.src != src) continue;
        Word w = word;
        w.push_back(e.event);
        out.insert(w);
        next.insert({e.dst, std::move(w)});
      }
    }
    frontier = std::move(next);
  }
  return out;
}

inline void merge_states(Fsm& m, int keep, int drop) {
  for (auto& e : m.edges) {
    if (e.src == drop) e.src = keep;
    if (e.dst == drop) e.dst = keep;
  }
  if (m.initial == drop) m.initial = keep;
  m.states.erase(std::remove(m.states.begin(), m.states.end(), drop), m.states.end());
  m.normalize();
}

}  // namespace detail

// Classic iterated k-tails: repeatedly merge the first state pair (in BFS
// node order) whose length-<=k futures coincide, recomputing tails on the
// merged machine, until no pair matches.
inline Fsm ktail(const std::vector<Word>& words, std::size_t k) {
  if (k < 1) fail("MalformedConfig", "k-tail requires k >= 1");
  Fsm m = build_pta(words).machine;
  bool merged = true;
  while (merged) {
    merged = false;
    std::map<int, std::set<Word>> tails;
    for (int s : m.states) tails[s] = detail::tail_set(m, s, k);
    for (std::size_t i = 0; i < m.states.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < m.states.size() && !merged; ++j) {
        int a = m.states[i];
        int b = m.states[j];
        if (tails.at(a) == tails.at(b)) {
          detail::merge_states(m, a, b);
          merged = true;
        }
      }
    }
  }
  return m;
}

inline std::vector<Word> slice_words(const std::vector<Slice>& slices) {
  std::vector<Word> words;
  for (const auto& s : slices) {
    Word w;
    for (const auto& st : s.steps)
      if (st.success()) w.push_back(st.event);
    words.push_back(std::move(w));
  }
  return words;
}

}  // namespace specmine
