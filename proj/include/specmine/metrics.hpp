#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "specmine/fsm.hpp"
#include "specmine/rng.hpp"
#include "specmine/slicing.hpp"

namespace specmine {

struct GenPolicy {
  std::uint64_t max_sentences = 10000;
  std::uint64_t min_transition_coverage = 20;
  std::uint64_t max_len_factor = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_sentences == 0 || min_transition_coverage == 0 || max_len_factor == 0)
      fail("MalformedConfig", "generation policy fields must be positive");
  }
};

struct Score {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double acc = -1;  // negative when no test set was scored
  std::uint64_t sentences_used = 0;

  Json to_json() const {
    Json j;
    j["precision"] = precision;
    j["recall"] = recall;
    j["f1"] = f1;
    if (acc >= 0) j["acc"] = acc;
    j["sentences_used"] = sentences_used;
    return j;
  }
};

inline double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

struct GenResult {
  std::vector<std::vector<std::string>> sentences;  // multiset of random walks
  bool coverage_warning = false;  // some transition is unreachable from the start
};

// Seeded random walks from the initial state.  Each step stops with
// probability 1/(avg out-degree + 1), otherwise extends uniformly over the
// enabled edges; walks are capped at max_len_factor times the ground-truth
// transition count.  Generation ends at max_sentences or full transition
// coverage, whichever comes first.
inline GenResult generate_sentences(const Fsm& m, const GenPolicy& pol,
                                    std::uint64_t truth_transition_count) {
  pol.validate();
  GenResult out;
  Rng rng(pol.seed);

  std::map<int, std::vector<const Fsm::Edge*>> outgoing;
  for (const auto& e : m.edges) outgoing[e.src].push_back(&e);

  auto reachable = m.reachable();
  std::set<Fsm::Edge> target_edges;
  for (const auto& e : m.edges) {
    if (reachable.count(e.src))
      target_edges.insert(e);
    else
      out.coverage_warning = true;
  }

  std::uint64_t max_len = pol.max_len_factor * std::max<std::uint64_t>(truth_transition_count, 1);
  double avg_out = m.states.empty()
                       ? 0.0
                       : static_cast<double>(m.edges.size()) / static_cast<double>(m.states.size());
  double stop_p = 1.0 / (avg_out + 1.0);

  std::map<Fsm::Edge, std::uint64_t> covered;
  auto coverage_done = [&]() {
    if (target_edges.empty()) return true;
    for (const auto& e : target_edges) {
      auto it = covered.find(e);
      if (it == covered.end() || it->second < pol.min_transition_coverage) return false;
    }
    return true;
  };

  while (out.sentences.size() < pol.max_sentences) {
    std::vector<std::string> sentence;
    std::set<Fsm::Edge> walked;
    int cur = m.initial;
    while (sentence.size() < max_len) {
      auto it = outgoing.find(cur);
      if (it == outgoing.end() || it->second.empty()) break;
      if (rng.unit() < stop_p) break;
      const Fsm::Edge* e = it->second[rng.below(it->second.size())];
      sentence.push_back(e->event);
      walked.insert(*e);
      cur = e->dst;
    }
    for (const auto& e : walked) ++covered[e];
    out.sentences.push_back(std::move(sentence));
    if (coverage_done()) break;
  }
  return out;
}

// Precision: generated mined sentences accepted by the truth.  Recall: the
// symmetric direction.  Acceptance is prefix-closed and event-level.
inline Score score(const Fsm& mined, const Fsm& truth, const GenPolicy& pol) {
  pol.validate();
  std::uint64_t truth_t = truth.edges.size();

  Rng seeder(pol.seed);
  GenPolicy mined_pol = pol;
  mined_pol.seed = seeder.next();
  GenPolicy truth_pol = pol;
  truth_pol.seed = seeder.next();

  auto gen_m = generate_sentences(mined, mined_pol, truth_t);
  auto gen_t = generate_sentences(truth, truth_pol, truth_t);

  std::uint64_t ok_p = 0;
  for (const auto& w : gen_m.sentences)
    if (truth.accepts(w)) ++ok_p;
  std::uint64_t ok_r = 0;
  for (const auto& w : gen_t.sentences)
    if (mined.accepts(w)) ++ok_r;

  Score s;
  s.precision = gen_m.sentences.empty()
                    ? 0.0
                    : static_cast<double>(ok_p) / static_cast<double>(gen_m.sentences.size());
  s.recall = gen_t.sentences.empty()
                 ? 0.0
                 : static_cast<double>(ok_r) / static_cast<double>(gen_t.sentences.size());
  s.f1 = f1_of(s.precision, s.recall);
  s.sentences_used = gen_m.sentences.size() + gen_t.sentences.size();
  return s;
}

// Exact counterpart over every word of length <= 2 * |T_truth|.
inline Score exhaustive_score(const Fsm& mined, const Fsm& truth) {
  std::size_t max_len = 2 * std::max<std::size_t>(truth.edges.size(), 1);
  auto lang_m = mined.language(max_len);
  auto lang_t = truth.language(max_len);

  std::uint64_t ok_p = 0;
  for (const auto& w : lang_m)
    if (truth.accepts(w)) ++ok_p;
  std::uint64_t ok_r = 0;
  for (const auto& w : lang_t)
    if (mined.accepts(w)) ++ok_r;

  Score s;
  s.precision = lang_m.empty() ? 0.0 : static_cast<double>(ok_p) / lang_m.size();
  s.recall = lang_t.empty() ? 0.0 : static_cast<double>(ok_r) / lang_t.size();
  s.f1 = f1_of(s.precision, s.recall);
  s.sentences_used = lang_m.size() + lang_t.size();
  return s;
}

// Fraction of held-out sessions whose event projection the model accepts.
inline double accuracy(const Fsm& mined, const std::vector<Slice>& test_slices) {
  if (test_slices.empty()) fail("EmptyTestSet", "accuracy needs at least one test slice");
  std::uint64_t ok = 0;
  for (const auto& s : test_slices) {
    std::vector<std::string> word;
    for (const auto& st : s.steps)
      if (st.success()) word.push_back(st.event);
    if (mined.accepts(word)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(test_slices.size());
}

}  // namespace specmine
