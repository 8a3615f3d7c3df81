#include "fiova/dq.h"

#include <gtest/gtest.h>

#include <random>

#include "fiova/lexical.h"

namespace fiova::dq {
namespace {

using events::EventSet;
using events::EventSource;
using events::Relationship;
using events::VerdictList;

constexpr Relationship E = Relationship::kEntailment;
constexpr Relationship N = Relationship::kNeutral;
constexpr Relationship C = Relationship::kContradiction;

VerdictList verdicts(std::initializer_list<Relationship> rs) {
  VerdictList out;
  int i = 0;
  for (auto r : rs) out.push_back({"e" + std::to_string(i++), r});
  return out;
}

EventSet set_of(std::size_t n, EventSource source = EventSource::kGroundtruth) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("event " + std::to_string(i));
  return events::make_event_set(names, source);
}

TEST(AutoDq, WorkedExample) {
  const auto gt = verdicts({E, N, E, N, C, E, C});
  const auto cand = verdicts({E, E, E, E, E});
  const auto prf = autodq(gt, cand);
  EXPECT_NEAR(prf.recall, 3.0 / 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(prf.precision, 1.0);
  EXPECT_NEAR(prf.f1, 0.6, 1e-12);
  EXPECT_EQ(prf.flavor, Flavor::kAutoDq);
}

TEST(AutoDq, Extremes) {
  const auto none = autodq(verdicts({N, C}), verdicts({N, N, C}));
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  const auto all = autodq(verdicts({E, E}), verdicts({E}));
  EXPECT_EQ(all.precision, 1.0);
  EXPECT_EQ(all.recall, 1.0);
  EXPECT_EQ(all.f1, 1.0);
  EXPECT_THROW(autodq({}, verdicts({E})), DqError);
}

TEST(FiovaDq, WeightedRecall) {
  events::WeightedEventSet w{set_of(3), {0.5, 0.3, 0.2}, {5, 3, 2}};
  const auto prf = fiova_dq(w, verdicts({E, N, E}), verdicts({N}), {std::nullopt});
  EXPECT_NEAR(prf.recall, 0.7, 1e-12);
  EXPECT_EQ(prf.precision, 0.0);
}

TEST(FiovaDq, Errors) {
  events::WeightedEventSet w{set_of(2), {0.5, 0.5}, {1, 1}};
  EXPECT_THROW(fiova_dq(w, verdicts({E}), verdicts({E}), {0}), DqError);
  EXPECT_THROW(fiova_dq(w, verdicts({E, E}), verdicts({E}), {std::nullopt}), DqError);
  EXPECT_THROW(fiova_dq(w, verdicts({E, E}), verdicts({E}), {2}), DqError);
  EXPECT_THROW(fiova_dq(w, verdicts({E, E}), verdicts({E, E}), {0}), DqError);
}

// Independent evaluation of the declared formulas.
struct OracleResult {
  double p, r, f;
};

OracleResult oracle(const std::vector<double>& w, const std::vector<int>& gt_hit,
                    const std::vector<int>& cand_hit, const std::vector<int>& sup) {
  double r = 0;
  for (std::size_t i = 0; i < w.size(); ++i) r += gt_hit[i] ? w[i] : 0.0;
  double credit = 0;
  for (std::size_t j = 0; j < cand_hit.size(); ++j) {
    if (cand_hit[j]) credit += w.size() * w[sup[j]];
  }
  double p = credit / cand_hit.size();
  if (p > 1) p = 1;
  const double f = (p + r) == 0 ? 0 : 2 * p * r / (p + r);
  return {p, r, f};
}

TEST(FiovaDq, ExhaustiveSmallInstances) {
  std::mt19937 rng(21);
  const Relationship labels[] = {E, N, C};
  long checked = 0;
  for (int ng = 1; ng <= 4; ++ng) {
    for (int nc = 1; nc <= 4; ++nc) {
      int gt_combos = 1, cand_combos = 1;
      for (int i = 0; i < ng; ++i) gt_combos *= 3;
      for (int i = 0; i < nc; ++i) cand_combos *= 3;
      for (int gc = 0; gc < gt_combos; ++gc) {
        for (int cc = 0; cc < cand_combos; ++cc) {
          std::vector<int> supports(ng);
          for (auto& s : supports) s = rng() % 6;
          const auto weighted = events::weights_from_supports(set_of(ng), supports);
          VerdictList gv, cv;
          std::vector<int> gt_hit, cand_hit, sup;
          SupportMap smap;
          for (int i = 0, code = gc; i < ng; ++i, code /= 3) {
            gv.push_back({"g", labels[code % 3]});
            gt_hit.push_back(code % 3 == 0);
          }
          for (int j = 0, code = cc; j < nc; ++j, code /= 3) {
            cv.push_back({"c", labels[code % 3]});
            cand_hit.push_back(code % 3 == 0);
            sup.push_back(rng() % ng);
            smap.push_back(cand_hit.back() ? std::optional<std::size_t>(sup.back())
                                           : std::nullopt);
          }
          const auto got = fiova_dq(weighted, gv, cv, smap);
          const auto want = oracle(weighted.weights, gt_hit, cand_hit, sup);
          ASSERT_NEAR(got.precision, want.p, 1e-12);
          ASSERT_NEAR(got.recall, want.r, 1e-12);
          ASSERT_NEAR(got.f1, want.f, 1e-12);
          ++checked;
        }
      }
    }
  }
  EXPECT_EQ(checked, 14400);
}

TEST(FiovaDq, UniformWeightsReduceToAutoDq) {
  std::mt19937 rng(33);
  const Relationship labels[] = {E, N, C};
  for (int trial = 0; trial < 1000; ++trial) {
    const int ng = 1 + rng() % 6, nc = 1 + rng() % 6;
    VerdictList gv, cv;
    SupportMap smap;
    for (int i = 0; i < ng; ++i) gv.push_back({"g", labels[rng() % 3]});
    for (int j = 0; j < nc; ++j) {
      cv.push_back({"c", labels[rng() % 3]});
      smap.push_back(std::size_t(rng() % ng));
    }
    const auto a = autodq(gv, cv);
    const auto f = fiova_dq(events::uniform_weights(set_of(ng)), gv, cv, smap);
    EXPECT_NEAR(a.precision, f.precision, 1e-12);
    EXPECT_NEAR(a.recall, f.recall, 1e-12);
    EXPECT_NEAR(a.f1, f.f1, 1e-12);
  }
}

TEST(FiovaDq, RecallMonotone) {
  std::mt19937 rng(34);
  for (int trial = 0; trial < 500; ++trial) {
    const int ng = 1 + rng() % 6;
    std::vector<int> supports(ng);
    for (auto& s : supports) s = rng() % 6;
    auto w = events::weights_from_supports(set_of(ng), supports);
    VerdictList gv;
    for (int i = 0; i < ng; ++i) gv.push_back({"g", rng() % 2 ? E : N});
    const VerdictList cv = verdicts({N});
    const SupportMap smap = {std::nullopt};
    const double base = fiova_dq(w, gv, cv, smap).recall;
    const double base_auto = autodq(gv, cv).recall;
    const int flip = rng() % ng;
    if (gv[flip].relationship == N) {
      auto flipped = gv;
      flipped[flip].relationship = E;
      EXPECT_GE(fiova_dq(w, flipped, cv, smap).recall, base);
      EXPECT_GE(autodq(flipped, cv).recall, base_auto);
    }
    // Raising the support of an entailed event never lowers recall.
    const int bump = rng() % ng;
    if (gv[bump].relationship == E) {
      auto more = supports;
      more[bump] += 1 + rng() % 3;
      const auto w2 = events::weights_from_supports(set_of(ng), more);
      EXPECT_GE(fiova_dq(w2, gv, cv, smap).recall, base - 1e-15);
    }
  }
}

TEST(FiovaDq, OutputsInRangeAndF1Law) {
  std::mt19937 rng(35);
  const Relationship labels[] = {E, N, C};
  for (int trial = 0; trial < 1000; ++trial) {
    const int ng = 1 + rng() % 6, nc = 1 + rng() % 6;
    std::vector<int> supports(ng);
    for (auto& s : supports) s = rng() % 6;
    const auto w = events::weights_from_supports(set_of(ng), supports);
    VerdictList gv, cv;
    SupportMap smap;
    for (int i = 0; i < ng; ++i) gv.push_back({"g", labels[rng() % 3]});
    for (int j = 0; j < nc; ++j) {
      cv.push_back({"c", labels[rng() % 3]});
      smap.push_back(std::size_t(rng() % ng));
    }
    const auto prf = fiova_dq(w, gv, cv, smap);
    for (double v : {prf.precision, prf.recall, prf.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const double law = prf.precision + prf.recall > 0
                           ? 2 * prf.precision * prf.recall / (prf.precision + prf.recall)
                           : 0.0;
    EXPECT_EQ(prf.f1, law);
  }
}

TEST(LexicalSupport, ExactMatchAndTieBreak) {
  const auto gt = events::make_event_set(
      {"Silver car drives", "Motorcycle driver falls to ground", "Van stops"},
      EventSource::kGroundtruth);
  EXPECT_EQ(lexical_support("Van stops", gt), 2u);
  EXPECT_EQ(lexical_support("Motorcycle driver falls to ground", gt), 1u);
  EXPECT_EQ(lexical_support("purple elephants dance", gt), 0u);
}

TEST(LexicalSupport, MatchesBruteForce) {
  std::mt19937 rng(36);
  const std::vector<std::string> vocab = {"man", "car", "red", "stops", "dog",
                                          "runs", "a", "the"};
  auto sentence = [&] {
    std::string s;
    for (unsigned k = 0; k < 1 + rng() % 5; ++k) {
      s += (s.empty() ? "" : " ") + vocab[rng() % vocab.size()];
    }
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> gt_events;
    for (unsigned i = 0; i < 1 + rng() % 6; ++i) gt_events.push_back(sentence());
    const auto gt = events::make_event_set(gt_events, EventSource::kGroundtruth);
    const auto cand = sentence();
    std::size_t best = 0;
    double best_f = -1;
    for (std::size_t i = 0; i < gt_events.size(); ++i) {
      // Multiset overlap F1 computed directly.
      const auto a = lexical::words(lexical::tokenize(cand));
      const auto b = lexical::words(lexical::tokenize(gt_events[i]));
      std::vector<bool> used(b.size(), false);
      double overlap = 0;
      for (const auto& x : a) {
        for (std::size_t k = 0; k < b.size(); ++k) {
          if (!used[k] && b[k] == x) {
            used[k] = true;
            ++overlap;
            break;
          }
        }
      }
      const double f = overlap == 0 ? 0 : 2 * overlap / (a.size() + b.size());
      if (f > best_f + 1e-15) {
        best_f = f;
        best = i;
      }
    }
    EXPECT_EQ(lexical_support(cand, gt), best);
  }
}

TEST(LexicalSupport, MapCoversEntailedOnly) {
  const auto gt = set_of(3);
  const auto cand = events::make_event_set({"event 2", "event 0"}, EventSource::kResponse);
  const auto map = lexical_support_map(cand, verdicts({E, N}), gt);
  ASSERT_EQ(map.size(), 2u);
  EXPECT_EQ(map[0], 2u);
  EXPECT_FALSE(map[1]);
}

}  // namespace
}  // namespace fiova::dq
