#include "fiova/dq.h"

#include <algorithm>

#include "fiova/lexical.h"

namespace fiova::dq {
namespace {

using events::Relationship;

bool entailed(const events::Verdict& v) {
  return v.relationship == Relationship::kEntailment;
}

}  // namespace

std::string_view to_string(Flavor f) {
  return f == Flavor::kAutoDq ? "autodq" : "fiovadq";
}

PRF make_prf(double precision, double recall, Flavor flavor) {
  const double f1 =
      precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  return {precision, recall, f1, flavor};
}

PRF autodq(const events::VerdictList& gt_verdicts,
           const events::VerdictList& cand_verdicts) {
  if (gt_verdicts.empty() || cand_verdicts.empty()) {
    throw DqError("autodq needs non-empty verdict lists");
  }
  const auto hits = [](const events::VerdictList& vs) {
    return static_cast<double>(std::count_if(vs.begin(), vs.end(), entailed));
  };
  return make_prf(hits(cand_verdicts) / static_cast<double>(cand_verdicts.size()),
                  hits(gt_verdicts) / static_cast<double>(gt_verdicts.size()),
                  Flavor::kAutoDq);
}

PRF fiova_dq(const events::WeightedEventSet& weighted_gt,
             const events::VerdictList& gt_verdicts,
             const events::VerdictList& cand_verdicts, const SupportMap& support) {
  if (gt_verdicts.empty() || cand_verdicts.empty()) {
    throw DqError("fiova_dq needs non-empty verdict lists");
  }
  const auto& w = weighted_gt.weights;
  if (w.size() != gt_verdicts.size()) {
    throw DqError("weights misaligned with groundtruth verdicts");
  }
  if (support.size() != cand_verdicts.size()) {
    throw DqError("support map misaligned with candidate verdicts");
  }
  double recall = 0.0;
  for (std::size_t i = 0; i < gt_verdicts.size(); ++i) {
    if (entailed(gt_verdicts[i])) recall += w[i];
  }
  const double n_gt = static_cast<double>(w.size());
  double credit = 0.0;
  for (std::size_t j = 0; j < cand_verdicts.size(); ++j) {
    if (!entailed(cand_verdicts[j])) continue;
    if (!support[j]) {
      throw DqError("entailed candidate event " + std::to_string(j) + " has no support");
    }
    if (*support[j] >= w.size()) {
      throw DqError("support index " + std::to_string(*support[j]) + " out of range");
    }
    credit += n_gt * w[*support[j]];
  }
  const double precision =
      std::clamp(credit / static_cast<double>(cand_verdicts.size()), 0.0, 1.0);
  return make_prf(precision, std::clamp(recall, 0.0, 1.0), Flavor::kFiovaDq);
}

std::size_t lexical_support(std::string_view candidate_event,
                            const events::EventSet& gt_events) {
  if (gt_events.events.empty()) throw DqError("no groundtruth events");
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < gt_events.size(); ++i) {
    const double f = lexical::token_f1(candidate_event, gt_events.events[i]);
    if (f > best_score) {
      best_score = f;
      best = i;
    }
  }
  return best;
}

SupportMap lexical_support_map(const events::EventSet& candidate_events,
                               const events::VerdictList& cand_verdicts,
                               const events::EventSet& gt_events) {
  if (candidate_events.size() != cand_verdicts.size()) {
    throw DqError("candidate verdicts misaligned with candidate events");
  }
  SupportMap out(candidate_events.size());
  for (std::size_t j = 0; j < candidate_events.size(); ++j) {
    if (entailed(cand_verdicts[j])) {
      out[j] = lexical_support(candidate_events.events[j], gt_events);
    }
  }
  return out;
}

}  // namespace fiova::dq
