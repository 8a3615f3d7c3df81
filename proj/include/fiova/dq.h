// Event-level description quality: AutoDQ and the weighted FIOVA-DQ.
//
// Only entailment counts as a match; neutral and contradiction both miss.

#pragma once

#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "fiova/events.h"

namespace fiova::dq {

class DqError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Flavor { kAutoDq, kFiovaDq };

std::string_view to_string(Flavor f);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Flavor flavor = Flavor::kAutoDq;
};

PRF make_prf(double precision, double recall, Flavor flavor);

// gt_verdicts: groundtruth events checked against the candidate text.
// cand_verdicts: candidate events checked against the groundtruth text.
PRF autodq(const events::VerdictList& gt_verdicts,
           const events::VerdictList& cand_verdicts);

// Index of the groundtruth event credited for each candidate event.
using SupportMap = std::vector<std::optional<std::size_t>>;

// recall = sum of weights over entailed gt events;
// precision = clamp(sum over entailed candidate events of |E_gt| * w[support]
//                   / |E_cand|, 0, 1).
PRF fiova_dq(const events::WeightedEventSet& weighted_gt,
             const events::VerdictList& gt_verdicts,
             const events::VerdictList& cand_verdicts, const SupportMap& support);

// argmax token F1 against the gt events, ties to the lowest index.
std::size_t lexical_support(std::string_view candidate_event,
                            const events::EventSet& gt_events);

// Support for every entailed candidate event; nullopt elsewhere.
SupportMap lexical_support_map(const events::EventSet& candidate_events,
                               const events::VerdictList& cand_verdicts,
                               const events::EventSet& gt_events);

}  // namespace fiova::dq
