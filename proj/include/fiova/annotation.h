// Human annotation quality: dimension scores, inter-annotator CV, A.. grouping.

#pragma once

#include <array>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fiova/corpus.h"
#include "fiova/gateway.h"
#include "json.hpp"

namespace fiova::annotation {

class AnalysisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when one dimension prompt fails; the message names the dimension.
class ScoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Dimension {
  kConsistency,
  kContext,
  kCorrectness,
  kDetailOrientation,
  kTemporality,
  kLength,
};

inline constexpr std::array<Dimension, 6> kAllDimensions = {
    Dimension::kConsistency,       Dimension::kContext,
    Dimension::kCorrectness,       Dimension::kDetailOrientation,
    Dimension::kTemporality,       Dimension::kLength};

std::string_view to_string(Dimension d);
llm::TemplateId template_for(Dimension d);  // not defined for kLength

struct DimensionScores {
  int consistency = 1;
  int context = 1;
  int correctness = 1;
  int detail_orientation = 1;
  int temporality = 1;
  std::size_t length = 1;

  double value(Dimension d) const;
  void validate() const;  // throws AnalysisError
  bool operator==(const DimensionScores&) const = default;
};

nlohmann::json to_json(const DimensionScores& s);
DimensionScores dimension_scores_from_json(const nlohmann::json& doc);

DimensionScores score_dimensions(llm::Gateway& gateway,
                                 const llm::Decoding& decoding,
                                 std::string_view caption);

// Population standard deviation over mean.
double cv(std::span<const double> values);

struct CVProfile {
  std::map<Dimension, double> per_dimension_cv;
  double mean_cv = 0.0;

  static CVProfile from_per_dimension(std::map<Dimension, double> per_dimension);
};

CVProfile human_cv_profile(const corpus::VideoRecord& record,
                           std::span<const DimensionScores> scores);

struct GroupAssignment {
  int interval_index = 0;
  char label = 'A';

  bool operator==(const GroupAssignment&) const = default;
};

struct Grouping {
  int intervals = 0;  // N
  double max_cv = 0.0;
  std::map<std::string, GroupAssignment> assignments;
  std::vector<std::string> order;  // ascending mean CV, ties by video_id
};

Grouping assign_groups(const std::map<std::string, CVProfile>& profiles);

// Ids labelled F, G or H. Throws AnalysisError when N < 6.
std::set<std::string> select_hard_subset(const Grouping& grouping);

// video_id, six CVs, mean_cv, group; rows in grouping order.
void write_group_csv(std::ostream& out,
                     const std::map<std::string, CVProfile>& profiles,
                     const Grouping& grouping);

}  // namespace fiova::annotation
