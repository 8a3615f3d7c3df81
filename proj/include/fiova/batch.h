// Corpus-level statistics: model consistency CV, CV rank differences,
// Spearman correlations and human ranking matrices.

#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace fiova::batch {

class BatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Metric names used throughout reports, in table order.
inline const std::vector<std::string>& report_metrics() {
  static const std::vector<std::string> m = {
      "BLEU",        "METEOR",          "GLEU",
      "AutoDQ F1",   "AutoDQ Recall",   "AutoDQ Precision",
      "FIOVA-DQ F1", "FIOVA-DQ Recall", "FIOVA-DQ Precision"};
  return m;
}

// Metric set for model consistency CV: the six event and lexical scores.
inline const std::vector<std::string>& lvlm_cv_metrics() {
  static const std::vector<std::string> m = {"FIOVA-DQ F1", "FIOVA-DQ Recall",
                                             "FIOVA-DQ Precision", "BLEU",
                                             "METEOR", "GLEU"};
  return m;
}

struct MetricCVProfile {
  std::map<std::string, double> per_metric_cv;
  std::vector<std::string> skipped;  // metrics whose mean across models is 0
  double mean_cv = 0.0;
};

// CV of each metric across models, averaged over the metrics that have a
// nonzero mean. Throws if fewer than 2 models, a metric is missing, or every
// metric is skipped.
MetricCVProfile lvlm_cv_profile(
    const std::map<std::string, std::map<std::string, double>>& per_model_scores,
    const std::vector<std::string>& metrics);

struct CVRankings {
  std::map<std::string, int> human_rank;
  std::map<std::string, int> lvlm_rank;
  std::map<std::string, int> diff;
};

// Ascending ordinal ranks, ties ordered by video_id.
std::map<std::string, int> ordinal_ranks(const std::map<std::string, double>& values);

CVRankings rank_and_diff(const std::map<std::string, double>& human_cv,
                         const std::map<std::string, double>& lvlm_cv);

// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks. Throws on length mismatch, fewer
// than 2 items, or a constant input.
double spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> metrics;
  std::vector<std::vector<double>> rho;  // NaN where undefined (lenient mode)
};

// When `lenient` is set, pairs involving a constant metric get NaN instead of
// an error.
CorrelationMatrix metric_correlation_matrix(
    const std::vector<std::pair<std::string, std::vector<double>>>& per_item_scores,
    bool lenient = false);

// Element-wise mean over matrices with identical metric lists, skipping NaN.
CorrelationMatrix average_matrices(const std::vector<CorrelationMatrix>& matrices);

nlohmann::json to_json(const CorrelationMatrix& m);

// One video's human ranking study: rows are subjects, columns caption sources.
struct RankingMatrix {
  std::string video_id;
  char mode = 'A';
  std::vector<std::string> columns;
  std::vector<std::string> subjects;
  std::vector<std::vector<int>> ranks;

  void validate() const;  // every row a permutation of 1..#columns
  std::vector<double> column_means() const;
  // Column means re-ranked with average ties.
  std::vector<double> s_all() const;
};

// Spearman between a human rank vector (1 = best) and metric scores
// (higher = better).
double human_alignment(std::span<const double> human_ranks,
                       std::span<const double> metric_scores);

}  // namespace fiova::batch
