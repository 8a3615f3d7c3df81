// Report bundle assembled by the batch stage and its CSV/JSON emitters.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiova/batch.h"
#include "json.hpp"

namespace fiova::report {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { kCsv, kJson };

Format format_from_string(const std::string& name);

struct ModelRow {
  std::string model;
  std::size_t videos = 0;
  std::map<std::string, double> metrics;  // keys: batch::report_metrics()
  std::size_t gt_contradictions = 0;
  std::size_t candidate_contradictions = 0;
};

struct VideoScoreRow {
  std::string video_id;
  std::string model;
  std::map<std::string, double> metrics;
};

struct VideoRow {
  std::string video_id;
  std::optional<char> group;
  std::optional<double> human_cv;
  std::optional<double> lvlm_cv;
  std::vector<std::string> lvlm_cv_skipped;
  std::optional<int> human_rank;
  std::optional<int> lvlm_rank;
  std::optional<int> rank_diff;
};

// Mean of one metric for one model over the videos of each group.
struct GroupRow {
  std::string metric;
  std::string model;
  std::map<char, double> by_group;
};

struct AlignmentRow {
  std::string metric;
  double rho = 0.0;     // mean over videos
  std::size_t videos = 0;
};

struct Metadata {
  int intervals = 0;  // 0 when no grouping was computed
  double max_cv = 0.0;
  std::string config_hash;
  std::string backend;
  std::string model_id;
  std::string meteor_variant = "meteor-exact+stem";
  std::string weight_rule = "max(support,1) normalized";
  std::string precision_rule = "|E_gt|*w[support] per entailed candidate event";
  std::size_t videos_total = 0;
  std::size_t videos_scored = 0;
  std::size_t failures = 0;
  std::vector<std::string> hard_subset;
};

struct ReportBundle {
  Metadata metadata;
  std::vector<ModelRow> models;  // by model name
  std::vector<VideoScoreRow> video_scores;  // by video, then model
  std::vector<VideoRow> videos;  // by video id
  std::vector<GroupRow> groups;  // by metric (table order), then model
  std::optional<batch::CorrelationMatrix> correlations;
  std::vector<AlignmentRow> alignment;
};

nlohmann::json to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(const nlohmann::json& doc);

// Writes the bundle into `dir`. CSV tables use 3 decimals, JSON keeps full
// precision. Returns the written paths. Throws ReportError when a file cannot
// be written.
std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                               Format format,
                                               const std::filesystem::path& dir);

// Individual CSV tables, exposed for tests.
std::string models_csv(const ReportBundle& bundle);
std::string video_scores_csv(const ReportBundle& bundle);
std::string videos_csv(const ReportBundle& bundle);
std::string groups_csv(const ReportBundle& bundle);
std::string correlations_csv(const ReportBundle& bundle);
std::string alignment_csv(const ReportBundle& bundle);
std::string metadata_csv(const ReportBundle& bundle);

// "%.3f", with an empty field for NaN.
std::string fixed3(double v);

}  // namespace fiova::report
