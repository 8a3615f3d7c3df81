// End-to-end pipeline over a corpus: per-video stages run on a bounded worker
// pool and persist one artifact each; corpus-level stages (groups, batch) run
// after the pool drains.
//
// Layout under the output directory:
//   videos/<video_id>/<kind>.json   per-video artifacts
//   groups/groups.{json,csv}        CV profiles and group labels
//   batch/bundle.json               report bundle
//   report/                         emitted tables
//   failures.json                   failure manifest
//   cache/                          completion cache (default location)
#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiova/gateway.h"
#include "fiova/report.h"
#include "json.hpp"

namespace fiova::pipeline {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Stage { kGroundtruth, kDimensions, kGroups, kEvents, kWeights, kVerdicts, kMetrics, kBatch };

inline constexpr std::array<Stage, 8> kAllStages = {
    Stage::kGroundtruth, Stage::kDimensions, Stage::kGroups,   Stage::kEvents,
    Stage::kWeights,     Stage::kVerdicts,   Stage::kMetrics,  Stage::kBatch};

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view name);
// Comma-separated stage names, or "all".
std::set<Stage> parse_stages(std::string_view list);

enum class Backend { kLlm, kLexical };
Backend backend_from_string(std::string_view name);
std::string_view to_string(Backend b);

struct PipelineConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path out_dir;
  std::filesystem::path cache_dir;  // empty: <out_dir>/cache
  std::string model_id;
  llm::EndpointConfig endpoint;
  bool cache_only = false;
  int workers = 4;
  std::set<Stage> stages{kAllStages.begin(), kAllStages.end()};
  Backend backend = Backend::kLlm;
  double temperature = 0.0;
  int max_tokens = 1024;
  int max_in_flight = 4;
  double requests_per_second = 8.0;
  llm::RetryPolicy retry;
  // Optional ingest-rankings output; enables the human alignment table.
  std::filesystem::path rankings_path;
  report::Format format = report::Format::kCsv;
  // Replaces the HTTP transport when set (tests, in-process mock).
  std::shared_ptr<llm::ChatTransport> transport;
  // Progress messages; may be empty.
  std::function<void(const std::string&)> log;

  void validate() const;  // throws ConfigError
  std::filesystem::path effective_cache_dir() const;
};

struct Failure {
  std::string video_id;  // empty for corpus-level failures
  std::string stage;
  std::string message;
  std::size_t line = 0;  // corpus line for ingest failures

  bool operator==(const Failure&) const = default;
};

nlohmann::json to_json(const std::vector<Failure>& failures);

struct RunResult {
  std::vector<Failure> failures;
  llm::GatewayStats stats;
  std::size_t videos = 0;
  std::optional<report::ReportBundle> bundle;  // set when the batch stage ran

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

// Hash of the settings that determine artifact content.
std::string config_hash(const PipelineConfig& config, const std::string& corpus_bytes);

RunResult run_pipeline(const PipelineConfig& config);

// Loads <out_dir>/batch/bundle.json.
report::ReportBundle load_bundle(const std::filesystem::path& out_dir);

}  // namespace fiova::pipeline
