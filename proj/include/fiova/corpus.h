// Dataset schema, corpus loading and the per-video artifact sidecar.
//
// Corpus file: UTF-8, one JSON object per line with keys video_id, theme,
// captions (exactly five strings), responses (model name -> text) and an
// optional groundtruth. Artifacts live at <out_dir>/<video_id>/<kind>.json.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace fiova::corpus {

inline constexpr std::size_t kCaptionsPerVideo = 5;

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VideoRecord {
  std::string video_id;
  std::string theme;
  std::vector<std::string> captions;
  std::optional<std::string> groundtruth;
  // Ordered by model name so iteration is deterministic.
  std::map<std::string, std::string> responses;

  bool operator==(const VideoRecord&) const = default;
};

// Parses and validates one corpus line. Throws CorpusError.
VideoRecord parse_record(std::string_view line);
nlohmann::json to_json(const VideoRecord& record);

struct Provenance {
  std::string source_path;
  std::string loaded_at;  // UTC, ISO-8601
};

// Immutable after load; iteration order is file order.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<VideoRecord> records, Provenance provenance);

  const std::vector<VideoRecord>& records() const { return records_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  const VideoRecord* find(std::string_view video_id) const;
  bool contains(std::string_view video_id) const {
    return find(video_id) != nullptr;
  }

 private:
  std::vector<VideoRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
  Provenance provenance_;
};

// Strict load: the first bad line aborts with its line number in the message.
Corpus load_corpus(const std::filesystem::path& path);

struct LineFailure {
  std::size_t line = 0;
  std::string video_id;  // best effort, may be empty
  std::string message;
};

struct ScanResult {
  Corpus corpus;
  std::vector<LineFailure> failures;
};

// Lenient load used by the pipeline: bad lines are reported and skipped.
// Throws only when the file itself cannot be read.
ScanResult scan_corpus(const std::filesystem::path& path);

enum class ArtifactKind {
  kGroundtruth,
  kDimensions,
  kEvents,
  kWeights,
  kVerdicts,
  kScores,
};

std::string_view to_string(ArtifactKind kind);
ArtifactKind artifact_kind_from_string(std::string_view name);

// Sidecar store keyed by (video_id, kind). Writes are atomic: the document is
// written to a temporary file in the same directory and renamed into place.
class ArtifactStore {
 public:
  ArtifactStore(std::filesystem::path out_dir, const Corpus& corpus);

  std::filesystem::path save(std::string_view video_id, ArtifactKind kind,
                             const nlohmann::json& payload) const;
  std::optional<nlohmann::json> load(std::string_view video_id,
                                     ArtifactKind kind) const;
  bool exists(std::string_view video_id, ArtifactKind kind) const;
  void remove(std::string_view video_id, ArtifactKind kind) const;
  std::filesystem::path path_for(std::string_view video_id,
                                 ArtifactKind kind) const;
  const std::filesystem::path& root() const { return out_dir_; }

 private:
  void require_known(std::string_view video_id) const;

  std::filesystem::path out_dir_;
  const Corpus* corpus_;
};

// Serialized form used for every persisted JSON document.
std::string serialize(const nlohmann::json& doc);

}  // namespace fiova::corpus
