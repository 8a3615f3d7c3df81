#include "fiova/corpus.h"

#include <chrono>
#include <fstream>

#include "fiova/file_io.h"
#include "fiova/lexical.h"

namespace fiova::corpus {
namespace {

using nlohmann::json;

bool has_tokens(const std::string& text) {
  try {
    lexical::tokenize(text);
    return true;
  } catch (const lexical::LexicalError&) {
    return false;
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string line_prefix(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

}  // namespace

VideoRecord parse_record(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw CorpusError("record is not a JSON object");

  for (const auto& [key, _] : doc.items()) {
    if (key != "video_id" && key != "theme" && key != "captions" &&
        key != "responses" && key != "groundtruth") {
      throw CorpusError("unexpected key \"" + key + "\"");
    }
  }
  for (const char* key : {"video_id", "theme", "captions", "responses"}) {
    if (!doc.contains(key)) {
      throw CorpusError(std::string("missing key \"") + key + "\"");
    }
  }

  VideoRecord rec;
  if (!doc["video_id"].is_string() || doc["video_id"].get<std::string>().empty()) {
    throw CorpusError("video_id must be a non-empty string");
  }
  rec.video_id = doc["video_id"].get<std::string>();
  if (!doc["theme"].is_string()) throw CorpusError("theme must be a string");
  rec.theme = doc["theme"].get<std::string>();

  const json& captions = doc["captions"];
  if (!captions.is_array()) throw CorpusError("captions must be an array");
  if (captions.size() != kCaptionsPerVideo) {
    throw CorpusError("expected 5 captions, got " +
                      std::to_string(captions.size()));
  }
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (!captions[i].is_string() || !has_tokens(captions[i].get<std::string>())) {
      throw CorpusError("caption " + std::to_string(i + 1) +
                        " is empty or not a string");
    }
    rec.captions.push_back(captions[i].get<std::string>());
  }

  if (doc.contains("groundtruth") && !doc["groundtruth"].is_null()) {
    if (!doc["groundtruth"].is_string() ||
        !has_tokens(doc["groundtruth"].get<std::string>())) {
      throw CorpusError("groundtruth must be a non-empty string");
    }
    rec.groundtruth = doc["groundtruth"].get<std::string>();
  }

  const json& responses = doc["responses"];
  if (!responses.is_object()) throw CorpusError("responses must be an object");
  for (const auto& [model, text] : responses.items()) {
    if (model.empty()) throw CorpusError("empty model name in responses");
    if (!text.is_string() || !has_tokens(text.get<std::string>())) {
      throw CorpusError("response of model \"" + model + "\" is empty");
    }
    rec.responses.emplace(model, text.get<std::string>());
  }
  return rec;
}

json to_json(const VideoRecord& record) {
  json doc = {{"video_id", record.video_id},
              {"theme", record.theme},
              {"captions", record.captions},
              {"responses", record.responses}};
  if (record.groundtruth) doc["groundtruth"] = *record.groundtruth;
  return doc;
}

Corpus::Corpus(std::vector<VideoRecord> records, Provenance provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].video_id, i).second) {
      throw CorpusError("duplicate video_id \"" + records_[i].video_id + "\"");
    }
  }
}

const VideoRecord* Corpus::find(std::string_view video_id) const {
  const auto it = index_.find(std::string(video_id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

namespace {

template <typename OnRecord, typename OnFailure>
void read_lines(const std::filesystem::path& path, OnRecord&& on_record,
                OnFailure&& on_failure) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      on_record(line_no, parse_record(line));
    } catch (const CorpusError& e) {
      on_failure(line_no, line, e.what());
    }
  }
}

std::string sniff_video_id(const std::string& line) {
  try {
    const json doc = json::parse(line);
    if (doc.is_object() && doc.contains("video_id") &&
        doc["video_id"].is_string()) {
      return doc["video_id"].get<std::string>();
    }
  } catch (const json::exception&) {
  }
  return {};
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<VideoRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  read_lines(
      path,
      [&](std::size_t line_no, VideoRecord rec) {
        if (auto [it, fresh] = seen.emplace(rec.video_id, line_no); !fresh) {
          throw CorpusError(line_prefix(line_no) + "duplicate video_id \"" +
                            rec.video_id + "\" (first seen on line " +
                            std::to_string(it->second) + ")");
        }
        records.push_back(std::move(rec));
      },
      [](std::size_t line_no, const std::string&, const std::string& msg) {
        throw CorpusError(line_prefix(line_no) + msg);
      });
  return Corpus(std::move(records), {path.string(), utc_now()});
}

ScanResult scan_corpus(const std::filesystem::path& path) {
  std::vector<VideoRecord> records;
  std::vector<LineFailure> failures;
  std::unordered_map<std::string, std::size_t> seen;
  read_lines(
      path,
      [&](std::size_t line_no, VideoRecord rec) {
        if (auto [it, fresh] = seen.emplace(rec.video_id, line_no); !fresh) {
          failures.push_back({line_no, rec.video_id,
                              "duplicate video_id (first seen on line " +
                                  std::to_string(it->second) + ")"});
          return;
        }
        records.push_back(std::move(rec));
      },
      [&](std::size_t line_no, const std::string& line, const std::string& msg) {
        failures.push_back({line_no, sniff_video_id(line), msg});
      });
  return {Corpus(std::move(records), {path.string(), utc_now()}),
          std::move(failures)};
}

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kGroundtruth: return "gt";
    case ArtifactKind::kDimensions: return "dims";
    case ArtifactKind::kEvents: return "events";
    case ArtifactKind::kWeights: return "weights";
    case ArtifactKind::kVerdicts: return "verdicts";
    case ArtifactKind::kScores: return "scores";
  }
  return "unknown";
}

ArtifactKind artifact_kind_from_string(std::string_view name) {
  for (auto kind : {ArtifactKind::kGroundtruth, ArtifactKind::kDimensions,
                    ArtifactKind::kEvents, ArtifactKind::kWeights, ArtifactKind::kVerdicts,
                    ArtifactKind::kScores}) {
    if (to_string(kind) == name) return kind;
  }
  throw CorpusError("unknown artifact kind \"" + std::string(name) + "\"");
}

std::string serialize(const json& doc) { return doc.dump(2) + "\n"; }

ArtifactStore::ArtifactStore(std::filesystem::path out_dir, const Corpus& corpus)
    : out_dir_(std::move(out_dir)), corpus_(&corpus) {}

void ArtifactStore::require_known(std::string_view video_id) const {
  if (!corpus_->contains(video_id)) {
    throw CorpusError("unknown record_id \"" + std::string(video_id) + "\"");
  }
}

std::filesystem::path ArtifactStore::path_for(std::string_view video_id,
                                              ArtifactKind kind) const {
  return out_dir_ / std::string(video_id) /
         (std::string(to_string(kind)) + ".json");
}

std::filesystem::path ArtifactStore::save(std::string_view video_id,
                                          ArtifactKind kind,
                                          const json& payload) const {
  require_known(video_id);
  const auto path = path_for(video_id, kind);
  try {
    io::write_file_atomic(path, serialize(payload));
  } catch (const io::IoError& e) {
    throw CorpusError(e.what());
  }
  return path;
}

std::optional<json> ArtifactStore::load(std::string_view video_id,
                                        ArtifactKind kind) const {
  require_known(video_id);
  const auto path = path_for(video_id, kind);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw CorpusError("corrupt artifact " + path.string() + ": " + e.what());
  }
}

bool ArtifactStore::exists(std::string_view video_id, ArtifactKind kind) const {
  return std::filesystem::exists(path_for(video_id, kind));
}

void ArtifactStore::remove(std::string_view video_id, ArtifactKind kind) const {
  std::filesystem::remove(path_for(video_id, kind));
}

}  // namespace fiova::corpus
