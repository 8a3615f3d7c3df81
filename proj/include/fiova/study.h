// Human ranking study: task queue, submission store, HTTP front end and the
// export ingester that turns submissions into ranking matrices.
//
// HTTP API:
//   GET  /api/tasks/next?subject=S&mode=A|B  200 task, 204 when exhausted
//   POST /api/rankings {task_id, subject, ranks[6]}  200 | 404 | 409 | 422
//   GET  /api/export  line-delimited JSON, one submission per line
//
// ranks[i] is the rank given to the i-th caption as displayed. Submissions
// cannot be revised: a second submission for the same (subject, video, mode)
// is a conflict.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fiova/batch.h"
#include "fiova/corpus.h"
#include "json.hpp"

namespace fiova::study {

inline constexpr std::size_t kCaptionsPerTask = 6;

class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StudyItem {
  std::string video_id;
  std::optional<std::string> video_url;
  std::vector<std::string> columns;   // caption sources, never sent to clients
  std::vector<std::string> captions;  // same order as columns
};

enum class CaptionSet { kHuman, kModels };

// kHuman: Human1..Human5 plus GPT-GT, taken from `groundtruths` or the
// record's own groundtruth. kModels: the record's six model responses.
// `video_url_template` has "{video_id}" substituted; empty means no URL.
// Records without six sources are skipped.
std::vector<StudyItem> build_items(const corpus::Corpus& corpus, CaptionSet set,
                                   const std::map<std::string, std::string>& groundtruths,
                                   const std::string& video_url_template);

// Display order (indices into the item columns) for one task.
std::vector<std::size_t> shuffle_order(std::uint64_t seed, std::string_view subject,
                                       std::string_view video_id, char mode,
                                       std::size_t n);

struct Response {
  int status = 200;
  nlohmann::json body;  // null for 204
};

class StudyService {
 public:
  // With a non-empty `state_dir` the seed and submissions persist there and
  // are reloaded on restart. A stored seed wins over `seed`; a conflicting
  // explicit seed is an error.
  StudyService(std::vector<StudyItem> items, std::filesystem::path state_dir,
               std::optional<std::uint64_t> seed);

  Response next_task(const std::string& subject, const std::string& mode);
  Response submit(const std::string& request_body);
  std::string export_jsonl() const;
  std::uint64_t seed() const { return seed_; }
  std::size_t submissions() const;

 private:
  struct Task {
    std::string subject;
    std::size_t item = 0;
    char mode = 'A';
    std::vector<std::size_t> order;
  };
  using Key = std::tuple<std::string, std::string, char>;  // subject, video, mode

  std::string task_id(const std::string& subject, const std::string& video_id,
                      char mode) const;

  std::vector<StudyItem> items_;
  std::filesystem::path state_dir_;
  std::uint64_t seed_ = 0;

  mutable std::mutex mu_;
  std::map<std::string, Task> issued_;
  std::set<Key> done_;
  std::vector<std::string> lines_;  // export lines in submission order
};

// HTTP front end. Holds a reference to the service.
class StudyServer {
 public:
  explicit StudyServer(StudyService& service,
                       std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~StudyServer();

  // Binds and serves until stop(). Returns false when the bind fails.
  bool listen(const std::string& host, int port);
  // Binds to an ephemeral port and returns it; call serve() afterwards.
  int bind_any(const std::string& host);
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Groups export lines by (video_id, mode) into validated matrices, ordered by
// video_id then mode. Throws StudyError on schema violations, non-permutation
// rows, inconsistent columns, repeated subjects, or an empty export.
std::vector<batch::RankingMatrix> ingest_rankings_text(std::string_view jsonl);
std::vector<batch::RankingMatrix> ingest_rankings(const std::filesystem::path& export_file);

// Matrices with their column means and S-All vectors.
nlohmann::json to_json(const std::vector<batch::RankingMatrix>& matrices);

}  // namespace fiova::study
