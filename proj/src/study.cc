#include "fiova/study.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "fiova/file_io.h"
#include "fiova/gateway.h"
#include "httplib.h"

namespace fiova::study {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint64_t digest64(std::string_view text) {
  return std::stoull(llm::sha256_hex(text).substr(0, 16), nullptr, 16);
}

bool is_permutation_of_1_to_n(const std::vector<int>& ranks, std::size_t n) {
  if (ranks.size() != n) return false;
  std::vector<bool> seen(n + 1, false);
  for (int r : ranks) {
    if (r < 1 || static_cast<std::size_t>(r) > n || seen[r]) return false;
    seen[r] = true;
  }
  return true;
}

Response error(int status, const std::string& message) {
  return {status, json{{"status", "error"}, {"error", message}}};
}

std::optional<char> parse_mode(const std::string& mode) {
  if (mode == "A" || mode == "a") return 'A';
  if (mode == "B" || mode == "b") return 'B';
  return std::nullopt;
}

}  // namespace

std::vector<StudyItem> build_items(const corpus::Corpus& corpus, CaptionSet set,
                                   const std::map<std::string, std::string>& groundtruths,
                                   const std::string& video_url_template) {
  std::vector<StudyItem> items;
  for (const auto& rec : corpus) {
    StudyItem item;
    item.video_id = rec.video_id;
    if (set == CaptionSet::kHuman) {
      std::optional<std::string> gt = rec.groundtruth;
      if (auto it = groundtruths.find(rec.video_id); it != groundtruths.end()) gt = it->second;
      if (!gt) continue;
      for (std::size_t i = 0; i < rec.captions.size(); ++i) {
        item.columns.push_back("Human" + std::to_string(i + 1));
        item.captions.push_back(rec.captions[i]);
      }
      item.columns.push_back("GPT-GT");
      item.captions.push_back(*gt);
    } else {
      for (const auto& [model, text] : rec.responses) {
        item.columns.push_back(model);
        item.captions.push_back(text);
      }
    }
    if (item.columns.size() != kCaptionsPerTask) continue;
    if (!video_url_template.empty()) {
      std::string url = video_url_template;
      const std::string slot = "{video_id}";
      if (auto pos = url.find(slot); pos != std::string::npos) {
        url.replace(pos, slot.size(), rec.video_id);
      }
      item.video_url = url;
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<std::size_t> shuffle_order(std::uint64_t seed, std::string_view subject,
                                       std::string_view video_id, char mode, std::size_t n) {
  std::string key(subject);
  key += '\n';
  key += video_id;
  key += '\n';
  key += mode;
  std::mt19937_64 rng(seed ^ digest64(key));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Fisher-Yates on raw engine output so the order is the same on every
  // standard library.
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

StudyService::StudyService(std::vector<StudyItem> items, fs::path state_dir,
                           std::optional<std::uint64_t> seed)
    : items_(std::move(items)), state_dir_(std::move(state_dir)) {
  for (const auto& item : items_) {
    if (item.columns.size() != kCaptionsPerTask || item.captions.size() != kCaptionsPerTask) {
      throw StudyError("study item " + item.video_id + " does not have six captions");
    }
  }
  std::optional<std::uint64_t> stored;
  if (!state_dir_.empty() && fs::exists(state_dir_ / "session.json")) {
    stored = json::parse(io::read_file(state_dir_ / "session.json")).at("seed").get<std::uint64_t>();
    if (seed && *seed != *stored) {
      throw StudyError("state directory holds seed " + std::to_string(*stored) +
                       ", refusing to switch to " + std::to_string(*seed));
    }
  }
  if (stored) {
    seed_ = *stored;
  } else {
    seed_ = seed ? *seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                               std::random_device{}();
    if (!state_dir_.empty()) {
      io::write_file_atomic(state_dir_ / "session.json", json{{"seed", seed_}}.dump() + "\n");
    }
  }
  if (!state_dir_.empty() && fs::exists(state_dir_ / "submissions.jsonl")) {
    std::istringstream in(io::read_file(state_dir_ / "submissions.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json doc = json::parse(line);
      done_.insert({doc.at("subject").get<std::string>(), doc.at("video_id").get<std::string>(),
                    doc.at("mode").get<std::string>().at(0)});
      lines_.push_back(line);
    }
  }
}

std::string StudyService::task_id(const std::string& subject, const std::string& video_id,
                                  char mode) const {
  return llm::sha256_hex(std::to_string(seed_) + "\n" + subject + "\n" + video_id + "\n" +
                         mode)
      .substr(0, 16);
}

Response StudyService::next_task(const std::string& subject, const std::string& mode_text) {
  if (subject.empty()) return error(400, "missing subject");
  const auto mode = parse_mode(mode_text);
  if (!mode) return error(400, "mode must be A or B");
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& item = items_[i];
    if (done_.count({subject, item.video_id, *mode})) continue;
    const std::string id = task_id(subject, item.video_id, *mode);
    auto& task = issued_[id];
    task = {subject, i, *mode, shuffle_order(seed_, subject, item.video_id, *mode, item.captions.size())};
    json captions = json::array();
    for (std::size_t k : task.order) captions.push_back(item.captions[k]);
    json body = {{"task_id", id},
                 {"video_id", item.video_id},
                 {"mode", std::string(1, *mode)},
                 {"captions", captions}};
    if (*mode == 'B' && item.video_url) body["video_url"] = *item.video_url;
    return {200, body};
  }
  return {204, nullptr};
}

Response StudyService::submit(const std::string& request_body) {
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::exception&) {
    return error(400, "body is not JSON");
  }
  if (!req.is_object() || !req.contains("task_id") || !req["task_id"].is_string() ||
      !req.contains("subject") || !req["subject"].is_string() || !req.contains("ranks") ||
      !req["ranks"].is_array()) {
    return error(422, "expected {task_id, subject, ranks}");
  }
  std::vector<int> ranks;
  for (const auto& r : req["ranks"]) {
    if (!r.is_number_integer()) return error(422, "ranks must be integers");
    ranks.push_back(r.get<int>());
  }
  const auto id = req["task_id"].get<std::string>();
  const auto subject = req["subject"].get<std::string>();

  std::lock_guard lock(mu_);
  const auto it = issued_.find(id);
  if (it == issued_.end()) return error(404, "unknown task " + id);
  const Task& task = it->second;
  const StudyItem& item = items_[task.item];
  if (task.subject != subject) return error(422, "task belongs to another subject");
  if (!is_permutation_of_1_to_n(ranks, item.captions.size())) {
    return error(422, "ranks must be a permutation of 1.." + std::to_string(item.captions.size()));
  }
  const Key key{subject, item.video_id, task.mode};
  if (done_.count(key)) return error(409, "already submitted");

  std::vector<int> by_column(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) by_column[task.order[i]] = ranks[i];
  const json record = {{"task_id", id},
                       {"subject", subject},
                       {"video_id", item.video_id},
                       {"mode", std::string(1, task.mode)},
                       {"seed", seed_},
                       {"columns", item.columns},
                       {"order", task.order},
                       {"displayed_ranks", ranks},
                       {"ranks", by_column}};
  const std::string line = record.dump();
  if (!state_dir_.empty()) {
    fs::create_directories(state_dir_);
    std::ofstream out(state_dir_ / "submissions.jsonl", std::ios::app | std::ios::binary);
    out << line << '\n';
    out.flush();
    if (!out) return error(500, "could not persist submission");
  }
  done_.insert(key);
  lines_.push_back(line);
  return {200, json{{"status", "ok"}}};
}

std::string StudyService::export_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& line : lines_) out += line + "\n";
  return out;
}

std::size_t StudyService::submissions() const {
  std::lock_guard lock(mu_);
  return lines_.size();
}

struct StudyServer::Impl {
  explicit Impl(StudyService& s) : service(s) {}
  StudyService& service;
  httplib::Server server;
};

StudyServer::StudyServer(StudyService& service, std::optional<fs::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    if (r.status != 204) res.set_content(r.body.dump(), "application/json");
  };
  // The study UI may be served from another origin during development.
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  svr.Get("/api/tasks/next", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, impl_->service.next_task(req.get_param_value("subject"),
                                       req.get_param_value("mode")));
  });
  svr.Post("/api/rankings", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, impl_->service.submit(req.body));
  });
  svr.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(impl_->service.export_jsonl(), "application/x-ndjson");
  });
  if (static_dir && !svr.set_mount_point("/", static_dir->string())) {
    throw StudyError("static directory not found: " + static_dir->string());
  }
}

StudyServer::~StudyServer() = default;

bool StudyServer::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int StudyServer::bind_any(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool StudyServer::serve() { return impl_->server.listen_after_bind(); }

void StudyServer::stop() { impl_->server.stop(); }

void StudyServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

std::vector<batch::RankingMatrix> ingest_rankings_text(std::string_view jsonl) {
  std::map<std::pair<std::string, char>, batch::RankingMatrix> groups;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw StudyError(where + "not JSON");
    }
    std::string video_id, subject, mode;
    std::vector<std::string> columns;
    std::vector<int> ranks;
    try {
      video_id = doc.at("video_id").get<std::string>();
      subject = doc.at("subject").get<std::string>();
      mode = doc.at("mode").get<std::string>();
      columns = doc.at("columns").get<std::vector<std::string>>();
      ranks = doc.at("ranks").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw StudyError(where + "schema violation: " + e.what());
    }
    const auto m = parse_mode(mode);
    if (!m) throw StudyError(where + "mode must be A or B");
    if (columns.empty() || !is_permutation_of_1_to_n(ranks, columns.size())) {
      throw StudyError(where + "ranks are not a permutation of 1.." +
                       std::to_string(columns.size()));
    }
    auto& matrix = groups[{video_id, *m}];
    if (matrix.columns.empty()) {
      matrix.video_id = video_id;
      matrix.mode = *m;
      matrix.columns = columns;
    } else if (matrix.columns != columns) {
      throw StudyError(where + "columns differ from earlier rows for " + video_id);
    }
    if (std::find(matrix.subjects.begin(), matrix.subjects.end(), subject) !=
        matrix.subjects.end()) {
      throw StudyError(where + "subject " + subject + " ranked " + video_id + " twice");
    }
    matrix.subjects.push_back(subject);
    matrix.ranks.push_back(ranks);
  }
  if (groups.empty()) throw StudyError("empty rankings export");
  std::vector<batch::RankingMatrix> out;
  for (auto& [key, matrix] : groups) {
    matrix.validate();
    out.push_back(std::move(matrix));
  }
  return out;
}

std::vector<batch::RankingMatrix> ingest_rankings(const fs::path& export_file) {
  try {
    return ingest_rankings_text(io::read_file(export_file));
  } catch (const io::IoError& e) {
    throw StudyError(e.what());
  }
}

json to_json(const std::vector<batch::RankingMatrix>& matrices) {
  json out = json::array();
  for (const auto& m : matrices) {
    out.push_back({{"video_id", m.video_id},
                   {"mode", std::string(1, m.mode)},
                   {"columns", m.columns},
                   {"subjects", m.subjects},
                   {"ranks", m.ranks},
                   {"column_means", m.column_means()},
                   {"s_all", m.s_all()}});
  }
  return json{{"matrices", out}};
}

}  // namespace fiova::study
