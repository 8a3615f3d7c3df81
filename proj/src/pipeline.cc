#include "fiova/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "fiova/annotation.h"
#include "fiova/corpus.h"
#include "fiova/dq.h"
#include "fiova/events.h"
#include "fiova/file_io.h"
#include "fiova/lexical.h"
#include "fiova/study.h"

namespace fiova::pipeline {

using corpus::ArtifactKind;
using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kGroundtruth: return "gt";
    case Stage::kDimensions: return "dims";
    case Stage::kGroups: return "groups";
    case Stage::kEvents: return "events";
    case Stage::kWeights: return "weights";
    case Stage::kVerdicts: return "verdicts";
    case Stage::kMetrics: return "metrics";
    case Stage::kBatch: return "batch";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view name) {
  for (Stage s : kAllStages) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown stage \"" + std::string(name) + "\"");
}

std::set<Stage> parse_stages(std::string_view list) {
  if (list == "all") return {kAllStages.begin(), kAllStages.end()};
  std::set<Stage> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto end = std::min(list.find(',', start), list.size());
    auto name = list.substr(start, end - start);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) out.insert(stage_from_string(name));
    start = end + 1;
  }
  if (out.empty()) throw ConfigError("no stages selected");
  return out;
}

Backend backend_from_string(std::string_view name) {
  if (name == "llm") return Backend::kLlm;
  if (name == "lexical") return Backend::kLexical;
  throw ConfigError("unknown backend \"" + std::string(name) + "\"");
}

std::string_view to_string(Backend b) { return b == Backend::kLlm ? "llm" : "lexical"; }

namespace {

bool needs_gateway(const PipelineConfig& c) {
  return c.stages.count(Stage::kDimensions) ||
         (c.backend == Backend::kLlm &&
          (c.stages.count(Stage::kGroundtruth) || c.stages.count(Stage::kEvents) ||
           c.stages.count(Stage::kWeights) || c.stages.count(Stage::kVerdicts)));
}

ArtifactKind artifact_for(Stage s) {
  switch (s) {
    case Stage::kGroundtruth: return ArtifactKind::kGroundtruth;
    case Stage::kDimensions: return ArtifactKind::kDimensions;
    case Stage::kEvents: return ArtifactKind::kEvents;
    case Stage::kWeights: return ArtifactKind::kWeights;
    case Stage::kVerdicts: return ArtifactKind::kVerdicts;
    case Stage::kMetrics: return ArtifactKind::kScores;
    default: throw ConfigError("stage has no per-video artifact");
  }
}

struct Context {
  const PipelineConfig& cfg;
  const corpus::Corpus& corpus;
  corpus::ArtifactStore store;
  llm::Gateway* gateway = nullptr;
  events::EventBackend* backend = nullptr;
  llm::Decoding decoding;

  std::mutex mu;
  std::vector<Failure> failures;
  std::set<std::string> failed_videos;

  void fail(const std::string& video_id, std::string_view stage, const std::string& message) {
    std::lock_guard lock(mu);
    failures.push_back({video_id, std::string(stage), message, 0});
    if (!video_id.empty()) failed_videos.insert(video_id);
  }
  void log(const std::string& message) const {
    if (cfg.log) cfg.log(message);
  }
};

json require(const Context& ctx, const corpus::VideoRecord& rec, ArtifactKind kind) {
  auto doc = ctx.store.load(rec.video_id, kind);
  if (!doc) {
    throw std::runtime_error("missing " + std::string(corpus::to_string(kind)) +
                             " artifact");
  }
  return *doc;
}

events::EventSet gt_event_set(const json& events_doc) {
  return events::make_event_set(events_doc.at("groundtruth").get<std::vector<std::string>>(),
                                events::EventSource::kGroundtruth);
}

events::EventSet response_event_set(const json& events_doc, const std::string& model) {
  const auto& responses = events_doc.at("responses");
  if (!responses.contains(model)) throw std::runtime_error("no events for model " + model);
  return events::make_event_set(responses.at(model).get<std::vector<std::string>>(),
                                events::EventSource::kResponse);
}

json stage_gt(Context& ctx, const corpus::VideoRecord& rec) {
  if (rec.groundtruth) return {{"groundtruth", *rec.groundtruth}, {"source", "corpus"}};
  return {{"groundtruth", ctx.backend->synthesize_groundtruth(rec.captions)},
          {"source", "synthesized"}};
}

json stage_dims(Context& ctx, const corpus::VideoRecord& rec) {
  if (!ctx.gateway) throw std::runtime_error("dimension scoring needs the llm gateway");
  json captions = json::array();
  for (const auto& caption : rec.captions) {
    captions.push_back(annotation::to_json(
        annotation::score_dimensions(*ctx.gateway, ctx.decoding, caption)));
  }
  return {{"captions", captions}};
}

json stage_events(Context& ctx, const corpus::VideoRecord& rec) {
  const auto gt_text = require(ctx, rec, ArtifactKind::kGroundtruth).at("groundtruth").get<std::string>();
  const auto gt = ctx.backend->extract_events(gt_text, events::EventSource::kGroundtruth);
  json responses = json::object();
  for (const auto& [model, text] : rec.responses) {
    responses[model] = ctx.backend->extract_events(text, events::EventSource::kResponse).events;
  }
  return {{"groundtruth", gt.events}, {"responses", responses}};
}

json stage_weights(Context& ctx, const corpus::VideoRecord& rec) {
  const auto gt = gt_event_set(require(ctx, rec, ArtifactKind::kEvents));
  const auto d = events::derive_weights(*ctx.backend, gt, rec.captions);
  json caption_verdicts = json::array();
  for (const auto& v : d.caption_verdicts) caption_verdicts.push_back(events::to_json(v));
  return {{"events", d.weighted.events.events},
          {"supports", d.weighted.supports},
          {"weights", d.weighted.weights},
          {"caption_verdicts", caption_verdicts}};
}

json stage_verdicts(Context& ctx, const corpus::VideoRecord& rec) {
  const auto gt_text = require(ctx, rec, ArtifactKind::kGroundtruth).at("groundtruth").get<std::string>();
  const auto ev = require(ctx, rec, ArtifactKind::kEvents);
  const auto gt = gt_event_set(ev);
  json out = json::object();
  for (const auto& [model, text] : rec.responses) {
    const auto cand = response_event_set(ev, model);
    out[model] = {{"gt", events::to_json(ctx.backend->cross_check(text, gt))},
                  {"candidate", events::to_json(ctx.backend->cross_check(gt_text, cand))}};
  }
  return out;
}

json stage_metrics(Context& ctx, const corpus::VideoRecord& rec) {
  const auto gt_text = require(ctx, rec, ArtifactKind::kGroundtruth).at("groundtruth").get<std::string>();
  const auto ev = require(ctx, rec, ArtifactKind::kEvents);
  const auto w = require(ctx, rec, ArtifactKind::kWeights);
  const auto vd = require(ctx, rec, ArtifactKind::kVerdicts);
  const auto gt = gt_event_set(ev);
  if (w.at("events").get<std::vector<std::string>>() != gt.events) {
    throw std::runtime_error("weights artifact does not match the groundtruth events");
  }
  const auto weighted = events::weights_from_supports(gt, w.at("supports").get<std::vector<int>>());
  const auto reference = lexical::tokenize(gt_text);
  json out = json::object();
  for (const auto& [model, text] : rec.responses) {
    if (!vd.contains(model)) throw std::runtime_error("no verdicts for model " + model);
    const auto cand = response_event_set(ev, model);
    const auto gt_side = events::verdicts_from_json(vd.at(model).at("gt"));
    const auto cand_side = events::verdicts_from_json(vd.at(model).at("candidate"));
    const auto lex = lexical::score_all(lexical::tokenize(text), reference);
    const auto a = dq::autodq(gt_side, cand_side);
    const auto f = dq::fiova_dq(weighted, gt_side, cand_side,
                                dq::lexical_support_map(cand, cand_side, gt));
    out[model] = {
        {"metrics",
         {{"BLEU", lex.bleu},
          {"METEOR", lex.meteor},
          {"GLEU", lex.gleu},
          {"AutoDQ F1", a.f1},
          {"AutoDQ Recall", a.recall},
          {"AutoDQ Precision", a.precision},
          {"FIOVA-DQ F1", f.f1},
          {"FIOVA-DQ Recall", f.recall},
          {"FIOVA-DQ Precision", f.precision}}},
        {"gt_contradictions",
         events::count_relationship(gt_side, llm::Relationship::kContradiction)},
        {"candidate_contradictions",
         events::count_relationship(cand_side, llm::Relationship::kContradiction)}};
  }
  return out;
}

json run_stage(Context& ctx, Stage s, const corpus::VideoRecord& rec) {
  switch (s) {
    case Stage::kGroundtruth: return stage_gt(ctx, rec);
    case Stage::kDimensions: return stage_dims(ctx, rec);
    case Stage::kEvents: return stage_events(ctx, rec);
    case Stage::kWeights: return stage_weights(ctx, rec);
    case Stage::kVerdicts: return stage_verdicts(ctx, rec);
    case Stage::kMetrics: return stage_metrics(ctx, rec);
    default: throw ConfigError("not a per-video stage");
  }
}

void process_video(Context& ctx, const corpus::VideoRecord& rec) {
  for (Stage s : kAllStages) {
    if (s == Stage::kGroups || s == Stage::kBatch || !ctx.cfg.stages.count(s)) continue;
    const auto kind = artifact_for(s);
    if (ctx.store.exists(rec.video_id, kind)) continue;
    try {
      ctx.store.save(rec.video_id, kind, run_stage(ctx, s, rec));
    } catch (const std::exception& e) {
      ctx.fail(rec.video_id, to_string(s), e.what());
      ctx.log(rec.video_id + ": " + std::string(to_string(s)) + " failed: " + e.what());
      return;
    }
  }
}

void run_groups(Context& ctx) {
  std::map<std::string, annotation::CVProfile> profiles;
  for (const auto& rec : ctx.corpus) {
    if (ctx.failed_videos.count(rec.video_id)) continue;
    try {
      const auto doc = require(ctx, rec, ArtifactKind::kDimensions);
      std::vector<annotation::DimensionScores> scores;
      for (const auto& c : doc.at("captions")) {
        scores.push_back(annotation::dimension_scores_from_json(c));
      }
      profiles[rec.video_id] = annotation::human_cv_profile(rec, scores);
    } catch (const std::exception& e) {
      ctx.fail(rec.video_id, "groups", e.what());
    }
  }
  if (profiles.empty()) {
    ctx.fail("", "groups", "no video has dimension scores");
    return;
  }
  try {
    const auto grouping = annotation::assign_groups(profiles);
    json videos = json::object();
    for (const auto& [id, p] : profiles) {
      json dims = json::object();
      for (const auto& [d, v] : p.per_dimension_cv) dims[std::string(annotation::to_string(d))] = v;
      const auto& a = grouping.assignments.at(id);
      videos[id] = {{"per_dimension_cv", dims},
                    {"mean_cv", p.mean_cv},
                    {"interval", a.interval_index},
                    {"group", std::string(1, a.label)}};
    }
    const json doc = {{"intervals", grouping.intervals},
                      {"max_cv", grouping.max_cv},
                      {"order", grouping.order},
                      {"videos", videos}};
    io::write_file_atomic(ctx.cfg.out_dir / "groups" / "groups.json", corpus::serialize(doc));
    std::ostringstream csv;
    annotation::write_group_csv(csv, profiles, grouping);
    io::write_file_atomic(ctx.cfg.out_dir / "groups" / "groups.csv", csv.str());
  } catch (const std::exception& e) {
    ctx.fail("", "groups", e.what());
  }
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

report::ReportBundle build_bundle(Context& ctx, const std::string& hash) {
  report::ReportBundle b;
  auto& meta = b.metadata;
  meta.config_hash = hash;
  meta.backend = std::string(to_string(ctx.cfg.backend));
  meta.model_id = ctx.cfg.model_id;
  meta.videos_total = ctx.corpus.size();
  meta.failures = ctx.failures.size();

  std::vector<const corpus::VideoRecord*> records;
  for (const auto& rec : ctx.corpus) records.push_back(&rec);
  std::sort(records.begin(), records.end(),
            [](auto* a, auto* b) { return a->video_id < b->video_id; });

  // Groups, when the groups stage has produced them.
  std::map<std::string, std::pair<char, double>> grouped;  // id -> (label, mean_cv)
  const auto groups_path = ctx.cfg.out_dir / "groups" / "groups.json";
  if (fs::exists(groups_path)) {
    const json g = json::parse(io::read_file(groups_path));
    meta.intervals = g.at("intervals").get<int>();
    meta.max_cv = g.at("max_cv").get<double>();
    annotation::Grouping grouping;
    grouping.intervals = meta.intervals;
    grouping.max_cv = meta.max_cv;
    for (const auto& [id, v] : g.at("videos").items()) {
      if (!ctx.corpus.contains(id)) continue;
      const char label = v.at("group").get<std::string>().at(0);
      grouped[id] = {label, v.at("mean_cv").get<double>()};
      grouping.assignments[id] = {v.at("interval").get<int>(), label};
    }
    if (grouping.intervals >= 6) {
      const auto hard = annotation::select_hard_subset(grouping);
      meta.hard_subset.assign(hard.begin(), hard.end());
    }
  }

  // Per-video scores.
  using ModelScores = std::map<std::string, std::map<std::string, double>>;
  std::map<std::string, ModelScores> scores;
  std::map<std::string, report::ModelRow> models;
  for (const auto* rec : records) {
    const auto doc = ctx.store.load(rec->video_id, ArtifactKind::kScores);
    if (!doc) continue;
    ++meta.videos_scored;
    for (const auto& [model, entry] : doc->items()) {
      auto metrics = entry.at("metrics").get<std::map<std::string, double>>();
      b.video_scores.push_back({rec->video_id, model, metrics});
      scores[rec->video_id][model] = metrics;
      auto& row = models[model];
      row.model = model;
      ++row.videos;
      for (const auto& [name, v] : metrics) row.metrics[name] += v;
      row.gt_contradictions += entry.at("gt_contradictions").get<std::size_t>();
      row.candidate_contradictions += entry.at("candidate_contradictions").get<std::size_t>();
    }
  }
  for (auto& [name, row] : models) {
    for (auto& [metric, v] : row.metrics) v /= static_cast<double>(row.videos);
    b.models.push_back(row);
  }

  // Consistency across models and CV rank differences.
  std::map<std::string, double> human_cv, lvlm_cv;
  for (const auto* rec : records) {
    report::VideoRow row;
    row.video_id = rec->video_id;
    if (auto it = grouped.find(rec->video_id); it != grouped.end()) {
      row.group = it->second.first;
      row.human_cv = it->second.second;
    }
    if (auto it = scores.find(rec->video_id); it != scores.end() && it->second.size() >= 2) {
      try {
        const auto p = batch::lvlm_cv_profile(it->second, batch::lvlm_cv_metrics());
        row.lvlm_cv = p.mean_cv;
        row.lvlm_cv_skipped = p.skipped;
      } catch (const batch::BatchError&) {
      }
    }
    if (!row.group && !row.lvlm_cv && !scores.count(rec->video_id)) continue;
    if (row.human_cv && row.lvlm_cv) {
      human_cv[row.video_id] = *row.human_cv;
      lvlm_cv[row.video_id] = *row.lvlm_cv;
    }
    b.videos.push_back(std::move(row));
  }
  if (!human_cv.empty()) {
    const auto r = batch::rank_and_diff(human_cv, lvlm_cv);
    for (auto& row : b.videos) {
      if (!r.diff.count(row.video_id)) continue;
      row.human_rank = r.human_rank.at(row.video_id);
      row.lvlm_rank = r.lvlm_rank.at(row.video_id);
      row.rank_diff = r.diff.at(row.video_id);
    }
  }

  // Group-wise means.
  if (meta.intervals > 0) {
    for (const auto& metric : batch::report_metrics()) {
      for (const auto& [model, mrow] : models) {
        std::map<char, std::vector<double>> values;
        for (const auto& [id, per_model] : scores) {
          auto g = grouped.find(id);
          auto m = per_model.find(model);
          if (g == grouped.end() || m == per_model.end()) continue;
          values[g->second.first].push_back(m->second.at(metric));
        }
        report::GroupRow row{metric, model, {}};
        for (const auto& [g, vs] : values) row.by_group[g] = mean(vs);
        b.groups.push_back(std::move(row));
      }
    }
  }

  // Metric correlations across models, averaged over videos.
  std::vector<batch::CorrelationMatrix> matrices;
  for (const auto& [id, per_model] : scores) {
    if (per_model.size() < 2) continue;
    std::vector<std::pair<std::string, std::vector<double>>> items;
    for (const auto& metric : batch::report_metrics()) {
      std::vector<double> column;
      for (const auto& [model, m] : per_model) column.push_back(m.at(metric));
      items.emplace_back(metric, std::move(column));
    }
    matrices.push_back(batch::metric_correlation_matrix(items, true));
  }
  if (!matrices.empty()) b.correlations = batch::average_matrices(matrices);

  // Alignment with human rankings.
  if (!ctx.cfg.rankings_path.empty()) {
    const auto rankings = study::ingest_rankings(ctx.cfg.rankings_path);
    std::map<std::string, std::vector<double>> rhos;
    for (const auto& matrix : rankings) {
      auto it = scores.find(matrix.video_id);
      if (it == scores.end()) continue;
      const auto s_all = matrix.s_all();
      for (const auto& metric : batch::report_metrics()) {
        std::vector<double> metric_scores;
        for (const auto& column : matrix.columns) {
          auto m = it->second.find(column);
          if (m == it->second.end()) break;
          metric_scores.push_back(m->second.at(metric));
        }
        if (metric_scores.size() != matrix.columns.size()) break;
        try {
          rhos[metric].push_back(batch::human_alignment(s_all, metric_scores));
        } catch (const batch::BatchError&) {
        }
      }
    }
    for (const auto& metric : batch::report_metrics()) {
      auto it = rhos.find(metric);
      if (it == rhos.end() || it->second.empty()) continue;
      b.alignment.push_back({metric, mean(it->second), it->second.size()});
    }
  }
  return b;
}

}  // namespace

void PipelineConfig::validate() const {
  if (corpus_path.empty()) throw ConfigError("--corpus is required");
  if (out_dir.empty()) throw ConfigError("--out is required");
  if (workers < 1) throw ConfigError("--workers must be at least 1");
  if (stages.empty()) throw ConfigError("no stages selected");
  if (needs_gateway(*this)) {
    if (model_id.empty()) throw ConfigError("--model-id is required for llm-backed stages");
    if (!cache_only && !transport && endpoint.base_url.empty()) {
      throw ConfigError("live mode needs --endpoint (or --cache-only)");
    }
  }
}

fs::path PipelineConfig::effective_cache_dir() const {
  return cache_dir.empty() ? out_dir / "cache" : cache_dir;
}

json to_json(const std::vector<Failure>& failures) {
  json arr = json::array();
  for (const auto& f : failures) {
    json entry = {{"video_id", f.video_id}, {"stage", f.stage}, {"message", f.message}};
    if (f.line) entry["line"] = f.line;
    arr.push_back(entry);
  }
  return json{{"failures", arr}};
}

std::string config_hash(const PipelineConfig& c, const std::string& corpus_bytes) {
  const json doc = {{"backend", to_string(c.backend)},
                    {"model_id", c.model_id},
                    {"temperature", c.temperature},
                    {"max_tokens", c.max_tokens},
                    {"corpus_sha256", llm::sha256_hex(corpus_bytes)}};
  return llm::sha256_hex(doc.dump());
}

RunResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const std::string corpus_bytes = io::read_file(cfg.corpus_path);
  auto scan = corpus::scan_corpus(cfg.corpus_path);

  std::unique_ptr<llm::Gateway> gateway;
  if (needs_gateway(cfg)) {
    llm::GatewayConfig gc;
    gc.cache_dir = cfg.effective_cache_dir();
    gc.cache_only = cfg.cache_only;
    gc.retry = cfg.retry;
    gc.max_in_flight = cfg.max_in_flight;
    gc.requests_per_second = cfg.requests_per_second;
    gc.burst = std::max(1.0, cfg.requests_per_second);
    std::shared_ptr<llm::ChatTransport> transport = cfg.transport;
    if (!transport && !cfg.cache_only) {
      transport = std::make_shared<llm::HttpChatTransport>(cfg.endpoint);
    }
    gateway = std::make_unique<llm::Gateway>(gc, transport);
  }
  const llm::Decoding decoding{cfg.model_id, cfg.temperature, cfg.max_tokens};
  std::unique_ptr<events::EventBackend> backend;
  if (cfg.backend == Backend::kLlm && gateway) {
    backend = std::make_unique<events::LlmEventBackend>(*gateway, decoding);
  } else {
    backend = std::make_unique<events::LexicalEventBackend>();
  }

  Context ctx{cfg, scan.corpus, corpus::ArtifactStore(cfg.out_dir / "videos", scan.corpus),
              gateway.get(), backend.get(), decoding, {}, {}, {}};
  for (const auto& f : scan.failures) {
    ctx.failures.push_back({f.video_id, "ingest", f.message, f.line});
  }

  const auto& records = scan.corpus.records();
  std::atomic<std::size_t> next{0};
  {
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), records.size());
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < records.size(); k = next++) {
          process_video(ctx, records[k]);
        }
      });
    }
  }

  if (cfg.stages.count(Stage::kGroups)) run_groups(ctx);

  RunResult result;
  if (cfg.stages.count(Stage::kBatch)) {
    try {
      auto bundle = build_bundle(ctx, config_hash(cfg, corpus_bytes));
      io::write_file_atomic(cfg.out_dir / "batch" / "bundle.json",
                            corpus::serialize(report::to_json(bundle)));
      report::emit_report(bundle, cfg.format, cfg.out_dir / "report");
      result.bundle = std::move(bundle);
    } catch (const std::exception& e) {
      ctx.fail("", "batch", e.what());
    }
  }

  std::sort(ctx.failures.begin(), ctx.failures.end(), [](const Failure& a, const Failure& b) {
    return std::tie(a.video_id, a.line, a.stage, a.message) <
           std::tie(b.video_id, b.line, b.stage, b.message);
  });
  io::write_file_atomic(cfg.out_dir / "failures.json", corpus::serialize(to_json(ctx.failures)));

  result.failures = std::move(ctx.failures);
  result.videos = records.size();
  if (gateway) result.stats = gateway->stats();
  return result;
}

report::ReportBundle load_bundle(const fs::path& out_dir) {
  const auto path = out_dir / "batch" / "bundle.json";
  try {
    return report::bundle_from_json(json::parse(io::read_file(path)));
  } catch (const io::IoError& e) {
    throw report::ReportError(std::string(e.what()) + " (run batch-stats first)");
  } catch (const json::exception& e) {
    throw report::ReportError("malformed " + path.string() + ": " + e.what());
  }
}

}  // namespace fiova::pipeline
