// fiova command line: pipeline stages, reports, and the ranking study server.
#include <csignal>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "fiova/corpus.h"
#include "fiova/file_io.h"
#include "fiova/pipeline.h"
#include "fiova/study.h"

namespace {

namespace fs = std::filesystem;
using fiova::pipeline::PipelineConfig;
using fiova::pipeline::Stage;

struct Options {
  std::string corpus;
  std::string out;
  std::string model_id;
  std::string endpoint;
  std::string cache_dir;
  std::string backend = "llm";
  std::string format = "csv";
  std::string stages = "all";
  std::string rankings;
  bool cache_only = false;
  int workers = 4;
  double temperature = 0.0;
  int max_tokens = 1024;
  double rps = 8.0;
};

void add_pipeline_options(CLI::App* cmd, Options& o, bool with_stages) {
  cmd->add_option("--corpus", o.corpus, "corpus file (JSON lines)")->required();
  cmd->add_option("--out", o.out, "output directory")->required();
  cmd->add_option("--model-id", o.model_id, "chat model identifier");
  cmd->add_option("--endpoint", o.endpoint, "OpenAI-compatible base URL, e.g. http://host/v1");
  cmd->add_flag("--cache-only", o.cache_only, "replay cached completions, never call the network");
  cmd->add_option("--cache-dir", o.cache_dir, "completion cache (default <out>/cache)");
  cmd->add_option("--workers", o.workers, "videos processed concurrently")->check(CLI::PositiveNumber);
  cmd->add_option("--backend", o.backend, "event backend")->check(CLI::IsMember({"llm", "lexical"}));
  cmd->add_option("--format", o.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--rankings", o.rankings, "study export used for the human alignment table");
  cmd->add_option("--temperature", o.temperature, "sampling temperature");
  cmd->add_option("--max-tokens", o.max_tokens, "completion token limit");
  cmd->add_option("--rate", o.rps, "requests per second (0 disables the limiter)");
  if (with_stages) {
    cmd->add_option("--stages", o.stages,
                    "comma-separated: gt,dims,groups,events,weights,verdicts,metrics,batch");
  }
}

int run(const Options& o, std::set<Stage> stages) {
  PipelineConfig cfg;
  cfg.corpus_path = o.corpus;
  cfg.out_dir = o.out;
  cfg.cache_dir = o.cache_dir;
  cfg.model_id = o.model_id;
  cfg.endpoint.base_url = o.endpoint;
  if (const char* key = std::getenv(fiova::llm::kApiKeyEnv)) cfg.endpoint.api_key = key;
  cfg.cache_only = o.cache_only;
  cfg.workers = o.workers;
  cfg.backend = fiova::pipeline::backend_from_string(o.backend);
  cfg.stages = std::move(stages);
  cfg.temperature = o.temperature;
  cfg.max_tokens = o.max_tokens;
  cfg.requests_per_second = o.rps;
  cfg.rankings_path = o.rankings;
  cfg.format = fiova::report::format_from_string(o.format);
  cfg.log = [](const std::string& m) { std::cerr << m << "\n"; };

  const auto result = fiova::pipeline::run_pipeline(cfg);
  std::cerr << result.videos << " videos, " << result.failures.size() << " failures, "
            << result.stats.network_requests << " requests, " << result.stats.cache_hits
            << " cache hits\n";
  for (const auto& f : result.failures) {
    std::cerr << "  " << (f.video_id.empty() ? "-" : f.video_id) << " [" << f.stage
              << "] " << f.message << "\n";
  }
  return result.exit_code();
}

std::set<Stage> default_stages(const Options& o) {
  auto stages = fiova::pipeline::parse_stages(o.stages);
  // The lexical backend has no scorer for the five annotation dimensions.
  if (o.backend == "lexical" && o.stages == "all") {
    stages.erase(Stage::kDimensions);
    stages.erase(Stage::kGroups);
  }
  return stages;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fine-grained video caption evaluation pipeline"};
  app.require_subcommand(1);

  Options o;
  struct StageCommand {
    const char* name;
    const char* help;
    std::set<Stage> stages;
  };
  const std::vector<StageCommand> stage_commands = {
      {"synth-gt", "synthesize one groundtruth per video", {Stage::kGroundtruth}},
      {"score-dims", "score the five captions on the annotation dimensions", {Stage::kDimensions}},
      {"group", "compute annotation CVs and assign groups", {Stage::kGroups}},
      {"extract-events", "extract events from groundtruths and responses", {Stage::kEvents}},
      {"weigh", "derive consensus weights for groundtruth events", {Stage::kWeights}},
      {"evaluate", "cross-check events and compute per-video metrics",
       {Stage::kVerdicts, Stage::kMetrics}},
      {"batch-stats", "aggregate metrics, CVs and correlations into a report", {Stage::kBatch}},
  };
  std::map<CLI::App*, std::set<Stage>> stage_apps;
  for (const auto& c : stage_commands) {
    auto* cmd = app.add_subcommand(c.name, c.help);
    add_pipeline_options(cmd, o, false);
    stage_apps[cmd] = c.stages;
  }
  auto* run_cmd = app.add_subcommand("run", "run the selected stages in dependency order");
  add_pipeline_options(run_cmd, o, true);

  auto* ingest = app.add_subcommand("ingest", "validate a corpus file");
  ingest->add_option("--corpus", o.corpus, "corpus file")->required();
  ingest->add_option("--out", o.out, "write <out>/ingest.json");

  std::string dest;
  auto* report = app.add_subcommand("report", "emit report tables from the batch bundle");
  report->add_option("--out", o.out, "pipeline output directory")->required();
  report->add_option("--format", o.format, "report format")->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--dest", dest, "destination directory (default <out>/report)");

  std::string captions = "human", state_dir, static_dir, host = "127.0.0.1", video_url;
  int port = 8090;
  std::optional<std::uint64_t> seed;
  auto* serve = app.add_subcommand("serve-study", "serve the ranking study HTTP API");
  serve->add_option("--corpus", o.corpus, "corpus file")->required();
  serve->add_option("--out", o.out, "pipeline output directory with groundtruth artifacts");
  serve->add_option("--captions", captions, "human: Human1-5 plus GPT-GT; models: six responses")
      ->check(CLI::IsMember({"human", "models"}));
  serve->add_option("--state", state_dir, "directory for the session seed and submissions");
  serve->add_option("--seed", seed, "shuffle seed for a new session");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "bind port");
  serve->add_option("--static", static_dir, "directory served at /");
  serve->add_option("--video-url", video_url, "video URL template with {video_id}");

  std::string export_file, output;
  auto* rankings = app.add_subcommand("ingest-rankings", "turn a study export into ranking matrices");
  rankings->add_option("export", export_file, "export file (JSON lines)")->required();
  rankings->add_option("--output", output, "write matrices JSON here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [cmd, stages] : stage_apps) {
      if (cmd->parsed()) return run(o, stages);
    }
    if (run_cmd->parsed()) return run(o, default_stages(o));

    if (ingest->parsed()) {
      const auto scan = fiova::corpus::scan_corpus(o.corpus);
      std::cout << scan.corpus.size() << " records, " << scan.failures.size() << " failures\n";
      nlohmann::json failures = nlohmann::json::array();
      for (const auto& f : scan.failures) {
        std::cout << "  line " << f.line << ": " << f.message << "\n";
        failures.push_back({{"line", f.line}, {"video_id", f.video_id}, {"message", f.message}});
      }
      if (!o.out.empty()) {
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& r : scan.corpus) ids.push_back(r.video_id);
        fiova::io::write_file_atomic(fs::path(o.out) / "ingest.json",
                                     fiova::corpus::serialize({{"videos", ids}, {"failures", failures}}));
      }
      return scan.failures.empty() ? 0 : 1;
    }

    if (report->parsed()) {
      const auto bundle = fiova::pipeline::load_bundle(o.out);
      const fs::path target = dest.empty() ? fs::path(o.out) / "report" : fs::path(dest);
      for (const auto& p : fiova::report::emit_report(
               bundle, fiova::report::format_from_string(o.format), target)) {
        std::cout << p.string() << "\n";
      }
      return 0;
    }

    if (serve->parsed()) {
      const auto corpus = fiova::corpus::load_corpus(o.corpus);
      std::map<std::string, std::string> gts;
      if (!o.out.empty()) {
        fiova::corpus::ArtifactStore store(fs::path(o.out) / "videos", corpus);
        for (const auto& rec : corpus) {
          if (auto doc = store.load(rec.video_id, fiova::corpus::ArtifactKind::kGroundtruth)) {
            gts[rec.video_id] = doc->at("groundtruth").get<std::string>();
          }
        }
      }
      auto items = fiova::study::build_items(
          corpus,
          captions == "human" ? fiova::study::CaptionSet::kHuman : fiova::study::CaptionSet::kModels,
          gts, video_url);
      if (items.empty()) {
        std::cerr << "no video has six caption sources\n";
        return 2;
      }
      fiova::study::StudyService service(std::move(items), state_dir, seed);
      std::optional<fs::path> mount;
      if (!static_dir.empty()) mount = static_dir;
      fiova::study::StudyServer server(service, mount);
      std::cerr << "serving " << host << ":" << port << " seed " << service.seed() << "\n";
      return server.listen(host, port) ? 0 : 1;
    }

    if (rankings->parsed()) {
      const auto matrices = fiova::study::ingest_rankings(export_file);
      const std::string text = fiova::study::to_json(matrices).dump(2) + "\n";
      if (output.empty()) {
        std::cout << text;
      } else {
        fiova::io::write_file_atomic(output, text);
      }
      for (const auto& m : matrices) {
        std::cerr << m.video_id << " mode " << m.mode << ": " << m.subjects.size()
                  << " subjects, S-All";
        for (double v : m.s_all()) std::cerr << " " << v;
        std::cerr << "\n";
      }
      return 0;
    }
  } catch (const fiova::pipeline::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
