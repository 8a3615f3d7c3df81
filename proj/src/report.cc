#include "fiova/report.h"

#include <cmath>
#include <cstdio>
#include <limits>

#include "fiova/csv.h"
#include "fiova/file_io.h"

namespace fiova::report {

using nlohmann::json;

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<T>();
}

double number_or_nan(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

std::string opt_field(const std::optional<double>& v) {
  return v ? fixed3(*v) : std::string();
}

std::string opt_field(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::string header(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += csv_field(names[i]);
  }
  return out + "\n";
}

std::vector<char> group_labels(const ReportBundle& b) {
  std::vector<char> labels;
  for (int i = 0; i < b.metadata.intervals; ++i) labels.push_back(static_cast<char>('A' + i));
  return labels;
}

}  // namespace

Format format_from_string(const std::string& name) {
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw ReportError("unknown report format \"" + name + "\"");
}

std::string fixed3(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

json to_json(const ReportBundle& b) {
  const auto& m = b.metadata;
  json doc;
  doc["metadata"] = {{"intervals", m.intervals},
                     {"max_cv", m.max_cv},
                     {"config_hash", m.config_hash},
                     {"backend", m.backend},
                     {"model_id", m.model_id},
                     {"meteor_variant", m.meteor_variant},
                     {"weight_rule", m.weight_rule},
                     {"precision_rule", m.precision_rule},
                     {"videos_total", m.videos_total},
                     {"videos_scored", m.videos_scored},
                     {"failures", m.failures},
                     {"hard_subset", m.hard_subset}};
  doc["models"] = json::array();
  for (const auto& r : b.models) {
    doc["models"].push_back({{"model", r.model},
                             {"videos", r.videos},
                             {"metrics", r.metrics},
                             {"gt_contradictions", r.gt_contradictions},
                             {"candidate_contradictions", r.candidate_contradictions}});
  }
  doc["video_scores"] = json::array();
  for (const auto& r : b.video_scores) {
    doc["video_scores"].push_back(
        {{"video_id", r.video_id}, {"model", r.model}, {"metrics", r.metrics}});
  }
  doc["videos"] = json::array();
  for (const auto& r : b.videos) {
    doc["videos"].push_back(
        {{"video_id", r.video_id},
         {"group", r.group ? json(std::string(1, *r.group)) : json(nullptr)},
         {"human_cv", opt(r.human_cv)},
         {"lvlm_cv", opt(r.lvlm_cv)},
         {"lvlm_cv_skipped", r.lvlm_cv_skipped},
         {"human_rank", opt(r.human_rank)},
         {"lvlm_rank", opt(r.lvlm_rank)},
         {"rank_diff", opt(r.rank_diff)}});
  }
  doc["groups"] = json::array();
  for (const auto& r : b.groups) {
    json by = json::object();
    for (const auto& [g, v] : r.by_group) by[std::string(1, g)] = v;
    doc["groups"].push_back({{"metric", r.metric}, {"model", r.model}, {"by_group", by}});
  }
  doc["correlations"] = b.correlations ? batch::to_json(*b.correlations) : json(nullptr);
  doc["alignment"] = json::array();
  for (const auto& r : b.alignment) {
    doc["alignment"].push_back({{"metric", r.metric}, {"rho", r.rho}, {"videos", r.videos}});
  }
  return doc;
}

ReportBundle bundle_from_json(const json& doc) {
  try {
    ReportBundle b;
    const auto& m = doc.at("metadata");
    b.metadata.intervals = m.at("intervals").get<int>();
    b.metadata.max_cv = m.at("max_cv").get<double>();
    b.metadata.config_hash = m.at("config_hash").get<std::string>();
    b.metadata.backend = m.at("backend").get<std::string>();
    b.metadata.model_id = m.at("model_id").get<std::string>();
    b.metadata.meteor_variant = m.at("meteor_variant").get<std::string>();
    b.metadata.weight_rule = m.at("weight_rule").get<std::string>();
    b.metadata.precision_rule = m.at("precision_rule").get<std::string>();
    b.metadata.videos_total = m.at("videos_total").get<std::size_t>();
    b.metadata.videos_scored = m.at("videos_scored").get<std::size_t>();
    b.metadata.failures = m.at("failures").get<std::size_t>();
    b.metadata.hard_subset = m.at("hard_subset").get<std::vector<std::string>>();
    for (const auto& r : doc.at("models")) {
      b.models.push_back({r.at("model").get<std::string>(), r.at("videos").get<std::size_t>(),
                          r.at("metrics").get<std::map<std::string, double>>(),
                          r.at("gt_contradictions").get<std::size_t>(),
                          r.at("candidate_contradictions").get<std::size_t>()});
    }
    for (const auto& r : doc.at("video_scores")) {
      b.video_scores.push_back({r.at("video_id").get<std::string>(),
                                r.at("model").get<std::string>(),
                                r.at("metrics").get<std::map<std::string, double>>()});
    }
    for (const auto& r : doc.at("videos")) {
      VideoRow row;
      row.video_id = r.at("video_id").get<std::string>();
      if (auto g = opt_from<std::string>(r, "group"); g && g->size() == 1) row.group = (*g)[0];
      row.human_cv = opt_from<double>(r, "human_cv");
      row.lvlm_cv = opt_from<double>(r, "lvlm_cv");
      row.lvlm_cv_skipped = r.at("lvlm_cv_skipped").get<std::vector<std::string>>();
      row.human_rank = opt_from<int>(r, "human_rank");
      row.lvlm_rank = opt_from<int>(r, "lvlm_rank");
      row.rank_diff = opt_from<int>(r, "rank_diff");
      b.videos.push_back(std::move(row));
    }
    for (const auto& r : doc.at("groups")) {
      GroupRow row{r.at("metric").get<std::string>(), r.at("model").get<std::string>(), {}};
      for (const auto& [g, v] : r.at("by_group").items()) row.by_group[g.at(0)] = v.get<double>();
      b.groups.push_back(std::move(row));
    }
    if (const auto& c = doc.at("correlations"); !c.is_null()) {
      batch::CorrelationMatrix cm;
      cm.metrics = c.at("metrics").get<std::vector<std::string>>();
      for (const auto& row : c.at("rho")) {
        std::vector<double> values;
        for (const auto& v : row) values.push_back(number_or_nan(v));
        cm.rho.push_back(std::move(values));
      }
      b.correlations = std::move(cm);
    }
    for (const auto& r : doc.at("alignment")) {
      b.alignment.push_back({r.at("metric").get<std::string>(), r.at("rho").get<double>(),
                             r.at("videos").get<std::size_t>()});
    }
    return b;
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed report bundle: ") + e.what());
  }
}

std::string models_csv(const ReportBundle& b) {
  std::vector<std::string> cols = {"model", "videos"};
  for (const auto& m : batch::report_metrics()) cols.push_back(m);
  cols.push_back("gt_contradictions");
  cols.push_back("candidate_contradictions");
  std::string out = header(cols);
  for (const auto& r : b.models) {
    out += csv_field(r.model) + "," + std::to_string(r.videos);
    for (const auto& m : batch::report_metrics()) {
      const auto it = r.metrics.find(m);
      out += "," + (it == r.metrics.end() ? std::string() : fixed3(it->second));
    }
    out += "," + std::to_string(r.gt_contradictions) + "," +
           std::to_string(r.candidate_contradictions) + "\n";
  }
  return out;
}

std::string video_scores_csv(const ReportBundle& b) {
  std::vector<std::string> cols = {"video_id", "model"};
  for (const auto& m : batch::report_metrics()) cols.push_back(m);
  std::string out = header(cols);
  for (const auto& r : b.video_scores) {
    out += csv_field(r.video_id) + "," + csv_field(r.model);
    for (const auto& m : batch::report_metrics()) {
      const auto it = r.metrics.find(m);
      out += "," + (it == r.metrics.end() ? std::string() : fixed3(it->second));
    }
    out += "\n";
  }
  return out;
}

std::string videos_csv(const ReportBundle& b) {
  std::string out = header({"video_id", "group", "human_cv", "lvlm_cv", "human_rank",
                            "lvlm_rank", "rank_diff", "lvlm_cv_skipped"});
  for (const auto& r : b.videos) {
    std::string skipped;
    for (std::size_t i = 0; i < r.lvlm_cv_skipped.size(); ++i) {
      if (i) skipped += ';';
      skipped += r.lvlm_cv_skipped[i];
    }
    out += csv_field(r.video_id) + "," + (r.group ? std::string(1, *r.group) : "") + "," +
           opt_field(r.human_cv) + "," + opt_field(r.lvlm_cv) + "," +
           opt_field(r.human_rank) + "," + opt_field(r.lvlm_rank) + "," +
           opt_field(r.rank_diff) + "," + csv_field(skipped) + "\n";
  }
  return out;
}

std::string groups_csv(const ReportBundle& b) {
  const auto labels = group_labels(b);
  std::vector<std::string> cols = {"metric", "model"};
  for (char g : labels) cols.push_back(std::string(1, g));
  std::string out = header(cols);
  for (const auto& r : b.groups) {
    out += csv_field(r.metric) + "," + csv_field(r.model);
    for (char g : labels) {
      const auto it = r.by_group.find(g);
      out += "," + (it == r.by_group.end() ? std::string() : fixed3(it->second));
    }
    out += "\n";
  }
  return out;
}

std::string correlations_csv(const ReportBundle& b) {
  if (!b.correlations) return header({"metric"});
  const auto& c = *b.correlations;
  std::vector<std::string> cols = {"metric"};
  cols.insert(cols.end(), c.metrics.begin(), c.metrics.end());
  std::string out = header(cols);
  for (std::size_t i = 0; i < c.metrics.size(); ++i) {
    out += csv_field(c.metrics[i]);
    for (double v : c.rho[i]) out += "," + fixed3(v);
    out += "\n";
  }
  return out;
}

std::string alignment_csv(const ReportBundle& b) {
  std::string out = header({"metric", "rho", "videos"});
  for (const auto& r : b.alignment) {
    out += csv_field(r.metric) + "," + fixed3(r.rho) + "," + std::to_string(r.videos) + "\n";
  }
  return out;
}

std::string metadata_csv(const ReportBundle& b) {
  const auto& m = b.metadata;
  std::string hard;
  for (std::size_t i = 0; i < m.hard_subset.size(); ++i) {
    if (i) hard += ';';
    hard += m.hard_subset[i];
  }
  std::string out = "key,value\n";
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"intervals", std::to_string(m.intervals)},
      {"max_cv", fixed3(m.max_cv)},
      {"config_hash", m.config_hash},
      {"backend", m.backend},
      {"model_id", m.model_id},
      {"meteor_variant", m.meteor_variant},
      {"weight_rule", m.weight_rule},
      {"precision_rule", m.precision_rule},
      {"videos_total", std::to_string(m.videos_total)},
      {"videos_scored", std::to_string(m.videos_scored)},
      {"failures", std::to_string(m.failures)},
      {"hard_subset", hard}};
  for (const auto& [k, v] : rows) out += k + "," + csv_field(v) + "\n";
  return out;
}

std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle, Format format,
                                               const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  if (format == Format::kJson) {
    files.emplace_back("report.json", to_json(bundle).dump(2) + "\n");
  } else {
    files.emplace_back("models.csv", models_csv(bundle));
    files.emplace_back("video_scores.csv", video_scores_csv(bundle));
    files.emplace_back("videos.csv", videos_csv(bundle));
    files.emplace_back("groups.csv", groups_csv(bundle));
    files.emplace_back("correlations.csv", correlations_csv(bundle));
    files.emplace_back("alignment.csv", alignment_csv(bundle));
    files.emplace_back("metadata.csv", metadata_csv(bundle));
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [name, contents] : files) {
    try {
      io::write_file_atomic(dir / name, contents);
    } catch (const io::IoError& e) {
      throw ReportError(e.what());
    }
    written.push_back(dir / name);
  }
  return written;
}

}  // namespace fiova::report
