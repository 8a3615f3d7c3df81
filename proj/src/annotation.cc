#include "fiova/annotation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fiova/csv.h"
#include "fiova/lexical.h"
#include "fiova/structured.h"

namespace fiova::annotation {

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::kConsistency: return "consistency";
    case Dimension::kContext: return "context";
    case Dimension::kCorrectness: return "correctness";
    case Dimension::kDetailOrientation: return "detail_orientation";
    case Dimension::kTemporality: return "temporality";
    case Dimension::kLength: return "length";
  }
  return "unknown";
}

llm::TemplateId template_for(Dimension d) {
  switch (d) {
    case Dimension::kConsistency: return llm::TemplateId::kDimConsistency;
    case Dimension::kContext: return llm::TemplateId::kDimContext;
    case Dimension::kCorrectness: return llm::TemplateId::kDimCorrectness;
    case Dimension::kDetailOrientation: return llm::TemplateId::kDimDetail;
    case Dimension::kTemporality: return llm::TemplateId::kDimTemporality;
    case Dimension::kLength: break;
  }
  throw AnalysisError("length has no prompt");
}

double DimensionScores::value(Dimension d) const {
  switch (d) {
    case Dimension::kConsistency: return consistency;
    case Dimension::kContext: return context;
    case Dimension::kCorrectness: return correctness;
    case Dimension::kDetailOrientation: return detail_orientation;
    case Dimension::kTemporality: return temporality;
    case Dimension::kLength: return static_cast<double>(length);
  }
  return 0.0;
}

void DimensionScores::validate() const {
  for (auto d : kAllDimensions) {
    const double v = value(d);
    if (d == Dimension::kLength ? v < 1 : (v < 1 || v > 10)) {
      throw AnalysisError(std::string(to_string(d)) + " out of range: " +
                          std::to_string(v));
    }
  }
}

nlohmann::json to_json(const DimensionScores& s) {
  return {{"consistency", s.consistency},
          {"context", s.context},
          {"correctness", s.correctness},
          {"detail_orientation", s.detail_orientation},
          {"temporality", s.temporality},
          {"length", s.length}};
}

DimensionScores dimension_scores_from_json(const nlohmann::json& doc) {
  DimensionScores s;
  try {
    s.consistency = doc.at("consistency").get<int>();
    s.context = doc.at("context").get<int>();
    s.correctness = doc.at("correctness").get<int>();
    s.detail_orientation = doc.at("detail_orientation").get<int>();
    s.temporality = doc.at("temporality").get<int>();
    s.length = doc.at("length").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw AnalysisError(std::string("bad dimension scores: ") + e.what());
  }
  s.validate();
  return s;
}

DimensionScores score_dimensions(llm::Gateway& gateway,
                                 const llm::Decoding& decoding,
                                 std::string_view caption) {
  DimensionScores s;
  try {
    s.length = lexical::word_count(caption);
  } catch (const lexical::LexicalError& e) {
    throw AnalysisError(std::string("caption: ") + e.what());
  }
  if (s.length == 0) throw AnalysisError("caption has no words");
  int* slots[] = {&s.consistency, &s.context, &s.correctness,
                  &s.detail_orientation, &s.temporality};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto dim = kAllDimensions[i];
    try {
      *slots[i] = llm::parse_score(
          gateway.complete(llm::render_dimension(template_for(dim), caption), decoding));
    } catch (const std::exception& e) {
      throw ScoringError("dimension " + std::string(to_string(dim)) + ": " + e.what());
    }
  }
  return s;
}

double cv(std::span<const double> values) {
  if (values.size() < 2) throw AnalysisError("cv needs at least 2 values");
  double sum = 0.0;
  for (double v : values) {
    if (v < 0 || !std::isfinite(v)) throw AnalysisError("cv values must be nonnegative");
    sum += v;
  }
  const double mean = sum / static_cast<double>(values.size());
  if (mean == 0.0) throw AnalysisError("cv undefined for zero mean");
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(values.size())) / mean;
}

CVProfile CVProfile::from_per_dimension(std::map<Dimension, double> per_dimension) {
  if (per_dimension.size() != kAllDimensions.size()) {
    throw AnalysisError("profile needs all six dimensions");
  }
  CVProfile p;
  double sum = 0.0;
  for (auto d : kAllDimensions) sum += per_dimension.at(d);
  p.per_dimension_cv = std::move(per_dimension);
  p.mean_cv = sum / static_cast<double>(kAllDimensions.size());
  return p;
}

CVProfile human_cv_profile(const corpus::VideoRecord& record,
                           std::span<const DimensionScores> scores) {
  if (scores.size() != corpus::kCaptionsPerVideo) {
    throw AnalysisError(record.video_id + ": expected 5 score sets, got " +
                        std::to_string(scores.size()));
  }
  std::map<Dimension, double> per;
  for (auto d : kAllDimensions) {
    std::vector<double> column;
    for (const auto& s : scores) column.push_back(s.value(d));
    per[d] = cv(column);
  }
  return CVProfile::from_per_dimension(std::move(per));
}

namespace {
// Guards interval arithmetic against values like 0.3 * 10 = 2.9999999999999996.
constexpr double kBoundaryEps = 1e-9;
}  // namespace

Grouping assign_groups(const std::map<std::string, CVProfile>& profiles) {
  if (profiles.empty()) throw AnalysisError("no profiles to group");
  Grouping g;
  for (const auto& [id, p] : profiles) g.max_cv = std::max(g.max_cv, p.mean_cv);
  g.intervals =
      std::max(1, static_cast<int>(std::ceil(g.max_cv * 10.0 - kBoundaryEps)));
  if (g.intervals > 26) throw AnalysisError("more than 26 intervals");
  for (const auto& [id, p] : profiles) {
    int index = static_cast<int>(std::floor(p.mean_cv * 10.0 + kBoundaryEps));
    index = std::clamp(index, 0, g.intervals - 1);
    g.assignments[id] = {index, static_cast<char>('A' + index)};
    g.order.push_back(id);
  }
  std::stable_sort(g.order.begin(), g.order.end(), [&](const auto& a, const auto& b) {
    return profiles.at(a).mean_cv < profiles.at(b).mean_cv;
  });
  return g;
}

std::set<std::string> select_hard_subset(const Grouping& grouping) {
  if (grouping.intervals < 6) {
    throw AnalysisError("hard subset needs at least 6 intervals, have " +
                        std::to_string(grouping.intervals));
  }
  std::set<std::string> out;
  for (const auto& [id, a] : grouping.assignments) {
    if (a.label == 'F' || a.label == 'G' || a.label == 'H') out.insert(id);
  }
  return out;
}

void write_group_csv(std::ostream& out,
                     const std::map<std::string, CVProfile>& profiles,
                     const Grouping& grouping) {
  out << "video_id";
  for (auto d : kAllDimensions) out << ',' << to_string(d) << "_cv";
  out << ",mean_cv,group\n";
  char buf[32];
  for (const auto& id : grouping.order) {
    const auto& p = profiles.at(id);
    out << csv_field(id);
    for (auto d : kAllDimensions) {
      std::snprintf(buf, sizeof(buf), "%.4f", p.per_dimension_cv.at(d));
      out << ',' << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.4f", p.mean_cv);
    out << ',' << buf << ',' << grouping.assignments.at(id).label << '\n';
  }
}

}  // namespace fiova::annotation
