#include "fiova/batch.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace fiova::batch {
namespace {

double cv_of(const std::vector<double>& xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / xs.size()) / mean;
}

}  // namespace

MetricCVProfile lvlm_cv_profile(
    const std::map<std::string, std::map<std::string, double>>& per_model_scores,
    const std::vector<std::string>& metrics) {
  if (per_model_scores.size() < 2) throw BatchError("lvlm CV needs at least 2 models");
  if (metrics.empty()) throw BatchError("no metrics given");
  MetricCVProfile out;
  double total = 0.0;
  for (const auto& metric : metrics) {
    std::vector<double> xs;
    for (const auto& [model, scores] : per_model_scores) {
      const auto it = scores.find(metric);
      if (it == scores.end()) {
        throw BatchError("model " + model + " has no score for " + metric);
      }
      if (it->second < 0 || !std::isfinite(it->second)) {
        throw BatchError("metric values must be nonnegative");
      }
      xs.push_back(it->second);
    }
    if (std::accumulate(xs.begin(), xs.end(), 0.0) == 0.0) {
      out.skipped.push_back(metric);
      continue;
    }
    out.per_metric_cv[metric] = cv_of(xs);
    total += out.per_metric_cv[metric];
  }
  if (out.per_metric_cv.empty()) throw BatchError("every metric has zero mean");
  out.mean_cv = total / static_cast<double>(out.per_metric_cv.size());
  return out;
}

std::map<std::string, int> ordinal_ranks(const std::map<std::string, double>& values) {
  std::vector<std::pair<std::string, double>> items(values.begin(), values.end());
  // The map already iterates in video_id order, so a stable sort breaks ties by id.
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  std::map<std::string, int> ranks;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ranks[items[i].first] = static_cast<int>(i + 1);
  }
  return ranks;
}

CVRankings rank_and_diff(const std::map<std::string, double>& human_cv,
                         const std::map<std::string, double>& lvlm_cv) {
  if (human_cv.empty()) throw BatchError("no videos to rank");
  if (human_cv.size() != lvlm_cv.size() ||
      !std::equal(human_cv.begin(), human_cv.end(), lvlm_cv.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw BatchError("human and lvlm CV maps cover different videos");
  }
  CVRankings out{ordinal_ranks(human_cv), ordinal_ranks(lvlm_cv), {}};
  for (const auto& [id, r] : out.human_rank) out.diff[id] = std::abs(r - out.lvlm_rank[id]);
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw BatchError("spearman inputs differ in length");
  if (x.size() < 2) throw BatchError("spearman needs at least 2 items");
  for (double v : x) if (!std::isfinite(v)) throw BatchError("non-finite input");
  for (double v : y) if (!std::isfinite(v)) throw BatchError("non-finite input");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Mean of 1..n, shared by both rank vectors.
  const double mean = (static_cast<double>(x.size()) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw BatchError("spearman undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix metric_correlation_matrix(
    const std::vector<std::pair<std::string, std::vector<double>>>& per_item_scores,
    bool lenient) {
  if (per_item_scores.empty()) throw BatchError("no metrics");
  const std::size_t n = per_item_scores.front().second.size();
  for (const auto& [name, xs] : per_item_scores) {
    if (xs.size() != n) throw BatchError("ragged metric lists (" + name + ")");
  }
  if (n < 2) throw BatchError("correlation needs at least 2 items");
  CorrelationMatrix m;
  const std::size_t k = per_item_scores.size();
  m.rho.assign(k, std::vector<double>(k, 1.0));
  for (const auto& [name, xs] : per_item_scores) m.metrics.push_back(name);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double rho;
      try {
        rho = spearman(per_item_scores[i].second, per_item_scores[j].second);
        if (i == j) rho = 1.0;
      } catch (const BatchError&) {
        if (!lenient) throw;
        rho = nan;
      }
      m.rho[i][j] = m.rho[j][i] = rho;
    }
  }
  return m;
}

CorrelationMatrix average_matrices(const std::vector<CorrelationMatrix>& matrices) {
  if (matrices.empty()) throw BatchError("no matrices to average");
  CorrelationMatrix out;
  out.metrics = matrices.front().metrics;
  const std::size_t k = out.metrics.size();
  out.rho.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double sum = 0.0;
      int count = 0;
      for (const auto& m : matrices) {
        if (m.metrics != out.metrics) throw BatchError("matrices use different metrics");
        if (!std::isnan(m.rho[i][j])) {
          sum += m.rho[i][j];
          ++count;
        }
      }
      out.rho[i][j] = count ? sum / count : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

nlohmann::json to_json(const CorrelationMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : m.rho) {
    nlohmann::json r = nlohmann::json::array();
    for (double v : row) r.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    rows.push_back(r);
  }
  return {{"metrics", m.metrics}, {"rho", rows}};
}

void RankingMatrix::validate() const {
  if (columns.size() < 2) throw BatchError(video_id + ": need at least 2 caption sources");
  if (ranks.empty()) throw BatchError(video_id + ": no ranking rows");
  if (subjects.size() != ranks.size()) throw BatchError(video_id + ": subjects misaligned");
  for (std::size_t r = 0; r < ranks.size(); ++r) {
    const auto& row = ranks[r];
    std::set<int> seen(row.begin(), row.end());
    if (row.size() != columns.size() || seen.size() != row.size() ||
        *seen.begin() != 1 || *seen.rbegin() != static_cast<int>(columns.size())) {
      throw BatchError(video_id + ": ranking of subject " + subjects[r] +
                       " is not a permutation of 1.." + std::to_string(columns.size()));
    }
  }
}

std::vector<double> RankingMatrix::column_means() const {
  validate();
  std::vector<double> means(columns.size(), 0.0);
  for (const auto& row : ranks) {
    for (std::size_t c = 0; c < row.size(); ++c) means[c] += row[c];
  }
  for (auto& m : means) m /= static_cast<double>(ranks.size());
  return means;
}

std::vector<double> RankingMatrix::s_all() const {
  const auto means = column_means();
  return average_ranks(means);
}

double human_alignment(std::span<const double> human_ranks,
                       std::span<const double> metric_scores) {
  std::vector<double> negated(metric_scores.begin(), metric_scores.end());
  for (auto& v : negated) v = -v;
  return spearman(human_ranks, negated);
}

}  // namespace fiova::batch
