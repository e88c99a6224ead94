#include "cyberteach/explain.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cyberteach {

namespace {

/// Gaussian elimination with partial pivoting; false when near-singular.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& x) {
  size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = col + 1; r < n; ++r) {
      double factor = a[r][col] / a[col][col];
      if (factor == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  x.assign(n, 0.0);
  for (size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return true;
}

}  // namespace

const FeatureAttribution& AttributionReport::by_rank(int rank) const {
  for (const auto& f : features) {
    if (f.rank == rank) return f;
  }
  throw std::out_of_range("no feature with rank " + std::to_string(rank));
}

AttributionReport fit_local_explainer(
    const std::function<double(const std::vector<double>&)>& target_fn,
    const std::vector<double>& base_state,
    const std::vector<std::vector<double>>& background, const LimeConfig& cfg,
    uint64_t seed) {
  if (background.empty()) throw std::invalid_argument("background sample is empty");
  size_t dim = base_state.size();
  for (const auto& obs : background) {
    if (obs.size() != dim) throw std::invalid_argument("background dimension mismatch");
  }

  // Background marginal frequency of each binary feature.
  std::vector<double> freq(dim, 0.0);
  for (const auto& obs : background) {
    for (size_t j = 0; j < dim; ++j) freq[j] += obs[j] != 0.0 ? 1.0 : 0.0;
  }
  for (double& f : freq) f /= static_cast<double>(background.size());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double width = cfg.kernel_width_factor * std::sqrt(static_cast<double>(dim));
  double width_sq = width * width;

  // Accumulate the weighted normal equations X' W X and X' W y directly,
  // with X = [1, z].
  size_t n_cols = dim + 1;
  std::vector<std::vector<double>> xtx(n_cols, std::vector<double>(n_cols, 0.0));
  std::vector<double> xty(n_cols, 0.0);

  std::vector<double> z(dim);
  std::vector<double> row(n_cols);
  for (int s = 0; s < cfg.n_perturb; ++s) {
    int flips = 0;
    for (size_t j = 0; j < dim; ++j) {
      double value = base_state[j];
      if (unit(rng) < cfg.resample_prob) {
        value = unit(rng) < freq[j] ? 1.0 : 0.0;
      }
      if (value != base_state[j]) flips += 1;
      z[j] = value;
    }
    double y = target_fn(z);
    double w = std::exp(-static_cast<double>(flips) / width_sq);

    row[0] = 1.0;
    for (size_t j = 0; j < dim; ++j) row[j + 1] = z[j];
    for (size_t r = 0; r < n_cols; ++r) {
      if (row[r] == 0.0) continue;
      double wr = w * row[r];
      for (size_t c = r; c < n_cols; ++c) xtx[r][c] += wr * row[c];
      xty[r] += wr * y;
    }
  }
  for (size_t r = 0; r < n_cols; ++r) {
    for (size_t c = 0; c < r; ++c) xtx[r][c] = xtx[c][r];
  }

  AttributionReport report;
  std::vector<double> beta;
  if (!solve_linear(xtx, xty, beta)) {
    for (size_t d = 0; d < n_cols; ++d) xtx[d][d] += cfg.ridge_lambda;
    if (!solve_linear(xtx, xty, beta)) {
      throw std::runtime_error("normal equations singular even with ridge fallback");
    }
    report.used_ridge_fallback = true;
  }

  report.intercept = beta[0];
  report.features.resize(dim);
  std::vector<int> order(dim);
  for (size_t j = 0; j < dim; ++j) {
    report.features[j].feature = static_cast<int>(j);
    report.features[j].weight = beta[j + 1];
    report.features[j].towards = beta[j + 1] > 0.0;
    order[j] = static_cast<int>(j);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(report.features[a].weight) > std::abs(report.features[b].weight);
  });
  for (size_t r = 0; r < dim; ++r) report.features[order[r]].rank = static_cast<int>(r) + 1;
  return report;
}

void annotate_teacher_columns(AttributionReport& report,
                              const std::vector<double>& base_policy, int teacher_action,
                              int teacher_feature_index) {
  report.teacher_feature_index = teacher_feature_index;
  if (teacher_action < 0 || teacher_action >= static_cast<int>(base_policy.size())) {
    report.teacher_action_rank = 0;
    report.reco_in_top4 = false;
    return;
  }
  int rank = 1;
  for (size_t i = 0; i < base_policy.size(); ++i) {
    if (base_policy[i] > base_policy[teacher_action] ||
        (base_policy[i] == base_policy[teacher_action] &&
         static_cast<int>(i) < teacher_action)) {
      rank += 1;
    }
  }
  report.teacher_action_rank = rank;
  report.reco_in_top4 = rank <= 4;
}

std::string report_csv(const AttributionReport& report, long episode_label) {
  std::ostringstream out;
  out << "episode,feature,weight,ranking,direction,reco_in_top4\n";
  for (const auto& f : report.features) {
    out << episode_label << ',' << f.feature << ',' << f.weight << ',' << f.rank << ','
        << (f.towards ? "Towards" : "Away") << ',';
    if (f.feature == report.teacher_feature_index) {
      out << (report.reco_in_top4 ? "Yes/" + std::to_string(report.teacher_action_rank)
                                  : "No");
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cyberteach
