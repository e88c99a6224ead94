#include <cmath>
#include <random>

#include "cyberteach/explain.hpp"
#include "doctest.h"

using namespace cyberteach;

namespace {

std::vector<std::vector<double>> bernoulli_background(int count, int dim, uint64_t seed,
                                                      double p = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> background(count, std::vector<double>(dim, 0.0));
  for (auto& row : background) {
    for (double& v : row) v = unit(rng) < p ? 1.0 : 0.0;
  }
  return background;
}

}  // namespace

TEST_CASE("a constant policy yields all-zero weights") {
  int dim = 12;
  auto target = [](const std::vector<double>&) { return 0.37; };
  LimeConfig cfg;
  cfg.n_perturb = 500;
  AttributionReport report = fit_local_explainer(
      target, std::vector<double>(dim, 1.0), bernoulli_background(100, dim, 4), cfg, 9);
  for (const auto& f : report.features) CHECK(std::abs(f.weight) < 1e-9);
  CHECK(report.intercept == doctest::Approx(0.37).epsilon(1e-9));
}

TEST_CASE("a single-feature policy puts that feature at rank 1") {
  int dim = 10;
  int important = 6;
  auto target = [&](const std::vector<double>& z) { return 0.1 + 0.8 * z[important]; };
  LimeConfig cfg;
  cfg.n_perturb = 1000;
  std::vector<double> base(dim, 0.0);
  base[important] = 1.0;
  AttributionReport report =
      fit_local_explainer(target, base, bernoulli_background(200, dim, 5), cfg, 10);
  CHECK(report.features[important].rank == 1);
  CHECK(report.features[important].weight == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(report.features[important].towards);
}

TEST_CASE("ranks and directions follow the weights") {
  // Exactly linear target with known coefficients.
  std::vector<double> coef{0.5, -0.2, 0.1};
  auto target = [&](const std::vector<double>& z) {
    double y = 0.05;
    for (size_t j = 0; j < coef.size(); ++j) y += coef[j] * z[j];
    return y;
  };
  LimeConfig cfg;
  cfg.n_perturb = 800;
  AttributionReport report = fit_local_explainer(target, {1.0, 0.0, 1.0},
                                                 bernoulli_background(100, 3, 6), cfg, 11);
  CHECK(report.features[0].rank == 1);
  CHECK(report.features[1].rank == 2);
  CHECK(report.features[2].rank == 3);
  CHECK(report.features[0].towards);
  CHECK_FALSE(report.features[1].towards);  // negative weight reads "Away"
  CHECK(report.features[2].towards);
  CHECK(report.by_rank(1).feature == 0);

  std::string csv = report_csv(report, 200);
  CHECK(csv.find("200,1,") != std::string::npos);
  CHECK(csv.find("Away") != std::string::npos);
}

TEST_CASE("linear policies are recovered within 5 percent") {
  int dim = 20;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 0.3);
  std::vector<double> coef(dim);
  for (double& c : coef) c = gauss(rng);
  double intercept = 0.4;
  auto target = [&](const std::vector<double>& z) {
    double y = intercept;
    for (int j = 0; j < dim; ++j) y += coef[j] * z[j];
    return y;
  };

  LimeConfig cfg;
  cfg.n_perturb = 2000;
  std::vector<double> base(dim, 0.0);
  for (int j = 0; j < dim; j += 2) base[j] = 1.0;

  AttributionReport report =
      fit_local_explainer(target, base, bernoulli_background(500, dim, 7), cfg, 12);
  for (int j = 0; j < dim; ++j) {
    double tolerance = 0.05 * std::max(std::abs(coef[j]), 1e-6);
    CHECK(std::abs(report.features[j].weight - coef[j]) <= tolerance);
  }
}

TEST_CASE("explanations are deterministic in the seed") {
  int dim = 8;
  auto target = [](const std::vector<double>& z) {
    double y = 0.2;
    for (size_t j = 0; j < z.size(); ++j) y += 0.05 * (j % 2 ? 1 : -1) * z[j];
    return y;
  };
  auto background = bernoulli_background(100, dim, 8);
  LimeConfig cfg;
  cfg.n_perturb = 400;
  std::vector<double> base(dim, 1.0);

  AttributionReport a = fit_local_explainer(target, base, background, cfg, 21);
  AttributionReport b = fit_local_explainer(target, base, background, cfg, 21);
  for (int j = 0; j < dim; ++j) {
    CHECK(a.features[j].weight == b.features[j].weight);
    CHECK(a.features[j].rank == b.features[j].rank);
  }
}

TEST_CASE("degenerate feature columns trigger the ridge fallback") {
  int dim = 6;
  // Background never activates feature 3 and the base state has it at 0, so
  // its design column is constant and the normal equations go singular.
  auto background = bernoulli_background(80, dim, 9);
  for (auto& row : background) row[3] = 0.0;
  auto target = [](const std::vector<double>& z) { return 0.1 + 0.3 * z[0]; };
  LimeConfig cfg;
  cfg.n_perturb = 300;
  std::vector<double> base(dim, 0.0);

  AttributionReport report = fit_local_explainer(target, base, background, cfg, 13);
  CHECK(report.used_ridge_fallback);
  CHECK(std::abs(report.features[3].weight) < 1e-6);
  CHECK(report.features[0].weight == doctest::Approx(0.3).epsilon(1e-3));
}

TEST_CASE("teacher columns annotate rank and top-4 membership") {
  AttributionReport report;
  report.features.resize(4);
  for (int j = 0; j < 4; ++j) report.features[j].feature = j;

  std::vector<double> policy{0.05, 0.4, 0.3, 0.15, 0.1};
  annotate_teacher_columns(report, policy, 2, 3);
  CHECK(report.teacher_feature_index == 3);
  CHECK(report.teacher_action_rank == 2);
  CHECK(report.reco_in_top4);

  annotate_teacher_columns(report, policy, 0, 3);
  CHECK(report.teacher_action_rank == 5);
  CHECK_FALSE(report.reco_in_top4);
}
