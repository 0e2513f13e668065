#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pedloc/errors.hpp"
#include "pedloc/rng.hpp"
#include "pedloc/uncertainty.hpp"

using namespace pedloc;

namespace {

std::vector<DistanceEstimate> fixed_estimates(int n, double mu, double b, double sigma) {
  std::vector<DistanceEstimate> out(n);
  for (auto& e : out) {
    e.mu = mu;
    e.b = b;
    e.sigma = sigma;
    e.interval = {mu - sigma, mu + sigma};
    e.aleatoric_interval = {mu - b, mu + b};
  }
  return out;
}

}  // namespace

TEST_CASE("variance of a near-degenerate single pass is near zero") {
  Rng rng(1);
  const std::vector<double> mu{15.0};
  const std::vector<double> b{0.0};
  CHECK(combined_variance(mu, b, 1000, rng) == 0.0);
}

TEST_CASE("two deterministic passes give the population variance") {
  Rng rng(2);
  const std::vector<double> mu{9.0, 11.0};
  const std::vector<double> b{0.0, 0.0};
  const double var = combined_variance(mu, b, 5000, rng);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-pass variance converges to the Laplace variance 2 b^2") {
  const double b = 1.7;
  double acc = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(100 + s);
    const std::vector<double> mu{20.0};
    const std::vector<double> bb{b};
    acc += combined_variance(mu, bb, 100000, rng);
  }
  CHECK(acc / seeds == doctest::Approx(2.0 * b * b).epsilon(0.05));
}

TEST_CASE("variance is monotone in the spread at fixed pass means") {
  const std::vector<double> mu{10.0, 12.0, 11.0};
  Rng r1(7), r2(7);
  const double small = combined_variance(mu, std::vector<double>{0.3, 0.3, 0.3}, 20000, r1);
  const double large = combined_variance(mu, std::vector<double>{1.2, 1.2, 1.2}, 20000, r2);
  CHECK(large > small);
}

TEST_CASE("partitioning T*I samples differently leaves the variance unchanged in distribution") {
  // deterministic per-pass parameters (p_drop = 0 analogue): all passes equal
  const double mu = 18.0, b = 1.1;
  double v1 = 0.0, v2 = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    Rng ra(300 + s), rb(900 + s);
    const std::vector<double> one(1, mu), oneb(1, b);
    const std::vector<double> four(4, mu), fourb(4, b);
    v1 += combined_variance(one, oneb, 40000, ra);
    v2 += combined_variance(four, fourb, 10000, rb);
  }
  CHECK(v1 / seeds == doctest::Approx(v2 / seeds).epsilon(0.05));
}

TEST_CASE("mc_predict rejects untrained models and bad configs") {
  LocModel m = LocModel::init({34, 16, 1, 0.2}, 5);
  NormalizedInput input;
  UncertaintyConfig cfg;
  CHECK_THROWS_AS(mc_predict(m, input, cfg), ValidationError);

  m.trained = true;
  UncertaintyConfig bad;
  bad.num_passes = 0;
  CHECK_THROWS_AS(mc_predict(m, input, bad), ValidationError);
}

TEST_CASE("mc_predict is deterministic in the seed and fills every field") {
  LocModel m = LocModel::init({34, 16, 1, 0.2}, 5);
  m.trained = true;
  // make the head produce a positive distance
  m.head.b(0) = 12.0;
  m.head.b(1) = std::log(0.05);
  NormalizedInput input;
  for (int i = 0; i < 34; ++i) input.coords[i] = 0.01 * (i - 17);
  input.center_ray = Eigen::Vector3d(0.1, -0.05, 1.0).normalized();

  UncertaintyConfig cfg;
  cfg.num_passes = 10;
  cfg.samples_per_pass = 50;
  cfg.seed = 99;
  const DistanceEstimate a = mc_predict(m, input, cfg);
  const DistanceEstimate b = mc_predict(m, input, cfg);
  CHECK(a.mu == b.mu);
  CHECK(a.sigma == b.sigma);
  CHECK(a.b == b.b);
  CHECK(a.mu > 0.0);
  CHECK(a.sigma >= 0.0);
  CHECK(a.interval.first <= a.mu);
  CHECK(a.interval.second >= a.mu);
  CHECK(a.aleatoric_interval.first <= a.aleatoric_interval.second);
  CHECK(a.point.norm() == doctest::Approx(a.mu).epsilon(1e-9));
}

TEST_CASE("p_drop = 0 with one pass leaves only the aleatoric spread") {
  LocModel m = LocModel::init({34, 16, 1, 0.0}, 5);
  m.trained = true;
  m.head.b(0) = 15.0;
  m.head.b(1) = std::log(0.1);
  NormalizedInput input;
  input.center_ray = Eigen::Vector3d(0.0, 0.0, 1.0);
  UncertaintyConfig cfg;
  cfg.num_passes = 1;
  cfg.samples_per_pass = 100000;
  cfg.seed = 4;
  const DistanceEstimate e = mc_predict(m, input, cfg);
  // sigma^2 -> 2 b^2 when the only randomness is the Laplace draw
  CHECK(e.sigma == doctest::Approx(std::sqrt(2.0) * e.b).epsilon(0.05));
}

TEST_CASE("coverage: ground truth exactly at mu is always recalled") {
  const auto est = fixed_estimates(100, 20.0, 1.0, 1.5);
  const std::vector<double> gt(100, 20.0);
  const CoverageReport rep = coverage_report(est, gt, IntervalKind::kAleatoric);
  CHECK(rep.recall_pct == 100.0);
  CHECK(rep.mean_interval_m == doctest::Approx(1.0));
  CHECK(rep.mean_abs_err_over_halfwidth == doctest::Approx(0.0));
}

TEST_CASE("coverage of Laplace residuals under +-b intervals is 1 - 1/e") {
  const int n = 100000;
  const double mu = 20.0, b = 1.3;
  const auto est = fixed_estimates(n, mu, b, 2.0);
  std::vector<double> gt(n);
  Rng rng(17);
  for (auto& x : gt) x = rng.laplace(mu, b);
  const CoverageReport rep = coverage_report(est, gt, IntervalKind::kAleatoric);
  CHECK(rep.recall_pct == doctest::Approx(100.0 * (1.0 - std::exp(-1.0))).epsilon(0.016));
}

TEST_CASE("task-error column of the coverage report uses the shared slope") {
  const auto est = fixed_estimates(3, 10.0, 0.5, 0.5);
  const std::vector<double> gt{10.0, 10.0, 10.0};
  const HeightMixture mix = HeightMixture::default_adult();
  const CoverageReport rep = coverage_report(est, gt, IntervalKind::kAleatoric, mix);
  const double e_hat = expected_task_error(mix, 10.0);
  CHECK(rep.mean_abs_halfwidth_minus_task_error_m ==
        doctest::Approx(std::abs(0.5 - e_hat)).epsilon(1e-12));
}

TEST_CASE("high-risk analysis examples") {
  // all mu below gt: no high-risk cases
  auto est = fixed_estimates(50, 10.0, 1.0, 1.0);
  std::vector<double> gt(50, 12.0);
  HighRiskReport rep = high_risk_analysis(est, gt);
  CHECK(rep.high_risk_fraction_pct == 0.0);
  CHECK(rep.n_high_risk == 0);

  // mu = gt + 1 with sigma = 2: all high-risk, all covered
  est = fixed_estimates(50, 13.0, 1.0, 2.0);
  gt.assign(50, 12.0);
  rep = high_risk_analysis(est, gt);
  CHECK(rep.high_risk_fraction_pct == 100.0);
  CHECK(rep.covered_high_risk_pct == 100.0);
}

TEST_CASE("unbiased residuals give roughly half high-risk cases") {
  const int n = 10000;
  auto est = fixed_estimates(n, 20.0, 1.0, 2.0);
  std::vector<double> gt(n);
  Rng rng(23);
  for (auto& x : gt) x = 20.0 + rng.normal();  // symmetric residuals
  const HighRiskReport rep = high_risk_analysis(est, gt);
  CHECK(std::abs(rep.high_risk_fraction_pct - 50.0) < 3.0);
}

TEST_CASE("spread table bins match the task-error module exactly") {
  std::vector<DistanceEstimate> est;
  std::vector<double> gt;
  for (int i = 0; i < 40; ++i) {
    DistanceEstimate e;
    e.mu = 5.0 + i;
    e.b = 0.05 * e.mu;
    gt.push_back(e.mu);
    est.push_back(e);
  }
  const HeightMixture mix = HeightMixture::default_adult();
  const auto bins = spread_vs_task_error(est, gt, mix, 5.0);
  for (const auto& bin : bins) {
    if (bin.empty) continue;
    double d_sum = 0.0;
    int n = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] >= bin.d_lo && gt[i] < bin.d_hi) {
        d_sum += gt[i];
        ++n;
      }
    }
    REQUIRE(n == bin.n);
    CHECK(bin.e_hat_m == doctest::Approx(expected_task_error(mix, d_sum / n)).epsilon(1e-12));
    CHECK(bin.b_minus_e_m == doctest::Approx(bin.mean_b_m - bin.e_hat_m).epsilon(1e-12));
  }
}

TEST_CASE("empty inputs are rejected") {
  CHECK_THROWS_AS(coverage_report({}, {}, IntervalKind::kAleatoric), ValidationError);
  CHECK_THROWS_AS(high_risk_analysis({}, {}), ValidationError);
}
