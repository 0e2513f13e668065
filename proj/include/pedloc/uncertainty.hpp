#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pedloc/geometry.hpp"
#include "pedloc/height_model.hpp"
#include "pedloc/net.hpp"
#include "pedloc/rng.hpp"

namespace pedloc {

struct UncertaintyConfig {
  int num_passes = 50;        // T stochastic forward passes
  int samples_per_pass = 100; // I Laplace draws per pass
  uint64_t seed = 0;

  void validate() const;
};

// Full probabilistic output for one instance. mu and b are the means of the
// per-pass predictions; sigma is the combined aleatoric+epistemic standard
// deviation from the sample variance of the T*I Laplace draws.
struct DistanceEstimate {
  double mu = 0.0;     // m
  double b = 0.0;      // m, mean per-pass meter spread
  double sigma = 0.0;  // m
  std::pair<double, double> interval{0.0, 0.0};            // mu +- sigma
  std::pair<double, double> aleatoric_interval{0.0, 0.0};  // mu +- b
  Point3D point{};
};

// Population variance of T*I values drawn as x ~ Laplace(mu_t, b_t),
// I draws per pass. Exposed separately so the estimator can be checked
// against closed-form variances without a model in the loop.
double combined_variance(std::span<const double> pass_mu, std::span<const double> pass_b,
                         int samples_per_pass, Rng& rng);

// T stochastic (MC-dropout) forward passes, I Laplace samples each. Dropout
// masks and Laplace draws come from independent, seed-derived streams. The
// predicted relative spread exp(s) is scaled by the predicted distance to a
// meter-valued spread before sampling.
DistanceEstimate mc_predict(const LocModel& model, const NormalizedInput& input,
                            const UncertaintyConfig& cfg);

enum class IntervalKind { kAleatoric, kCombined };

struct CoverageReport {
  double recall_pct = 0.0;          // % of ground truths inside the interval
  double mean_interval_m = 0.0;     // mean half-width
  double mean_abs_err_over_halfwidth = 0.0;        // mean |x - mu| / half-width
  double mean_abs_halfwidth_minus_task_error_m = 0.0;  // mean |half-width - e_hat(d)|
  int n = 0;
};

CoverageReport coverage_report(std::span<const DistanceEstimate> estimates,
                               std::span<const double> gt_d, IntervalKind kind,
                               const HeightMixture& mix = HeightMixture::default_adult());

// High-risk cases: ground truth closer than predicted (collision-relevant
// underestimates of proximity); reports how many of those the combined
// interval still covers.
struct HighRiskReport {
  double high_risk_fraction_pct = 0.0;
  double covered_high_risk_pct = 0.0;  // NaN when there are no high-risk cases
  int n_high_risk = 0;
  int n = 0;
};

HighRiskReport high_risk_analysis(std::span<const DistanceEstimate> estimates,
                                  std::span<const double> gt_d);

// Distance-binned comparison of the predicted spread b against the task
// error: the b - e_hat column isolates the uncertainty attributable to
// noisy observations rather than height ambiguity.
struct SpreadBin {
  double d_lo = 0.0;
  double d_hi = 0.0;
  int n = 0;
  double mean_b_m = 0.0;
  double e_hat_m = 0.0;      // expected task error at the bin's mean distance
  double b_minus_e_m = 0.0;
  bool empty = true;
};

std::vector<SpreadBin> spread_vs_task_error(std::span<const DistanceEstimate> estimates,
                                            std::span<const double> gt_d,
                                            const HeightMixture& mix, double bin_width_m = 5.0);

}  // namespace pedloc
