#include "pedloc/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pedloc/errors.hpp"

namespace pedloc {

void UncertaintyConfig::validate() const {
  if (num_passes < 1) throw ValidationError("need at least one forward pass");
  if (samples_per_pass < 1) throw ValidationError("need at least one sample per pass");
}

double combined_variance(std::span<const double> pass_mu, std::span<const double> pass_b,
                         int samples_per_pass, Rng& rng) {
  if (pass_mu.empty() || pass_mu.size() != pass_b.size()) {
    throw ValidationError("pass arrays must be non-empty and aligned");
  }
  if (samples_per_pass < 1) throw ValidationError("need at least one sample per pass");

  double sum = 0.0;
  double sumsq = 0.0;
  for (size_t t = 0; t < pass_mu.size(); ++t) {
    for (int i = 0; i < samples_per_pass; ++i) {
      const double x = (pass_b[t] > 0.0) ? rng.laplace(pass_mu[t], pass_b[t]) : pass_mu[t];
      sum += x;
      sumsq += x * x;
    }
  }
  const double count = static_cast<double>(pass_mu.size()) * samples_per_pass;
  const double mean = sum / count;
  return std::max(sumsq / count - mean * mean, 0.0);
}

DistanceEstimate mc_predict(const LocModel& model, const NormalizedInput& input,
                            const UncertaintyConfig& cfg) {
  cfg.validate();
  if (!model.trained) {
    throw ValidationError("mc_predict requires a trained model (batch-norm statistics unset)");
  }

  Rng dropout_rng(split_seed(cfg.seed, 1));
  Rng laplace_rng(split_seed(cfg.seed, 2));

  std::vector<double> mus(cfg.num_passes);
  std::vector<double> bs(cfg.num_passes);
  for (int t = 0; t < cfg.num_passes; ++t) {
    const PredictionHead head =
        forward_single(model, input.coords, ForwardMode::kMcDropout, &dropout_rng);
    mus[t] = head.mu;
    // exp(s) is the relative spread; scale by the predicted distance.
    bs[t] = head.relative_spread() * std::abs(head.mu);
  }

  DistanceEstimate est;
  est.mu = 0.0;
  est.b = 0.0;
  for (int t = 0; t < cfg.num_passes; ++t) {
    est.mu += mus[t];
    est.b += bs[t];
  }
  est.mu /= cfg.num_passes;
  est.b /= cfg.num_passes;
  est.sigma = std::sqrt(combined_variance(mus, bs, cfg.samples_per_pass, laplace_rng));
  est.interval = {est.mu - est.sigma, est.mu + est.sigma};
  est.aleatoric_interval = {est.mu - est.b, est.mu + est.b};
  if (!(est.mu > 0.0)) {
    throw Error("model predicted a non-positive distance; cannot lift to 3D");
  }
  est.point = localize(est.mu, input.center_ray);
  return est;
}

namespace {

void check_matched(size_t n_est, size_t n_gt) {
  if (n_est == 0) throw ValidationError("empty estimate set");
  if (n_est != n_gt) throw ValidationError("estimates and ground truths must be matched 1:1");
}

}  // namespace

CoverageReport coverage_report(std::span<const DistanceEstimate> estimates,
                               std::span<const double> gt_d, IntervalKind kind,
                               const HeightMixture& mix) {
  check_matched(estimates.size(), gt_d.size());
  const double slope = task_error_slope(mix);

  CoverageReport rep;
  rep.n = static_cast<int>(estimates.size());
  int inside = 0;
  double hw_sum = 0.0;
  double err_ratio_sum = 0.0;
  int err_ratio_n = 0;
  double hw_minus_e_sum = 0.0;
  for (size_t i = 0; i < estimates.size(); ++i) {
    const auto& e = estimates[i];
    const auto [lo, hi] =
        (kind == IntervalKind::kAleatoric) ? e.aleatoric_interval : e.interval;
    const double halfwidth = (kind == IntervalKind::kAleatoric) ? e.b : e.sigma;
    if (gt_d[i] >= lo && gt_d[i] <= hi) ++inside;
    hw_sum += halfwidth;
    if (halfwidth > 0.0) {
      err_ratio_sum += std::abs(gt_d[i] - e.mu) / halfwidth;
      ++err_ratio_n;
    }
    hw_minus_e_sum += std::abs(halfwidth - slope * gt_d[i]);
  }
  rep.recall_pct = 100.0 * inside / rep.n;
  rep.mean_interval_m = hw_sum / rep.n;
  rep.mean_abs_err_over_halfwidth =
      err_ratio_n > 0 ? err_ratio_sum / err_ratio_n : std::numeric_limits<double>::quiet_NaN();
  rep.mean_abs_halfwidth_minus_task_error_m = hw_minus_e_sum / rep.n;
  return rep;
}

HighRiskReport high_risk_analysis(std::span<const DistanceEstimate> estimates,
                                  std::span<const double> gt_d) {
  check_matched(estimates.size(), gt_d.size());
  HighRiskReport rep;
  rep.n = static_cast<int>(estimates.size());
  int covered = 0;
  for (size_t i = 0; i < estimates.size(); ++i) {
    if (gt_d[i] < estimates[i].mu) {
      ++rep.n_high_risk;
      const auto [lo, hi] = estimates[i].interval;
      if (gt_d[i] >= lo && gt_d[i] <= hi) ++covered;
    }
  }
  rep.high_risk_fraction_pct = 100.0 * rep.n_high_risk / rep.n;
  rep.covered_high_risk_pct = rep.n_high_risk > 0
                                  ? 100.0 * covered / rep.n_high_risk
                                  : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

std::vector<SpreadBin> spread_vs_task_error(std::span<const DistanceEstimate> estimates,
                                            std::span<const double> gt_d,
                                            const HeightMixture& mix, double bin_width_m) {
  check_matched(estimates.size(), gt_d.size());
  if (!(bin_width_m > 0.0)) throw ValidationError("bin width must be positive");

  const double d_max = *std::max_element(gt_d.begin(), gt_d.end());
  const int n_bins = static_cast<int>(std::floor(d_max / bin_width_m)) + 1;

  std::vector<SpreadBin> bins(n_bins);
  std::vector<double> d_sum(n_bins, 0.0);
  std::vector<double> b_sum(n_bins, 0.0);
  for (int k = 0; k < n_bins; ++k) {
    bins[k].d_lo = k * bin_width_m;
    bins[k].d_hi = (k + 1) * bin_width_m;
  }
  for (size_t i = 0; i < estimates.size(); ++i) {
    const int k = std::min(static_cast<int>(gt_d[i] / bin_width_m), n_bins - 1);
    bins[k].n += 1;
    d_sum[k] += gt_d[i];
    b_sum[k] += estimates[i].b;
  }
  for (int k = 0; k < n_bins; ++k) {
    if (bins[k].n == 0) continue;  // left flagged empty
    bins[k].empty = false;
    bins[k].mean_b_m = b_sum[k] / bins[k].n;
    bins[k].e_hat_m = expected_task_error(mix, d_sum[k] / bins[k].n);
    bins[k].b_minus_e_m = bins[k].mean_b_m - bins[k].e_hat_m;
  }
  return bins;
}

}  // namespace pedloc
