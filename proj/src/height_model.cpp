#include "pedloc/height_model.hpp"

#include <algorithm>
#include <cmath>

#include "pedloc/errors.hpp"

namespace pedloc {

namespace {

constexpr int kGaussLegendreNodes = 512;
constexpr double kTruncationSigmas = 8.0;

struct Quadrature {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Gauss-Legendre nodes/weights by Newton iteration on the Legendre
// recurrence. Nodes are symmetric; computed once and cached.
const Quadrature& gauss_legendre() {
  static const Quadrature table = [] {
    const int n = kGaussLegendreNodes;
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
      // Chebyshev-based initial guess.
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      q.nodes[i] = -x;
      q.nodes[n - 1 - i] = x;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      q.weights[i] = w;
      q.weights[n - 1 - i] = w;
    }
    return q;
  }();
  return table;
}

// Integrates f over [a, b] with the fixed-order rule.
template <typename F>
double integrate(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  const Quadrature& q = gauss_legendre();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < kGaussLegendreNodes; ++i) {
    acc += q.weights[i] * f(mid + half * q.nodes[i]);
  }
  return acc * half;
}

double gaussian_pdf(double x, double mean, double std) {
  const double z = (x - mean) / std;
  return std::exp(-0.5 * z * z) / (std * 2.5066282746310005024157652848110);
}

}  // namespace

void HeightMixture::validate() const {
  if (components.empty()) {
    throw ValidationError("height mixture needs at least one component");
  }
  double wsum = 0.0;
  for (const auto& c : components) {
    if (!(c.std_cm > 0.0)) throw ValidationError("height mixture stds must be positive");
    if (!(c.mean_cm > 0.0)) throw ValidationError("height mixture means must be positive");
    if (c.weight < 0.0) throw ValidationError("height mixture weights must be non-negative");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12) {
    throw ValidationError("height mixture weights must sum to 1");
  }
  if (!(h_mean_cm > 0.0)) {
    throw ValidationError("reference height h_mean must be positive");
  }
}

double HeightMixture::mean_cm() const {
  double m = 0.0;
  for (const auto& c : components) m += c.weight * c.mean_cm;
  return m;
}

HeightMixture HeightMixture::default_adult() {
  HeightMixture mix;
  mix.components = {{0.5, 178.0, 7.0, "male"}, {0.5, 165.0, 7.0, "female"}};
  mix.h_mean_cm = mix.mean_cm();  // 171.5
  return mix;
}

double task_error_instance(double d_gt_m, double h_gt_cm, double h_mean_cm) {
  if (!(h_gt_cm > 0.0) || !(h_mean_cm > 0.0)) {
    throw ValidationError("invalid height: heights must be positive");
  }
  if (d_gt_m < 0.0) {
    throw ValidationError("ground-truth distance must be non-negative");
  }
  return d_gt_m * std::abs(1.0 - h_mean_cm / h_gt_cm);
}

double task_error_slope(const HeightMixture& mix) {
  mix.validate();
  const double hm = mix.h_mean_cm;
  double slope = 0.0;
  for (const auto& c : mix.components) {
    const double lo = std::max(c.mean_cm - kTruncationSigmas * c.std_cm, 1e-6);
    const double hi = c.mean_cm + kTruncationSigmas * c.std_cm;
    auto f = [&](double h) { return std::abs(1.0 - hm / h) * gaussian_pdf(h, c.mean_cm, c.std_cm); };
    // Split at the |.| kink so each piece is smooth.
    double part = 0.0;
    if (hm > lo && hm < hi) {
      part = integrate(f, lo, hm) + integrate(f, hm, hi);
    } else {
      part = integrate(f, lo, hi);
    }
    slope += c.weight * part;
  }
  return slope;
}

double expected_task_error(const HeightMixture& mix, double d_gt_m) {
  if (d_gt_m < 0.0) {
    throw ValidationError("ground-truth distance must be non-negative");
  }
  return d_gt_m * task_error_slope(mix);
}

HeightMixture teen_extended_mixture(const HeightMixture& base) {
  base.validate();
  HeightMixture out = base;
  for (auto& c : out.components) {
    const double rel = (c.label == "female") ? 0.056 : 0.079;
    c.std_cm = std::sqrt(c.std_cm * c.std_cm + (c.mean_cm * rel) * (c.mean_cm * rel));
  }
  return out;
}

TaskErrorCurve task_error_curve(const HeightMixture& mix, double d_max_m, int n_points) {
  if (!(d_max_m > 0.0)) throw ValidationError("d_max must be positive");
  if (n_points < 2) throw ValidationError("curve needs at least 2 points");
  const double slope = task_error_slope(mix);
  TaskErrorCurve curve;
  curve.distances_m.resize(n_points);
  curve.e_hat_m.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double d = d_max_m * static_cast<double>(i) / (n_points - 1);
    curve.distances_m[i] = d;
    curve.e_hat_m[i] = slope * d;
  }
  return curve;
}

}  // namespace pedloc
