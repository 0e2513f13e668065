#pragma once

#include <string>
#include <vector>

namespace pedloc {

// One Gaussian component of the stature distribution. Heights in cm.
struct HeightComponent {
  double weight = 0.0;
  double mean_cm = 0.0;
  double std_cm = 0.0;
  std::string label;  // "male" / "female" for the default population
};

// Two-component (or more) Gaussian mixture over adult stature, plus the
// reference height assumed when estimating distances.
struct HeightMixture {
  std::vector<HeightComponent> components;
  double h_mean_cm = 0.0;

  void validate() const;
  double mean_cm() const;

  // European adult population: male (178, 7), female (165, 7), equal weights.
  // Reference height defaults to the mixture mean, 171.5 cm.
  static HeightMixture default_adult();
};

// Grid evaluation of the expected task error. Linear in distance by
// construction: e_hat[i] = slope * distances[i].
struct TaskErrorCurve {
  std::vector<double> distances_m;
  std::vector<double> e_hat_m;
};

// Localization error committed on one instance when assuming height h_mean:
// e = d_gt * |1 - h_mean / h_gt|.
double task_error_instance(double d_gt_m, double h_gt_cm, double h_mean_cm);

// E_{h ~ P(H)} [ |1 - h_mean/h| ]; the distance-free slope of the expected
// task error. Computed by per-component Gauss-Legendre quadrature on
// +-8 sigma, split at the integrand kink h = h_mean.
double task_error_slope(const HeightMixture& mix);

// Expected task error e_hat(d) = d * task_error_slope(mix).
double expected_task_error(const HeightMixture& mix, double d_gt_m);

// Widens each gendered component to cover ages 14+: relative variation of
// 7.9% (male) and 5.6% (female) added in quadrature to the adult std.
HeightMixture teen_extended_mixture(const HeightMixture& base);

TaskErrorCurve task_error_curve(const HeightMixture& mix, double d_max_m, int n_points);

}  // namespace pedloc
