#pragma once

#include <utility>
#include <vector>

#include "sced/types.hpp"

namespace sced {

// biweight kernel (15/16)(1 - u^2)^2 on [-1, 1]
double kernel_biweight(double u);

// reflection-corrected kernel on [0, inf)
double kernel_boundary(double y_i, double y, double h);

// Psi of the Mahalanobis quadratic form of x about mu_c
double transform_y(const Vector& x, const Vector& mu_c, const Matrix& scatter,
                   const TransformSpec& transform);
double transform_y(const Vector& x, const Vector& mu_c, const Eigen::LLT<Matrix>& scatter_llt,
                   const TransformSpec& transform);

/// One-dimensional boundary-corrected kernel estimate of the density generator.
class GeneratorEstimate {
 public:
  GeneratorEstimate(Vector y_sample, double h, TransformSpec transform);

  double operator()(double y) const;           // ghat(y)
  double loo(double y, double y_excluded) const;  // leave-one-out via subtraction
  double h() const { return h_; }
  const Vector& sample() const { return y_sorted_; }
  const TransformSpec& transform() const { return transform_; }

 private:
  Vector y_sorted_;
  double h_;
  TransformSpec transform_;
};

// w(y) * ghat(y) at y = transform_y(x, mu_c, scatter)
double plugin_density(const Vector& x, int c, const EllipticalParams& params,
                      const GeneratorEstimate& estimate);
// variant with the transformed value already computed
double plugin_density_at(double y, const EllipticalParams& params,
                         const GeneratorEstimate& estimate);
// the weight w(y) alone
double plugin_weight(double y, int p, double det_scatter, const TransformSpec& transform);

struct BandwidthSelection {
  double h_tilde = 0.0;  // CV minimizer
  double h_hat = 0.0;    // n^{3/80} inflation of h_tilde
  std::vector<std::pair<double, double>> cv_curve;
};

// least-squares cross-validation over a log-spaced bandwidth grid
BandwidthSelection cv_bandwidth(const Vector& y_sample, int grid_size);

}  // namespace sced
