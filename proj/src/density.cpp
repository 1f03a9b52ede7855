#include "sced/density.hpp"

#include <algorithm>
#include <cmath>

namespace sced {

double kernel_biweight(double u) {
  if (u < -1.0 || u > 1.0) return 0.0;
  const double t = 1.0 - u * u;
  return 0.9375 * t * t;  // 15/16
}

double kernel_boundary(double y_i, double y, double h) {
  return (kernel_biweight((y - y_i) / h) + kernel_biweight((-y_i - y) / h)) / h;
}

double transform_y(const Vector& x, const Vector& mu_c, const Eigen::LLT<Matrix>& scatter_llt,
                   const TransformSpec& transform) {
  const Vector r = x - mu_c;
  const double q = r.dot(scatter_llt.solve(r));
  return transform.forward(std::max(q, 0.0));
}

double transform_y(const Vector& x, const Vector& mu_c, const Matrix& scatter,
                   const TransformSpec& transform) {
  Eigen::LLT<Matrix> llt(scatter);
  if (llt.info() != Eigen::Success) throw NotSpd();
  return transform_y(x, mu_c, llt, transform);
}

GeneratorEstimate::GeneratorEstimate(Vector y_sample, double h, TransformSpec transform)
    : y_sorted_(std::move(y_sample)), h_(h), transform_(transform) {
  if (h_ <= 0.0) throw ScedError("bandwidth must be positive");
  if (y_sorted_.size() < 1) throw TooFewPoints();
  if (y_sorted_.minCoeff() < 0.0) throw ScedError("transformed sample must be nonnegative");
  std::sort(y_sorted_.data(), y_sorted_.data() + y_sorted_.size());
}

namespace {

// accumulate s1 = sum_i K_h(y_i, y) and s2 = sum_i K_h(y_i, y)^2 over a sorted sample
inline void window_sums(const Vector& ys, double y, double h, double& s1, double& s2) {
  const double* b = ys.data();
  const double* e = b + ys.size();
  s1 = 0.0;
  s2 = 0.0;
  const double* lo = std::lower_bound(b, e, y - h);   // direct window start
  const double* hi = std::upper_bound(lo, e, y + h);  // direct window end
  const double* rhi = std::upper_bound(b, e, h - y);  // reflected window end
  for (const double* it = b; it < rhi; ++it) {
    double v = kernel_biweight((-*it - y) / h);
    if (it >= lo && it < hi) v += kernel_biweight((y - *it) / h);
    v /= h;
    s1 += v;
    s2 += v * v;
  }
  for (const double* it = std::max(lo, rhi); it < hi; ++it) {
    const double v = kernel_biweight((y - *it) / h) / h;
    s1 += v;
    s2 += v * v;
  }
}

}  // namespace

double GeneratorEstimate::operator()(double y) const {
  double s1, s2;
  window_sums(y_sorted_, y, h_, s1, s2);
  return s1 / double(y_sorted_.size());
}

double GeneratorEstimate::loo(double y, double y_excluded) const {
  const double n = double(y_sorted_.size());
  if (n < 2) throw TooFewPoints();
  const double g = (*this)(y);
  return (n * g - kernel_boundary(y_excluded, y, h_)) / (n - 1.0);
}

double plugin_weight(double y, int p, double det_scatter, const TransformSpec& transform) {
  if (y < 0.0) throw ScedError("transformed value must be nonnegative");
  if (p > 2 && transform.inverse(y) < 1e-12) throw WeightOverflow();
  // psi(y)^{1 - p/2} / psi'(y) simplifies to (y + d0)^{1 - p/2}
  const double half = p / 2.0;
  const double ratio = std::pow(y + transform.d0, 1.0 - half);
  return std::tgamma(half) * ratio / (std::pow(M_PI, half) * std::sqrt(det_scatter));
}

double plugin_density_at(double y, const EllipticalParams& params,
                         const GeneratorEstimate& estimate) {
  const double det = params.scatter.determinant();
  return plugin_weight(y, params.p(), det, estimate.transform()) * estimate(y);
}

double plugin_density(const Vector& x, int c, const EllipticalParams& params,
                      const GeneratorEstimate& estimate) {
  const double y =
      transform_y(x, params.means.row(c).transpose(), params.scatter, estimate.transform());
  return plugin_density_at(y, params, estimate);
}

BandwidthSelection cv_bandwidth(const Vector& y_sample, int grid_size) {
  const int n = static_cast<int>(y_sample.size());
  if (n < 10) throw TooFewPoints();
  Vector ys = y_sample;
  std::sort(ys.data(), ys.data() + n);
  const double mean = ys.mean();
  const double sd = std::sqrt((ys.array() - mean).square().sum() / double(n - 1));
  if (!(sd > 0.0)) throw FlatCv();
  const double scale = sd * std::pow(double(n), -0.2);
  const double h_lo = 0.05 * scale;
  const double h_hi = 3.0 * scale;

  BandwidthSelection sel;
  sel.cv_curve.reserve(grid_size);
  const double ymax = ys[n - 1];
  for (int g = 0; g < grid_size; ++g) {
    const double h = std::exp(std::log(h_lo) +
                              (std::log(h_hi) - std::log(h_lo)) * double(g) /
                                  double(grid_size - 1));
    // composite Simpson over [0, ymax + h]
    const int panels = 512;
    const double b = ymax + h;
    const double dy = b / panels;
    double int_g2 = 0.0;  // integral of ghat^2
    double int_k2 = 0.0;  // sum_i integral of K_i^2
    for (int j = 0; j <= panels; ++j) {
      const double y = j * dy;
      double s1, s2;
      window_sums(ys, y, h, s1, s2);
      const double wsimp = (j == 0 || j == panels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
      int_g2 += wsimp * s1 * s1;
      int_k2 += wsimp * s2;
    }
    int_g2 *= dy / 3.0 / (double(n) * double(n));
    int_k2 *= dy / 3.0;

    double loo_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      double s1, s2;
      window_sums(ys, ys[i], h, s1, s2);
      const double g_at = s1 / double(n);
      loo_sum += (double(n) * g_at - kernel_boundary(ys[i], ys[i], h)) / double(n - 1);
    }

    const double term1 =
        (double(n) * double(n) * double(n - 2) * int_g2 + int_k2) /
        (double(n - 1) * double(n - 1));
    const double cv = (term1 - 2.0 * loo_sum) / double(n);
    sel.cv_curve.emplace_back(h, cv);
  }

  double lo = sel.cv_curve.front().second, hi = lo;
  int arg = 0;
  for (int g = 0; g < grid_size; ++g) {
    const double v = sel.cv_curve[g].second;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    if (v < sel.cv_curve[arg].second) arg = g;
  }
  if (hi - lo < 1e-12) throw FlatCv();
  sel.h_tilde = sel.cv_curve[arg].first;
  sel.h_hat = std::pow(double(n), 3.0 / 80.0) * sel.h_tilde;
  return sel;
}

}  // namespace sced
