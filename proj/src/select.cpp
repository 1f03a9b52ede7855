#include "sced/select.hpp"

#include <cmath>
#include <limits>

#include "sced/init.hpp"
#include "sced/parallel.hpp"

namespace sced {

double spic(int k, double loo_loglik, int n, int p) {
  const double nd = double(n);
  const double logn = std::log(nd);
  return -loo_loglik / nd + double(k) * logn / (2.0 * std::pow(nd, 0.8)) +
         double(k) * double(p + 1) * logn / (2.0 * nd);
}

double adequacy_D(double pl_k_semiparametric, double l0_parametric_max, int n) {
  const double nd = double(n);
  return (pl_k_semiparametric - l0_parametric_max) / nd -
         std::log(nd) / std::pow(nd, 0.8);
}

double normal_clusterwise_loglik(const Dataset& data, const Partition& partition) {
  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  const Matrix means = cluster_means(data, partition);
  const Matrix cov = pooled_within_variance(data, partition, means);
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NotSpd();
  double logdet = 0.0;
  for (int j = 0; j < p; ++j) logdet += 2.0 * std::log(llt.matrixL()(j, j));
  const auto sizes = partition.cluster_sizes();

  double total = 0.0;
  const double c0 = -0.5 * double(p) * std::log(2.0 * M_PI) - 0.5 * logdet;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < partition.k; ++c) {
      const Vector r = (data.values.row(i) - means.row(c)).transpose();
      const double q = r.dot(llt.solve(r));
      s += (double(sizes[c]) / double(n)) * std::exp(c0 - 0.5 * q);
    }
    total += std::log(std::max(s, 1e-300));
  }
  return total;
}

SpicCurve select_k(int n, int p, int k_min, int k_max,
                   const std::function<KFitOutcome(int)>& fit_k, int threads) {
  if (k_min < 1 || k_max < k_min) throw ScedError("k range is empty");
  SpicCurve curve;
  curve.points.resize(k_max - k_min + 1);
  parallel_for(k_max - k_min + 1, threads, [&](int idx) {
    const int k = k_min + idx;
    SpicPoint pt;
    pt.k = k;
    const KFitOutcome out = fit_k(k);
    pt.failed = out.failed;
    pt.error = out.error;
    if (!out.failed) {
      pt.loo_loglik = out.loo_loglik;
      pt.spic_value = spic(k, out.loo_loglik, n, p);
    }
    curve.points[idx] = std::move(pt);
  });
  double best = std::numeric_limits<double>::infinity();
  curve.selected_k = 0;
  for (const auto& pt : curve.points) {
    if (pt.failed) continue;
    if (pt.spic_value < best) {
      best = pt.spic_value;
      curve.selected_k = pt.k;
    }
  }
  if (curve.selected_k == 0) throw ScedError("every cluster count failed");
  return curve;
}

}  // namespace sced
