#include "sced/plik.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace sced {

namespace {

constexpr double kDensityFloor = 1e-300;

Matrix chol_lower(const Matrix& scatter) {
  Eigen::LLT<Matrix> llt(scatter);
  if (llt.info() != Eigen::Success) throw NotSpd();
  return llt.matrixL();
}

}  // namespace

Vector ThetaParameterization::encode(const EllipticalParams& params) const {
  Vector theta(dim());
  int pos = 0;
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < p; ++j) theta[pos++] = params.means(c, j);
  Matrix scatter = params.scatter / params.scatter(0, 0);
  scatter(0, 0) = 1.0;
  const Matrix L = chol_lower(scatter);
  for (int r = 1; r < p; ++r) {
    for (int j = 0; j < r; ++j) theta[pos++] = L(r, j);
    theta[pos++] = std::log(L(r, r));
  }
  return theta;
}

EllipticalParams ThetaParameterization::decode(const Vector& theta, const Vector& probs) const {
  if (theta.size() != dim()) throw LengthMismatch();
  EllipticalParams params;
  params.means.resize(k, p);
  int pos = 0;
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < p; ++j) params.means(c, j) = theta[pos++];
  Matrix L = Matrix::Zero(p, p);
  L(0, 0) = 1.0;
  for (int r = 1; r < p; ++r) {
    for (int j = 0; j < r; ++j) L(r, j) = theta[pos++];
    L(r, r) = std::exp(theta[pos++]);
  }
  params.scatter = L * L.transpose();
  params.scatter(0, 0) = 1.0;
  params.probs = probs;
  return params;
}

Vector pi_hat(const Partition& partition) {
  const auto sizes = partition.cluster_sizes();
  Vector probs(partition.k);
  for (int c = 0; c < partition.k; ++c) {
    if (sizes[c] == 0) throw EmptyCluster(c);
    probs[c] = double(sizes[c]) / double(partition.n());
  }
  return probs;
}

Vector transform_sample(const Dataset& data, const Partition& partition,
                        const EllipticalParams& params, const TransformSpec& transform) {
  Eigen::LLT<Matrix> llt(params.scatter);
  if (llt.info() != Eigen::Success) throw NotSpd();
  Vector y(data.n());
  for (int i = 0; i < partition.n(); ++i)
    y[i] = transform_y(data.values.row(i).transpose(),
                       params.means.row(partition.labels[i]).transpose(), llt, transform);
  return y;
}

PseudoLikelihoodValue pl1(const EllipticalParams& params, const Dataset& data,
                          const Partition& partition, double h,
                          const TransformSpec& transform) {
  const Vector y = transform_sample(data, partition, params, transform);
  const GeneratorEstimate g(y, h, transform);
  const double det = params.scatter.determinant();
  const int p = params.p();
  PseudoLikelihoodValue out;
  out.per_point.resize(data.n());
  for (int i = 0; i < partition.n(); ++i) {
    const double f = plugin_weight(y[i], p, det, transform) * g(y[i]);
    if (f < kDensityFloor) ++out.n_clamped;
    out.per_point[i] =
        std::log(params.probs[partition.labels[i]]) + std::log(std::max(f, kDensityFloor));
  }
  out.value = out.per_point.sum();
  return out;
}

PseudoLikelihoodValue pl2(const EllipticalParams& params, const Dataset& data,
                          const Partition& partition, double h,
                          const TransformSpec& transform) {
  const Vector y = transform_sample(data, partition, params, transform);
  const GeneratorEstimate g(y, h, transform);
  const double det = params.scatter.determinant();
  const int p = params.p();
  const int k = params.k();
  Eigen::LLT<Matrix> llt(params.scatter);
  PseudoLikelihoodValue out;
  out.per_point.resize(data.n());
  for (int i = 0; i < static_cast<int>(data.n()); ++i) {
    double s = 0.0;
    for (int c = 0; c < k; ++c) {
      const double yc = transform_y(data.values.row(i).transpose(),
                                    params.means.row(c).transpose(), llt, transform);
      s += params.probs[c] * plugin_weight(yc, p, det, transform) * g(yc);
    }
    if (s < kDensityFloor) ++out.n_clamped;
    out.per_point[i] = std::log(std::max(s, kDensityFloor));
  }
  out.value = out.per_point.sum();
  return out;
}

double loo_marginal_loglik(const EllipticalParams& params, const Dataset& data,
                           const Partition& partition, double h,
                           const TransformSpec& transform) {
  if (data.n() < 3) throw TooFewPoints();
  const Vector y = transform_sample(data, partition, params, transform);
  const GeneratorEstimate g(y, h, transform);
  const double det = params.scatter.determinant();
  const int p = params.p();
  const int k = params.k();
  Eigen::LLT<Matrix> llt(params.scatter);
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(data.n()); ++i) {
    double s = 0.0;
    for (int c = 0; c < k; ++c) {
      const double yc = transform_y(data.values.row(i).transpose(),
                                    params.means.row(c).transpose(), llt, transform);
      s += params.probs[c] * plugin_weight(yc, p, det, transform) * g.loo(yc, y[i]);
    }
    total += std::log(std::max(s, kDensityFloor));
  }
  return total;
}

Matrix estimate_variance_matrix(const Dataset& data, const Partition& partition,
                                const EllipticalParams& params,
                                const TransformSpec& transform) {
  const Vector y = transform_sample(data, partition, params, transform);
  double mean_q = 0.0;
  for (int i = 0; i < y.size(); ++i) mean_q += transform.inverse(y[i]);
  mean_q /= double(y.size());
  return (mean_q / double(params.p())) * params.scatter;
}

namespace {

// standard Nelder-Mead minimization; returns best point found
struct NmResult {
  Vector x;
  double value;
  int evaluations;
};

NmResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                     double step, int max_evals) {
  const int d = static_cast<int>(x0.size());
  std::vector<Vector> xs(d + 1, x0);
  std::vector<double> fs(d + 1);
  int evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    return f(x);
  };
  fs[0] = eval(xs[0]);
  for (int j = 0; j < d; ++j) {
    xs[j + 1][j] += step * (1.0 + std::abs(x0[j]));
    fs[j + 1] = eval(xs[j + 1]);
  }
  auto order = [&] {
    std::vector<int> idx(d + 1);
    for (int i = 0; i <= d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Vector> nx(d + 1);
    std::vector<double> nf(d + 1);
    for (int i = 0; i <= d; ++i) {
      nx[i] = xs[idx[i]];
      nf[i] = fs[idx[i]];
    }
    xs = std::move(nx);
    fs = std::move(nf);
  };
  order();
  while (evals < max_evals) {
    if (std::abs(fs[d] - fs[0]) <= 1e-8 * (1.0 + std::abs(fs[0]))) break;
    Vector centroid = Vector::Zero(d);
    for (int i = 0; i < d; ++i) centroid += xs[i];
    centroid /= double(d);
    const Vector xr = centroid + (centroid - xs[d]);
    const double fr = eval(xr);
    if (fr < fs[0]) {
      const Vector xe = centroid + 2.0 * (centroid - xs[d]);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[d] = xe;
        fs[d] = fe;
      } else {
        xs[d] = xr;
        fs[d] = fr;
      }
    } else if (fr < fs[d - 1]) {
      xs[d] = xr;
      fs[d] = fr;
    } else {
      const bool outside = fr < fs[d];
      const Vector xc = outside ? Vector(centroid + 0.5 * (xr - centroid))
                                : Vector(centroid - 0.5 * (centroid - xs[d]));
      const double fc = eval(xc);
      if (fc < (outside ? fr : fs[d])) {
        xs[d] = xc;
        fs[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = eval(xs[i]);
          if (evals >= max_evals) break;
        }
      }
    }
    order();
  }
  return {xs[0], fs[0], evals};
}

Vector softmax_full(const Vector& logits_head) {
  const int k = static_cast<int>(logits_head.size()) + 1;
  Vector z(k);
  z.head(k - 1) = logits_head;
  z[k - 1] = 0.0;
  const double m = z.maxCoeff();
  Vector e = (z.array() - m).exp();
  return e / e.sum();
}

}  // namespace

MaximizeResult maximize(PlObjective objective, const EllipticalParams& init,
                        const Dataset& data, const Partition& partition, double h,
                        const TransformSpec& transform, const FitConfig& config) {
  const int k = init.k();
  const int p = init.p();
  const ThetaParameterization par{k, p};
  const bool marginal = objective == PlObjective::kMarginal;
  const int d_theta = par.dim();
  const int d = d_theta + (marginal ? k - 1 : 0);

  const Vector fixed_probs = marginal ? init.probs : pi_hat(partition);

  auto objective_at = [&](const Vector& z) -> double {
    try {
      Vector probs = fixed_probs;
      if (marginal && k > 1) probs = softmax_full(z.tail(k - 1));
      EllipticalParams cand = par.decode(z.head(d_theta), probs);
      const PseudoLikelihoodValue v = marginal
                                          ? pl2(cand, data, partition, h, transform)
                                          : pl1(cand, data, partition, h, transform);
      if (!std::isfinite(v.value)) return std::numeric_limits<double>::infinity();
      return -v.value;
    } catch (const ScedError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Vector z0(d);
  z0.head(d_theta) = par.encode(init);
  if (marginal && k > 1) {
    Vector probs = init.probs;
    for (int c = 0; c < k; ++c) probs[c] = std::max(probs[c], 1e-10);
    for (int c = 0; c < k - 1; ++c) z0[d_theta + c] = std::log(probs[c] / probs[k - 1]);
  }

  const double f0 = objective_at(z0);
  const int budget = std::min(120 * d, 8000);
  NmResult r1 = nelder_mead(objective_at, z0, 0.1, budget);
  NmResult r2 = nelder_mead(objective_at, r1.x, 0.02, budget / 2);
  const NmResult& best = r2.value < r1.value ? r2 : r1;

  MaximizeResult out;
  out.evaluations = r1.evaluations + r2.evaluations;
  if (best.value < f0) {
    Vector probs = fixed_probs;
    if (marginal && k > 1) probs = softmax_full(best.x.tail(k - 1));
    out.params = validate_params(par.decode(best.x.head(d_theta), probs));
    out.value = -best.value;
    out.improved = true;
  } else {
    out.params = init;
    out.value = -f0;
    out.improved = false;
  }
  return out;
}

}  // namespace sced
