#include "sced/types.hpp"

#include <cmath>

namespace sced {

Dataset::Dataset(Matrix v) : values(std::move(v)) {
  if (values.rows() < 2 || values.cols() < 1)
    throw ScedError("dataset requires n >= 2 and p >= 1");
  if (!values.allFinite()) throw ScedError("dataset contains non-finite entries");
  col_means = Vector::Zero(values.cols());
  col_sds = Vector::Ones(values.cols());
}

Partition::Partition(std::vector<int> l, int kk) : labels(std::move(l)), k(kk) {
  for (int lab : labels)
    if (lab < 0 || lab >= k) throw ScedError("partition label out of range");
}

std::vector<int> Partition::cluster_sizes() const {
  std::vector<int> sizes(k, 0);
  for (int lab : labels) ++sizes[lab];
  return sizes;
}

bool Partition::proper() const {
  for (int s : cluster_sizes())
    if (s == 0) return false;
  return true;
}

double TransformSpec::forward(double t) const {
  if (t <= 0.0) return 0.0;
  // -d0 + (d0^{p/2} + t^{p/2})^{2/p} = d0 expm1((2/p) log1p((t/d0)^{p/2})),
  // which keeps full precision for small t where the direct form cancels
  const double half = p / 2.0;
  return d0 * std::expm1((2.0 / p) * std::log1p(std::pow(t / d0, half)));
}

double TransformSpec::inverse(double y) const {
  if (y <= 0.0) return 0.0;
  // [(y+d0)^{p/2} - d0^{p/2}]^{2/p} = d0 [expm1((p/2) log1p(y/d0))]^{2/p}
  const double half = p / 2.0;
  return d0 * std::pow(std::expm1(half * std::log1p(y / d0)), 2.0 / p);
}

double TransformSpec::inverse_deriv(double y) const {
  const double half = p / 2.0;
  const double inner =
      y > 0.0 ? std::pow(d0, half) * std::expm1(half * std::log1p(y / d0)) : 0.0;
  if (inner <= 0.0) {
    // limit as y -> 0: psi ~ (half * d0^{half-1} * y)^{2/p}; derivative diverges
    // for p > 2 and equals 1 for p = 2. Callers combine psi^{1-p/2}/psi' which
    // stays finite; evaluate at a tiny offset to keep the ratio meaningful.
    const double eps = 1e-12;
    return inverse_deriv(y + eps);
  }
  return std::pow(y + d0, half - 1.0) * std::pow(inner, 2.0 / p - 1.0);
}

void FitConfig::validate() const {
  if (k_min < 1 || k_max < k_min) throw ScedError("k range is empty");
  if (d0 <= 0) throw ScedError("d0 must be positive");
  if (admm_tol <= 0 || admm_max_iter <= 0) throw ScedError("invalid ADMM settings");
  if (lambda_grid_size < 2) throw ScedError("lambda grid needs at least 2 points");
  if (cv_grid_size < 2) throw ScedError("cv grid needs at least 2 points");
  if (refine_max_iter < 1) throw ScedError("refine_max_iter must be positive");
}

Dataset standardize(const Dataset& data) {
  const auto n = data.values.rows();
  const auto p = data.values.cols();
  Dataset out;
  out.values.resize(n, p);
  out.col_means.resize(p);
  out.col_sds.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = data.values.col(j).mean();
    const double var =
        (data.values.col(j).array() - mean).square().sum() / double(n - 1);
    if (var <= 0.0) throw ConstantColumn(static_cast<int>(j));
    const double sd = std::sqrt(var);
    out.values.col(j) = (data.values.col(j).array() - mean) / sd;
    out.col_means[j] = mean;
    out.col_sds[j] = sd;
  }
  out.standardized = true;
  return out;
}

Matrix destandardize(const Dataset& data) {
  if (!data.standardized) return data.values;
  Matrix out = data.values;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    out.col(j) = out.col(j).array() * data.col_sds[j] + data.col_means[j];
  return out;
}

bool is_spd(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + m.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().minCoeff() > tol;
}

std::pair<Matrix, double> scatter_from_variance(const Matrix& sigma_x) {
  if (!is_spd(sigma_x)) throw NotSpd();
  const double sigma2 = sigma_x(0, 0);
  Matrix scatter = sigma_x / sigma2;
  scatter(0, 0) = 1.0;
  return {scatter, sigma2};
}

EllipticalParams validate_params(EllipticalParams params) {
  Matrix s = 0.5 * (params.scatter + params.scatter.transpose());
  const double s11 = s(0, 0);
  if (s11 <= 0) throw DegenerateScatter();
  s /= s11;
  s(0, 0) = 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.eigenvalues().minCoeff() < 1e-10) throw DegenerateScatter();
  params.scatter = s;

  for (int c = 0; c < params.probs.size(); ++c) {
    if (params.probs[c] <= 0.0) throw EmptyCluster(c);
    params.probs[c] = std::min(std::max(params.probs[c], 1e-12), 1.0);
  }
  params.probs /= params.probs.sum();
  return params;
}

Matrix sqrt_spd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.eigenvalues().minCoeff() <= 0) throw NotSpd();
  return es.operatorSqrt();
}

}  // namespace sced
