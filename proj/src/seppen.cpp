#include "sced/seppen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sced {

std::vector<double> lambda_grid(const Matrix& beta0, const Matrix& mu0, const Matrix& W_half,
                                int J) {
  if (J < 2) throw ScedError("lambda grid needs at least 2 points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int i = 0; i < beta0.rows(); ++i) {
    for (int c = 0; c < mu0.rows(); ++c) {
      const double d = (W_half * (beta0.row(i) - mu0.row(c)).transpose()).lpNorm<1>();
      if (d > 0.0) lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  if (!(lo < std::numeric_limits<double>::infinity()) || hi <= 0.0) throw DegenerateGrid();
  std::vector<double> grid(J);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int j = 0; j < J; ++j)
    grid[j] = std::exp(llo + (lhi - llo) * double(j) / double(J - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

Vector soft_threshold(const Vector& v, double lambda) {
  Vector out(v.size());
  for (int j = 0; j < v.size(); ++j) {
    const double a = std::abs(v[j]) - lambda;
    out[j] = a > 0.0 ? (v[j] > 0.0 ? a : -a) : 0.0;
  }
  return out;
}

namespace {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

int l1_nearest(const Vector& wb, const Matrix& wmu) {
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int c = 0; c < wmu.rows(); ++c) {
    const double d = (wb - wmu.row(c).transpose()).lpNorm<1>();
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

}  // namespace

Matrix dc_subgradient(const Matrix& beta, const Matrix& mu, const Matrix& W_half) {
  const int n = static_cast<int>(beta.rows());
  const int k = static_cast<int>(mu.rows());
  const int p = static_cast<int>(beta.cols());
  const Matrix wb = beta * W_half;  // rows are W_half * beta_i (W_half symmetric)
  const Matrix wmu = mu * W_half;
  Matrix out = Matrix::Zero(n, p);
  for (int i = 0; i < n; ++i) {
    const int cstar = l1_nearest(wb.row(i).transpose(), wmu);
    Vector s = Vector::Zero(p);
    for (int c = 0; c < k; ++c) {
      if (c == cstar) continue;
      for (int j = 0; j < p; ++j) s[j] += sign(wb(i, j) - wmu(c, j));
    }
    out.row(i) = (W_half * s).transpose();
  }
  return out;
}

Vector beta_update(const Vector& x_i, const Matrix& mu, const Matrix& delta_i,
                   const Matrix& nu_i, const Matrix& W, const Vector& dc_subgrad_i,
                   double lambda) {
  Eigen::LLT<Matrix> llt(W);
  if (llt.info() != Eigen::Success) throw NotSpd();
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  if (es.eigenvalues().minCoeff() <= 0.0) throw NotSpd();
  const Matrix W_half_inv = es.operatorInverseSqrt();
  const int k = static_cast<int>(mu.rows());
  Vector acc = x_i;
  for (int c = 0; c < k; ++c)
    acc += mu.row(c).transpose() +
           W_half_inv * (delta_i.row(c) - nu_i.row(c)).transpose();
  acc += lambda * llt.solve(dc_subgrad_i);
  return acc / double(k + 1);
}

Matrix mu_update(const Matrix& beta_new, const Matrix& mu_prev, const Matrix& W_half,
                 const Matrix& W_half_inv, int* n_carryforward) {
  const int n = static_cast<int>(beta_new.rows());
  const int k = static_cast<int>(mu_prev.rows());
  const int p = static_cast<int>(beta_new.cols());
  const Matrix wb = beta_new * W_half;
  const Matrix wmu = mu_prev * W_half;
  std::vector<std::vector<int>> members(k);
  for (int i = 0; i < n; ++i) members[l1_nearest(wb.row(i).transpose(), wmu)].push_back(i);

  Matrix mu = mu_prev;
  if (n_carryforward) *n_carryforward = 0;
  std::vector<double> col;
  for (int c = 0; c < k; ++c) {
    if (members[c].empty()) {
      if (n_carryforward) ++*n_carryforward;
      continue;
    }
    Vector med(p);
    for (int j = 0; j < p; ++j) {
      col.clear();
      for (int i : members[c]) col.push_back(wb(i, j));
      const size_t m = col.size();
      std::nth_element(col.begin(), col.begin() + m / 2, col.end());
      double v = col[m / 2];
      if (m % 2 == 0) {
        const double lo = *std::max_element(col.begin(), col.begin() + m / 2);
        v = 0.5 * (lo + v);
      }
      med[j] = v;
    }
    mu.row(c) = (W_half_inv * med).transpose();
  }
  return mu;
}

Partition assign_clusters_l1(const Matrix& beta, const Matrix& mu, const Matrix& W_half) {
  const int n = static_cast<int>(beta.rows());
  const Matrix wb = beta * W_half;
  const Matrix wmu = mu * W_half;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = l1_nearest(wb.row(i).transpose(), wmu);
  return Partition(std::move(labels), static_cast<int>(mu.rows()));
}

namespace {

double primal_residual(const Matrix& beta, const Matrix& mu, const std::vector<Matrix>& delta,
                       const Matrix& W_half) {
  const int n = static_cast<int>(beta.rows());
  const int k = static_cast<int>(mu.rows());
  const Matrix wb = beta * W_half;
  const Matrix wmu = mu * W_half;
  double r = 0.0;
  for (int c = 0; c < k; ++c)
    r += ((wb.rowwise() - wmu.row(c)) - delta[c]).rowwise().norm().sum();
  return r / double(n);
}

}  // namespace

AdmmState admm_fit(const Dataset& data, const Matrix& W, double lambda, const Matrix& beta0,
                   const Matrix& mu0, const FitConfig& config) {
  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  const int k = static_cast<int>(mu0.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  if (es.eigenvalues().minCoeff() <= 0.0) throw NotSpd();
  const Matrix W_half = es.operatorSqrt();
  const Matrix W_half_inv = es.operatorInverseSqrt();
  Eigen::LLT<Matrix> Wllt(W);

  AdmmState st;
  st.beta = beta0;
  st.mu = mu0;
  st.W_half = W_half;
  st.lambda = lambda;
  st.delta.assign(k, Matrix(n, p));
  st.nu.assign(k, Matrix::Zero(n, p));
  {
    const Matrix wb = beta0 * W_half;
    const Matrix wmu = mu0 * W_half;
    for (int c = 0; c < k; ++c) st.delta[c] = wb.rowwise() - wmu.row(c);
  }

  for (int m = 0; m < config.admm_max_iter; ++m) {
    const Matrix T = dc_subgradient(st.beta, st.mu, W_half);

    // beta update, vectorized over rows
    Matrix acc = data.values;
    for (int c = 0; c < k; ++c) {
      acc.rowwise() += st.mu.row(c);
      acc += (st.delta[c] - st.nu[c]) * W_half_inv;
    }
    acc += lambda * Wllt.solve(T.transpose()).transpose();
    st.beta = acc / double(k + 1);

    st.mu = mu_update(st.beta, st.mu, W_half, W_half_inv, &st.empty_center_carryforwards);

    const Matrix wb = st.beta * W_half;
    const Matrix wmu = st.mu * W_half;
    double dual_residual = 0.0;
    for (int c = 0; c < k; ++c) {
      Matrix g = (wb.rowwise() - wmu.row(c)) + st.nu[c];
      Matrix next(n, p);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) {
          const double a = std::abs(g(i, j)) - lambda;
          next(i, j) = a > 0.0 ? (g(i, j) > 0.0 ? a : -a) : 0.0;
        }
      dual_residual += (next - st.delta[c]).rowwise().norm().sum();
      st.delta[c] = std::move(next);
      st.nu[c] += (wb.rowwise() - wmu.row(c)) - st.delta[c];
    }
    dual_residual /= double(n);

    st.iter = m + 1;
    st.primal_residual = primal_residual(st.beta, st.mu, st.delta, W_half);
    // the primal residual vanishes as soon as the duals saturate while beta is
    // still contracting toward its fixed point, so require a quiet delta too
    if (st.primal_residual < config.admm_tol && dual_residual < config.admm_tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

int select_lambda(const LambdaPath& path, int k_target) {
  if (path.entries.empty()) throw ScedError("empty lambda path");
  int best = -1;
  for (int j = 0; j < static_cast<int>(path.entries.size()); ++j) {
    const auto& e = path.entries[j];
    if (e.n_clusters_effective != k_target) continue;
    if (best < 0 || e.fit_ss < path.entries[best].fit_ss) best = j;
  }
  if (best >= 0) return best;
  int most = 0;
  for (const auto& e : path.entries) most = std::max(most, e.n_clusters_effective);
  for (int j = 0; j < static_cast<int>(path.entries.size()); ++j) {
    const auto& e = path.entries[j];
    if (e.n_clusters_effective != most) continue;
    if (best < 0 || e.fit_ss < path.entries[best].fit_ss) best = j;
  }
  return best;
}

std::pair<Matrix, Matrix> variance_estimates(const Dataset& data, const Matrix& beta,
                                             const Matrix& mu, const Partition& partition) {
  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  Matrix res = Matrix::Zero(p, p);
  Matrix clu = Matrix::Zero(p, p);
  for (int i = 0; i < n; ++i) {
    const Vector rb = (data.values.row(i) - beta.row(i)).transpose();
    const Vector rm = (data.values.row(i) - mu.row(partition.labels[i])).transpose();
    res.noalias() += rb * rb.transpose();
    clu.noalias() += rm * rm.transpose();
  }
  return {res / double(n), clu / double(n)};
}

SpResult sp_path_fit(const Dataset& data, int k, const Matrix& beta0, const Matrix& mu0,
                     const Matrix& W, const FitConfig& config) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  if (es.eigenvalues().minCoeff() <= 0.0) throw NotSpd();
  const Matrix W_half = es.operatorSqrt();

  const std::vector<double> grid = lambda_grid(beta0, mu0, W_half, config.lambda_grid_size);
  SpResult out;
  Matrix beta = beta0;
  Matrix mu = mu0;
  for (double lam : grid) {
    const Matrix b_init = config.warm_start_lambda ? beta : beta0;
    const Matrix m_init = config.warm_start_lambda ? mu : mu0;
    AdmmState st = admm_fit(data, W, lam, b_init, m_init, config);
    beta = st.beta;
    mu = st.mu;
    LambdaEntry e;
    e.lambda = lam;
    e.beta = st.beta;
    e.mu = st.mu;
    e.partition = assign_clusters_l1(st.beta, st.mu, W_half);
    e.fit_ss = (data.values - st.beta).rowwise().squaredNorm().sum();
    int nonempty = 0;
    for (int s : e.partition.cluster_sizes())
      if (s > 0) ++nonempty;
    e.n_clusters_effective = nonempty;
    e.converged = st.converged;
    out.path.entries.push_back(std::move(e));
  }

  out.selected_index = select_lambda(out.path, k);
  const LambdaEntry& sel = out.path.entries[out.selected_index];
  out.lambda = sel.lambda;
  out.beta = sel.beta;
  out.mu = sel.mu;
  out.partition = sel.partition;
  auto [vres, vclu] = variance_estimates(data, sel.beta, sel.mu, sel.partition);
  out.sigma_x_residual = vres;
  out.sigma_x_cluster = vclu;

  const double n = double(data.n());
  const double p = double(data.p());
  const double w_norm = std::sqrt(es.eigenvalues().maxCoeff());
  out.lambda_bound_warning = sel.lambda < 2.0 * p * w_norm * std::sqrt(std::log(n));
  return out;
}

}  // namespace sced
