#pragma once

#include <vector>

#include "sced/types.hpp"

namespace sced {

/// ADMM iterate for the separation-penalty objective at one lambda.
/// delta[c].row(i) and nu[c].row(i) hold the split variable and scaled dual
/// for the (i, c) pair.
struct AdmmState {
  Matrix beta;  // n x p
  Matrix mu;    // k x p
  std::vector<Matrix> delta;
  std::vector<Matrix> nu;
  Matrix W_half;
  double lambda = 0.0;
  int iter = 0;
  double primal_residual = 0.0;
  bool converged = false;
  int empty_center_carryforwards = 0;
};

struct LambdaEntry {
  double lambda = 0.0;
  Matrix beta;
  Matrix mu;
  Partition partition;
  double fit_ss = 0.0;
  int n_clusters_effective = 0;
  bool converged = false;
};

struct LambdaPath {
  std::vector<LambdaEntry> entries;
};

// log-spaced grid between the smallest and largest nonzero L1 center distances
std::vector<double> lambda_grid(const Matrix& beta0, const Matrix& mu0, const Matrix& W_half,
                                int J);

Vector soft_threshold(const Vector& v, double lambda);

// subgradient rows of the concave penalty part at the current iterate:
// row i = W_half * sum over non-nearest centers c of sign(W_half (beta_i - mu_c))
Matrix dc_subgradient(const Matrix& beta, const Matrix& mu, const Matrix& W_half);

Vector beta_update(const Vector& x_i, const Matrix& mu, const Matrix& delta_i,
                   const Matrix& nu_i, const Matrix& W, const Vector& dc_subgrad_i,
                   double lambda);

// W^{-1/2} * coordinatewise median of W^{1/2} beta over each center's L1-nearest
// set (taken with respect to mu_prev); empty sets carry mu_prev forward
Matrix mu_update(const Matrix& beta_new, const Matrix& mu_prev, const Matrix& W_half,
                 const Matrix& W_half_inv, int* n_carryforward = nullptr);

Partition assign_clusters_l1(const Matrix& beta, const Matrix& mu, const Matrix& W_half);

AdmmState admm_fit(const Dataset& data, const Matrix& W, double lambda, const Matrix& beta0,
                   const Matrix& mu0, const FitConfig& config);

// index of the grid entry with exactly k_target nonempty clusters and minimal
// fit_ss; falls back to most clusters, then minimal fit_ss
int select_lambda(const LambdaPath& path, int k_target);

// residual and cluster-center variance matrix estimates
std::pair<Matrix, Matrix> variance_estimates(const Dataset& data, const Matrix& beta,
                                             const Matrix& mu, const Partition& partition);

struct SpResult {
  LambdaPath path;
  int selected_index = -1;
  double lambda = 0.0;
  Matrix beta;
  Matrix mu;
  Partition partition;
  Matrix sigma_x_residual;
  Matrix sigma_x_cluster;
  bool lambda_bound_warning = false;  // selected lambda below the theory bound
};

// warm-started lambda path plus fit-SS selection
SpResult sp_path_fit(const Dataset& data, int k, const Matrix& beta0, const Matrix& mu0,
                     const Matrix& W, const FitConfig& config);

}  // namespace sced
