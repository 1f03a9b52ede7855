#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sced {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ScedError : std::runtime_error {
  explicit ScedError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConstantColumn : ScedError {
  int column;
  explicit ConstantColumn(int j)
      : ScedError("column " + std::to_string(j) + " has zero variance"), column(j) {}
};

struct NotSpd : ScedError {
  NotSpd() : ScedError("matrix is not symmetric positive definite") {}
};

struct DegenerateScatter : ScedError {
  DegenerateScatter() : ScedError("scatter matrix is numerically degenerate") {}
};

struct EmptyCluster : ScedError {
  explicit EmptyCluster(int c = -1)
      : ScedError("cluster " + std::to_string(c) + " is empty") {}
};

struct TooFewPoints : ScedError {
  TooFewPoints() : ScedError("too few points for the requested operation") {}
};

struct SingularPooledVariance : ScedError {
  SingularPooledVariance() : ScedError("pooled within-cluster variance is singular") {}
};

struct DegenerateGrid : ScedError {
  DegenerateGrid() : ScedError("lambda grid is degenerate: no nonzero center distances") {}
};

struct LengthMismatch : ScedError {
  LengthMismatch() : ScedError("vector lengths do not match") {}
};

struct FlatCv : ScedError {
  FlatCv() : ScedError("cross-validation curve is flat; degenerate sample") {}
};

struct WeightOverflow : ScedError {
  WeightOverflow() : ScedError("plug-in weight diverges near the center") {}
};

/// n x p matrix of continuous observations plus column standardization metadata.
struct Dataset {
  Matrix values;       // n x p
  bool standardized = false;
  Vector col_means;    // p
  Vector col_sds;      // p

  Dataset() = default;
  explicit Dataset(Matrix v);

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
};

/// Assignment of each of n indices to one of k clusters. Labels are 0-based
/// internally; external formats (CSV/JSON) use 1-based labels.
struct Partition {
  std::vector<int> labels;  // values in {0..k-1}
  int k = 0;

  Partition() = default;
  Partition(std::vector<int> l, int kk);

  int n() const { return static_cast<int>(labels.size()); }
  std::vector<int> cluster_sizes() const;
  // true iff all k clusters are nonempty
  bool proper() const;
};

/// eta = (mu_1..mu_k, Sigma with Sigma(0,0) = 1, pi).
struct EllipticalParams {
  Matrix means;    // k x p
  Matrix scatter;  // p x p, SPD, scatter(0,0) == 1
  Vector probs;    // k, positive, sums to 1

  int k() const { return static_cast<int>(means.rows()); }
  int p() const { return static_cast<int>(means.cols()); }
};

/// Monotone transform of the Mahalanobis quadratic form:
/// Psi(t) = -d0 + (d0^{p/2} + t^{p/2})^{2/p}, with inverse psi and its derivative.
struct TransformSpec {
  double d0 = 1.0;
  int p = 2;

  double forward(double t) const;    // Psi
  double inverse(double y) const;    // psi = Psi^{-1}
  double inverse_deriv(double y) const;  // psi^(1)
};

struct FitConfig {
  int k_min = 1;
  int k_max = 1;
  double d0 = 1.0;
  int lambda_grid_size = 20;      // J
  double admm_penalty = 1.0;      // nu_0, fixed per the ADMM formulation
  double admm_tol = 1e-6;
  int admm_max_iter = 500;
  int cv_grid_size = 40;
  int refine_max_iter = 20;
  int kmeans_restarts = 10;
  int init_max_iter = 20;
  bool use_pl2 = true;            // marginal objective; false selects pl1
  bool both_objectives = false;   // also run the non-default objective at Step 4
  std::uint64_t seed = 0;
  int threads = 0;                // 0 = hardware concurrency
  bool warm_start_lambda = true;

  void validate() const;
};

Dataset standardize(const Dataset& data);
/// inverse of standardize: maps standardized values back to original coordinates
Matrix destandardize(const Dataset& data);

// scatter = sigma_x / sigma_x(0,0); returns the normalized scatter and sigma_x(0,0)
std::pair<Matrix, double> scatter_from_variance(const Matrix& sigma_x);

// symmetrize, renormalize scatter(0,0) to 1, clip and renormalize probs
EllipticalParams validate_params(EllipticalParams params);

// symmetric positive-definite square root via eigendecomposition
Matrix sqrt_spd(const Matrix& m);

bool is_spd(const Matrix& m, double tol = 0.0);

}  // namespace sced
