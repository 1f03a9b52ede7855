#pragma once

#include <vector>

#include "sced/types.hpp"
#include "sced/density.hpp"

namespace sced {

/// Unconstrained encoding of (means, scatter): flat means followed by the
/// free entries of a lower-triangular Cholesky factor with L(0,0) fixed at 1
/// and log-encoded diagonals, so the decoded scatter has scatter(0,0) = 1.
struct ThetaParameterization {
  int k = 0;
  int p = 0;

  int dim() const { return k * p + p * (p + 1) / 2 - 1; }
  Vector encode(const EllipticalParams& params) const;
  EllipticalParams decode(const Vector& theta, const Vector& probs) const;
};

struct PseudoLikelihoodValue {
  double value = 0.0;
  Vector per_point;
  int n_clamped = 0;
};

// cluster proportions |G_c| / n
Vector pi_hat(const Partition& partition);

// transformed sample Y_i built from the hard partition and theta
Vector transform_sample(const Dataset& data, const Partition& partition,
                        const EllipticalParams& params, const TransformSpec& transform);

// hard-partition log pseudo-likelihood
PseudoLikelihoodValue pl1(const EllipticalParams& params, const Dataset& data,
                          const Partition& partition, double h,
                          const TransformSpec& transform);

// marginal (mixture) log pseudo-likelihood; the generator estimate still uses
// the hard-partition transformed sample
PseudoLikelihoodValue pl2(const EllipticalParams& params, const Dataset& data,
                          const Partition& partition, double h,
                          const TransformSpec& transform);

enum class PlObjective { kHard, kMarginal };

struct MaximizeResult {
  EllipticalParams params;
  double value = 0.0;
  bool improved = false;
  int evaluations = 0;
};

// derivative-free maximization over the theta encoding; probs are held at
// pi_hat(partition) for the hard objective and jointly optimized (through a
// softmax encoding) for the marginal one. Never returns a point worse than init.
MaximizeResult maximize(PlObjective objective, const EllipticalParams& init,
                        const Dataset& data, const Partition& partition, double h,
                        const TransformSpec& transform, const FitConfig& config);

// leave-one-out marginal log-likelihood used by the selection criterion
double loo_marginal_loglik(const EllipticalParams& params, const Dataset& data,
                           const Partition& partition, double h,
                           const TransformSpec& transform);

// variance-matrix estimate sigma_x = (mean psi(Y_i) / p) * scatter
Matrix estimate_variance_matrix(const Dataset& data, const Partition& partition,
                                const EllipticalParams& params,
                                const TransformSpec& transform);

}  // namespace sced
