#pragma once

#include <vector>

#include "sced/plik.hpp"
#include "sced/types.hpp"

namespace sced {

struct PosteriorMatrix {
  Matrix probs;  // n x k, rows sum to 1
  int n_uniform_rows = 0;  // rows resolved to 1/k because every component vanished
};

// posterior cluster probabilities under the plug-in mixture; the generator
// estimate is built from the hard partition passed in
PosteriorMatrix posteriors(const Dataset& data, const EllipticalParams& params, double h,
                           const TransformSpec& transform, const Partition& partition_for_g);

// row-argmax labels, ties to the lowest index
Partition refine_partition(const PosteriorMatrix& post);

struct RefineResult {
  Partition partition;
  EllipticalParams params;
  double h_tilde = 0.0;
  double h_hat = 0.0;
  double objective = 0.0;
  std::vector<double> objective_history;
  int iterations = 0;
  bool cycle_detected = false;
  bool converged = false;
};

// alternate bandwidth reselection, objective maximization, posterior
// reassignment until the partition repeats
RefineResult refine_loop(const Dataset& data, const Partition& start,
                         const EllipticalParams& start_params, PlObjective objective,
                         const TransformSpec& transform, const FitConfig& config);

}  // namespace sced
