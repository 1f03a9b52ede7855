#pragma once

#include <string>
#include <vector>

#include "sced/cluster.hpp"
#include "sced/seppen.hpp"
#include "sced/select.hpp"
#include "sced/types.hpp"

namespace sced {

struct StageReport {
  Partition partition;
  EllipticalParams params;
  double objective = 0.0;
  double wall_ms = 0.0;
  bool present = false;
};

struct FitReport {
  int k = 0;
  StageReport kmeans_stage;  // plain k-means at the requested k
  StageReport is_stage;      // Mahalanobis-refined initialization
  StageReport sp_stage;      // separation-penalty estimate
  StageReport pml_stage;     // hard-objective maximizer
  StageReport pmml_stage;    // marginal-objective maximizer
  StageReport oc_stage;      // refined (optimal clustering) estimate

  double h_tilde = 0.0, h_hat = 0.0;        // Step 4 bandwidths
  double h_tilde_star = 0.0, h_hat_star = 0.0;  // refined-stage bandwidths
  double lambda_star = 0.0;
  std::vector<double> lambda_values;
  std::vector<double> lambda_fit_ss;
  double loo_loglik = 0.0;  // at the refined estimate, bandwidth h_tilde_star
  double sigma2_x = 0.0;
  int n_clamped = 0;
  bool degraded = false;
  std::vector<std::string> warnings;
};

// Steps 1-6 for a fixed cluster count
FitReport fit_once(const Dataset& data, int k, const FitConfig& config);

// criterion curve across config.k_min..config.k_max
SpicCurve select_k_curve(const Dataset& data, const FitConfig& config,
                         std::vector<FitReport>* reports = nullptr);

}  // namespace sced
