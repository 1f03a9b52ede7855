#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sced/types.hpp"

namespace sced {

struct SpicPoint {
  int k = 0;
  double loo_loglik = 0.0;
  double spic_value = 0.0;
  bool failed = false;
  std::string error;
};

struct SpicCurve {
  std::vector<SpicPoint> points;
  int selected_k = 0;
};

double spic(int k, double loo_loglik, int n, int p);

// adequacy statistic comparing the semiparametric LOO log-likelihood against a
// parametric maximum; positive values favor the semiparametric fit
double adequacy_D(double pl_k_semiparametric, double l0_parametric_max, int n);

// clusterwise-normal mixture log-likelihood at the hard-classification MLE
// (cluster means, pooled covariance, empirical proportions)
double normal_clusterwise_loglik(const Dataset& data, const Partition& partition);

struct KFitOutcome {
  double loo_loglik = 0.0;
  bool failed = false;
  std::string error;
};

// evaluates fit_k for each k in [k_min, k_max] (optionally in parallel) and
// minimizes the criterion; failed k are excluded with a record
SpicCurve select_k(int n, int p, int k_min, int k_max,
                   const std::function<KFitOutcome(int)>& fit_k, int threads = 1);

}  // namespace sced
