#pragma once

#include <cstdint>

#include "sced/types.hpp"

namespace sced {

/// Output of the initialization stage for one cluster count.
struct InitResult {
  Partition partition;
  Matrix means;       // l x p
  Matrix pooled_var;  // p x p
  double within_ss = 0.0;
  int sweeps = 0;
};

// largest cluster count probed during initialization: floor(sqrt(n / ln n))
int kbar(int n);

// Lloyd iterations with distance-weighted seeding; best of `restarts` by within-SS
Partition kmeans(const Dataset& data, int l, std::uint64_t seed, int restarts = 10,
                 int max_iter = 100);

Matrix cluster_means(const Dataset& data, const Partition& part);

// (1/n) sum of outer products of residuals to own-cluster means
Matrix pooled_within_variance(const Dataset& data, const Partition& part, const Matrix& means);

// nearest center under the pooled-variance Mahalanobis metric; ties to lowest index
Partition mahalanobis_reassign(const Dataset& data, const Matrix& means,
                               const Matrix& pooled_var);

// (1/2) sum of squared Euclidean residuals to own-cluster means
double within_ss(const Dataset& data, const Partition& part, const Matrix& means);

// k-means seed followed by alternating Mahalanobis reassignment and mean updates
InitResult init_refine(const Dataset& data, int l, std::uint64_t seed, int max_iter = 20,
                       int restarts = 10);

}  // namespace sced
