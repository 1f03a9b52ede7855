#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sced/types.hpp"

namespace sced {

enum class Generator { kM1, kM2 };

/// One simulation configuration from the benchmark designs.
struct SimDesign {
  Generator generator = Generator::kM2;
  int p = 2;
  int k = 2;
  int n = 250;
  double sigma = 1.0;
  Vector probs;
  Matrix means;    // k x p
  Matrix sigma_x;  // p x p

  static SimDesign make(Generator gen, int p, int k, double sigma, int n);
  std::string cell_key() const;  // stable identifier for checkpoints
};

// radius draw with density proportional to r^{p-1} f_p(r^2)
double sample_radial(Generator gen, int p, std::mt19937_64& rng);

// second moment of the radial law (exact for M2, quadrature for M1)
double radial_second_moment(Generator gen, int p);

struct SimDraw {
  Dataset data;
  Partition truth;
  EllipticalParams params;  // true means / scatter / probs
};

SimDraw generate_dataset(const SimDesign& design, std::mt19937_64& rng);

double rand_index(const Partition& a, const Partition& b);

// sqrt(squared error / entry count)
double rse(const Vector& estimate, const Vector& truth);

// permutation perm with perm[c] = estimated cluster matched to true cluster c,
// minimizing the total squared mean distance (exhaustive, k <= 8)
std::vector<int> align_clusters(const Matrix& est_means, const Matrix& true_means);

struct RepMetrics {
  double ri_kmeans = -1.0;
  double ri_is = -1.0;
  double ri_sp = -1.0;
  double ri_oc = -1.0;
  double rse_means_pml = -1.0;
  double rse_var_pmml = -1.0;
  int selected_k = 0;
  bool failed = false;
  std::string error;
};

struct BenchOptions {
  FitConfig config;
  int replications = 50;
  bool do_select_k = false;
  int k_range_min = 1;
  int k_range_max = 5;
  bool compute_rse = true;
  std::string checkpoint_dir;  // empty disables checkpoints
  int threads = 0;
};

std::vector<RepMetrics> run_cell(const SimDesign& design, const BenchOptions& options);

struct Aggregate {
  double mean = 0.0;
  double mc_se = 0.0;
  int count = 0;
};

Aggregate aggregate(const std::vector<double>& values);

}  // namespace sced
