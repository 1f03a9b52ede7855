#include "sced/init.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "sced/rng.hpp"

namespace sced {

int kbar(int n) {
  if (n < 2) throw TooFewPoints();
  const int k = static_cast<int>(std::floor(std::sqrt(double(n) / std::log(double(n)))));
  if (k < 2) throw TooFewPoints();
  return k;
}

double within_ss(const Dataset& data, const Partition& part, const Matrix& means) {
  double ss = 0.0;
  for (int i = 0; i < part.n(); ++i)
    ss += (data.values.row(i) - means.row(part.labels[i])).squaredNorm();
  return 0.5 * ss;
}

Matrix cluster_means(const Dataset& data, const Partition& part) {
  const int p = static_cast<int>(data.p());
  Matrix means = Matrix::Zero(part.k, p);
  std::vector<int> sizes(part.k, 0);
  for (int i = 0; i < part.n(); ++i) {
    means.row(part.labels[i]) += data.values.row(i);
    ++sizes[part.labels[i]];
  }
  for (int c = 0; c < part.k; ++c) {
    if (sizes[c] == 0) throw EmptyCluster(c);
    means.row(c) /= double(sizes[c]);
  }
  return means;
}

Matrix pooled_within_variance(const Dataset& data, const Partition& part, const Matrix& means) {
  const int p = static_cast<int>(data.p());
  Matrix var = Matrix::Zero(p, p);
  for (int i = 0; i < part.n(); ++i) {
    const Vector r = (data.values.row(i) - means.row(part.labels[i])).transpose();
    var.noalias() += r * r.transpose();
  }
  var /= double(part.n());
  Eigen::SelfAdjointEigenSolver<Matrix> es(var);
  if (es.eigenvalues().minCoeff() <= 1e-12) throw SingularPooledVariance();
  return var;
}

Partition mahalanobis_reassign(const Dataset& data, const Matrix& means,
                               const Matrix& pooled_var) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(pooled_var);
  if (es.eigenvalues().minCoeff() <= 1e-12) throw SingularPooledVariance();
  Eigen::LLT<Matrix> llt(pooled_var);
  const int n = static_cast<int>(data.n());
  const int k = static_cast<int>(means.rows());
  std::vector<int> labels(n, 0);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int c = 0; c < k; ++c) {
      const Vector r = (data.values.row(i) - means.row(c)).transpose();
      const double d = r.dot(llt.solve(r));
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    labels[i] = arg;
  }
  return Partition(std::move(labels), k);
}

namespace {

// distance-weighted seeding, then Lloyd to assignment fixpoint
Partition kmeans_once(const Dataset& data, int l, std::mt19937_64& rng, int max_iter) {
  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  std::uniform_int_distribution<int> unif_n(0, n - 1);
  Matrix centers(l, p);
  centers.row(0) = data.values.row(unif_n(rng));
  Vector d2 = (data.values.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < l; ++c) {
    const double total = d2.sum();
    int pick;
    if (total <= 0.0) {
      pick = unif_n(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = data.values.row(pick);
    d2 = d2.cwiseMin((data.values.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < l; ++c) {
        const double d = (data.values.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (labels[i] != arg) {
        labels[i] = arg;
        changed = true;
      }
    }
    std::vector<int> sizes(l, 0);
    for (int lab : labels) ++sizes[lab];
    for (int c = 0; c < l; ++c) {
      if (sizes[c] > 0) continue;
      // reseed an empty cluster with the point farthest from its own center
      double far = -1.0;
      int pick = 0;
      for (int i = 0; i < n; ++i) {
        if (sizes[labels[i]] <= 1) continue;
        const double d = (data.values.row(i) - centers.row(labels[i])).squaredNorm();
        if (d > far) {
          far = d;
          pick = i;
        }
      }
      --sizes[labels[pick]];
      labels[pick] = c;
      ++sizes[c];
      changed = true;
    }
    Matrix next = Matrix::Zero(l, p);
    for (int i = 0; i < n; ++i) next.row(labels[i]) += data.values.row(i);
    for (int c = 0; c < l; ++c) next.row(c) /= double(sizes[c]);
    centers = next;
    if (!changed) break;
  }
  return Partition(std::move(labels), l);
}

}  // namespace

Partition kmeans(const Dataset& data, int l, std::uint64_t seed, int restarts, int max_iter) {
  const int n = static_cast<int>(data.n());
  if (l < 1 || l > n) throw ScedError("kmeans requires 1 <= l <= n");
  Partition best;
  double best_ss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    auto rng = make_rng(task_seed(seed, 0x6b6d, static_cast<std::uint64_t>(r)));
    Partition cand = kmeans_once(data, l, rng, max_iter);
    const double ss = within_ss(data, cand, cluster_means(data, cand));
    if (ss < best_ss) {
      best_ss = ss;
      best = std::move(cand);
    }
  }
  return best;
}

InitResult init_refine(const Dataset& data, int l, std::uint64_t seed, int max_iter,
                       int restarts) {
  InitResult res;
  res.partition = kmeans(data, l, seed, restarts);
  Matrix means = cluster_means(data, res.partition);
  double prev_ss = within_ss(data, res.partition, means);
  Matrix pooled;
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    pooled = pooled_within_variance(data, res.partition, means);
    Partition next = mahalanobis_reassign(data, means, pooled);

    std::vector<int> sizes = next.cluster_sizes();
    Eigen::LLT<Matrix> llt(pooled);
    for (int c = 0; c < l; ++c) {
      if (sizes[c] > 0) continue;
      double far = -1.0;
      int pick = 0;
      for (int i = 0; i < next.n(); ++i) {
        if (sizes[next.labels[i]] <= 1) continue;
        const Vector r = (data.values.row(i) - means.row(next.labels[i])).transpose();
        const double d = r.dot(llt.solve(r));
        if (d > far) {
          far = d;
          pick = i;
        }
      }
      --sizes[next.labels[pick]];
      next.labels[pick] = c;
      ++sizes[c];
    }

    res.sweeps = sweep + 1;
    const bool same = next.labels == res.partition.labels;
    res.partition = std::move(next);
    means = cluster_means(data, res.partition);
    const double ss = within_ss(data, res.partition, means);
    const bool flat = std::abs(ss - prev_ss) <= 1e-10 * (1.0 + std::abs(prev_ss));
    prev_ss = ss;
    if (same || flat) break;
  }
  res.means = means;
  res.pooled_var = pooled_within_variance(data, res.partition, means);
  res.within_ss = prev_ss;
  return res;
}

}  // namespace sced
