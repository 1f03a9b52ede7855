#include <doctest.h>

#include <algorithm>
#include <random>

#include "sced/init.hpp"
#include "sced/rng.hpp"
#include "sced/sim.hpp"

using namespace sced;

TEST_CASE("kbar formula") {
  CHECK(kbar(250) == 6);
  CHECK(kbar(125) == 5);
  CHECK_THROWS_AS(kbar(8), TooFewPoints);
}

TEST_CASE("cluster_means") {
  SUBCASE("global mean for one cluster") {
    Matrix v(3, 2);
    v << 0, 0, 3, 6, 6, 0;
    Dataset d(v);
    const Matrix m = cluster_means(d, Partition({0, 0, 0}, 1));
    CHECK(m(0, 0) == doctest::Approx(3.0));
    CHECK(m(0, 1) == doctest::Approx(2.0));
  }
  SUBCASE("singletons") {
    Matrix v(2, 2);
    v << 0, 0, 2, 4;
    Dataset d(v);
    const Matrix m = cluster_means(d, Partition({0, 1}, 2));
    CHECK(m.row(0).isApprox(v.row(0)));
    CHECK(m.row(1).isApprox(v.row(1)));
  }
  SUBCASE("hand arithmetic") {
    Matrix v(3, 1);
    v << 1, 3, 7;
    Dataset d(v);
    const Matrix m = cluster_means(d, Partition({0, 0, 1}, 2));
    CHECK(m(0, 0) == doctest::Approx(2.0));
    CHECK(m(1, 0) == doctest::Approx(7.0));
  }
}

TEST_CASE("pooled_within_variance") {
  SUBCASE("one cluster 1-d") {
    Matrix v(2, 1);
    v << -1, 1;
    Dataset d(v);
    Partition part({0, 0}, 1);
    const Matrix m = cluster_means(d, part);
    const Matrix var = pooled_within_variance(d, part, m);
    CHECK(var(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("degenerate cases throw") {
    Matrix v(2, 1);
    v << 0, 2;
    Dataset d(v);
    Partition singletons({0, 1}, 2);
    const Matrix m = cluster_means(d, singletons);
    CHECK_THROWS_AS(pooled_within_variance(d, singletons, m), SingularPooledVariance);
  }
}

TEST_CASE("mahalanobis_reassign") {
  SUBCASE("identity metric is Euclidean") {
    Matrix v(4, 1);
    v << 0.2, 4.9, 5.1, 9.9;
    Dataset d(v);
    Matrix means(2, 1);
    means << 0, 10;
    Matrix var = Matrix::Identity(1, 1);
    const Partition part = mahalanobis_reassign(d, means, var);
    CHECK(part.labels == std::vector<int>{0, 0, 1, 1});
  }
  SUBCASE("anisotropic metric overrides Euclidean proximity") {
    // centers (0,0) and (3,1); variance diag(100, 1) discounts the first axis.
    // point (2.4, 0.2):
    //   Mahalanobis: d1 = 2.4^2/100 + 0.04 = 0.0976, d2 = 0.6^2/100 + 0.64 = 0.6436
    //   Euclidean:   d1 = 5.80, d2 = 1.00
    Matrix means(2, 2);
    means << 0, 0, 3, 1;
    Matrix var = Matrix::Zero(2, 2);
    var(0, 0) = 100.0;
    var(1, 1) = 1.0;

    Matrix v1(2, 2);
    v1 << 2.4, 0.2, 0.0, 0.0;
    const double d1 = 2.4 * 2.4 / 100.0 + 0.04;
    const double d2 = 0.6 * 0.6 / 100.0 + 0.64;
    REQUIRE(d1 < d2);  // oracle arithmetic before freezing the expectation
    const double e1 = 2.4 * 2.4 + 0.04;
    const double e2 = 0.6 * 0.6 + 0.64;
    REQUIRE(e2 < e1);  // Euclidean prefers the other center
    CHECK(mahalanobis_reassign(Dataset(v1), means, var).labels[0] == 0);

    // point (2.9, 0.95): both metrics prefer the second center
    Matrix v2(2, 2);
    v2 << 2.9, 0.95, 0.0, 0.0;
    CHECK(mahalanobis_reassign(Dataset(v2), means, var).labels[0] == 1);
  }
  SUBCASE("ties go to the lowest index") {
    Matrix v(2, 1);
    v << 5.0, 0.0;
    Matrix means(2, 1);
    means << 0, 10;
    CHECK(mahalanobis_reassign(Dataset(v), means, Matrix::Identity(1, 1)).labels[0] == 0);
  }
}

TEST_CASE("kmeans") {
  SUBCASE("separated blobs") {
    auto rng = make_rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix v(60, 2);
    std::vector<int> truth(60);
    for (int i = 0; i < 60; ++i) {
      truth[i] = i % 2;
      v(i, 0) = g(rng) + (truth[i] ? 100.0 : 0.0);
      v(i, 1) = g(rng);
    }
    Dataset d(v);
    const Partition part = kmeans(d, 2, 3);
    CHECK(rand_index(part, Partition(truth, 2)) == doctest::Approx(1.0));
  }
  SUBCASE("saturation at l = n") {
    Matrix v(5, 1);
    v << 0, 10, 20, 30, 40;
    Dataset d(v);
    const Partition part = kmeans(d, 5, 1);
    CHECK(part.proper());
    CHECK(within_ss(d, part, cluster_means(d, part)) == doctest::Approx(0.0));
  }
  SUBCASE("1-d enumeration oracle") {
    // enumerate all 2-partitions of {0, 0.1, 10, 10.1}: within-SS is minimized
    // by {{0,0.1},{10,10.1}}
    Matrix v(4, 1);
    v << 0.0, 0.1, 10.0, 10.1;
    Dataset d(v);
    double best = 1e300;
    std::vector<int> best_labels;
    for (int mask = 1; mask < 15; ++mask) {
      std::vector<int> labels(4);
      for (int i = 0; i < 4; ++i) labels[i] = (mask >> i) & 1;
      if (std::count(labels.begin(), labels.end(), 1) == 0 ||
          std::count(labels.begin(), labels.end(), 1) == 4)
        continue;
      Partition cand(labels, 2);
      const double ss = within_ss(d, cand, cluster_means(d, cand));
      if (ss < best) {
        best = ss;
        best_labels = labels;
      }
    }
    const bool oracle_split = best_labels == std::vector<int>{0, 0, 1, 1} ||
                              best_labels == std::vector<int>{1, 1, 0, 0};
    REQUIRE(oracle_split);
    const Partition part = kmeans(d, 2, 5);
    const bool match = part.labels == std::vector<int>{0, 0, 1, 1} ||
                       part.labels == std::vector<int>{1, 1, 0, 0};
    CHECK(match);
  }
}

TEST_CASE("init_refine") {
  SUBCASE("fixpoint on separated blobs and label invariance") {
    auto rng = make_rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix v(200, 2);
    std::vector<int> truth(200);
    for (int i = 0; i < 200; ++i) {
      truth[i] = i < 100 ? 0 : 1;
      v(i, 0) = g(rng) + (truth[i] ? 10.0 : 0.0);
      v(i, 1) = g(rng);
    }
    Dataset d(v);
    const InitResult res = init_refine(d, 2, 7);
    CHECK(rand_index(res.partition, Partition(truth, 2)) == doctest::Approx(1.0));

    // at a fixpoint every point is Mahalanobis-closest to its own mean
    const Partition re = mahalanobis_reassign(d, res.means, res.pooled_var);
    CHECK(re.labels == res.partition.labels);

    // within_ss recomputable from (means, partition)
    CHECK(res.within_ss ==
          doctest::Approx(within_ss(d, res.partition, res.means)).epsilon(1e-8));

    // label permutation leaves the summary statistics unchanged
    std::vector<int> flipped(res.partition.labels);
    for (int& lab : flipped) lab = 1 - lab;
    Partition perm(flipped, 2);
    const Matrix m2 = cluster_means(d, perm);
    CHECK(within_ss(d, perm, m2) == doctest::Approx(res.within_ss));
    CHECK((pooled_within_variance(d, perm, m2) - res.pooled_var).cwiseAbs().maxCoeff() <
          1e-10);
  }
}
