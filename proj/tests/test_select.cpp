#include <doctest.h>

#include <cmath>
#include <random>

#include "sced/rng.hpp"
#include "sced/select.hpp"

using namespace sced;

TEST_CASE("spic formula") {
  const int n = 250;
  const int p = 2;
  const double logn = std::log(250.0);
  // hand-evaluated at k = 2, loo = -400
  const double expect = 400.0 / 250.0 + 2.0 * logn / (2.0 * std::pow(250.0, 0.8)) +
                        2.0 * 3.0 * logn / (2.0 * 250.0);
  CHECK(spic(2, -400.0, n, p) == doctest::Approx(expect).epsilon(1e-12));

  // linear in k at fixed fit term
  const double d1 = spic(3, -400.0, n, p) - spic(2, -400.0, n, p);
  const double d2 = spic(4, -400.0, n, p) - spic(3, -400.0, n, p);
  CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
  CHECK(d1 > 0.0);  // penalty grows with k

  // decreasing in the log-likelihood
  CHECK(spic(2, -300.0, n, p) < spic(2, -400.0, n, p));
}

TEST_CASE("adequacy statistic") {
  const int n = 500;
  // equal likelihoods leave only the negative bandwidth-rate term
  CHECK(adequacy_D(-100.0, -100.0, n) ==
        doctest::Approx(-std::log(500.0) / std::pow(500.0, 0.8)).epsilon(1e-12));
  // a sufficiently better semiparametric fit turns the sign positive
  CHECK(adequacy_D(-100.0, -200.0, n) > 0.0);
  CHECK(adequacy_D(-250.0, -100.0, n) < 0.0);
}

TEST_CASE("normal clusterwise log-likelihood") {
  SUBCASE("hand-checked one-cluster 1-d case") {
    Matrix v(4, 1);
    v << -1, 1, -1, 1;
    Dataset d(v);
    // maximum-likelihood pooled variance (divisor n): 1
    const double s2 = 1.0;
    double expect = 0.0;
    for (int i = 0; i < 4; ++i)
      expect += -0.5 * std::log(2.0 * M_PI * s2) - 0.5 * 1.0 / s2;
    CHECK(normal_clusterwise_loglik(d, Partition({0, 0, 0, 0}, 1)) ==
          doctest::Approx(expect).epsilon(1e-10));
  }
  SUBCASE("better-matched partition scores higher") {
    auto rng = make_rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix v(80, 2);
    std::vector<int> truth(80), scrambled(80);
    for (int i = 0; i < 80; ++i) {
      truth[i] = i % 2;
      scrambled[i] = (i / 2) % 2;
      v(i, 0) = g(rng) + 6.0 * truth[i];
      v(i, 1) = g(rng);
    }
    Dataset d(v);
    CHECK(normal_clusterwise_loglik(d, Partition(truth, 2)) >
          normal_clusterwise_loglik(d, Partition(scrambled, 2)));
  }
}

TEST_CASE("select_k") {
  SUBCASE("single candidate") {
    const SpicCurve curve = select_k(250, 2, 1, 1, [](int) {
      return KFitOutcome{-500.0, false, ""};
    });
    CHECK(curve.selected_k == 1);
    CHECK(curve.points.size() == 1);
    CHECK(curve.points[0].spic_value == doctest::Approx(spic(1, -500.0, 250, 2)));
  }
  SUBCASE("criterion minimizer wins") {
    // construct loo values so that k = 3 strictly minimizes the criterion
    auto fit = [](int k) {
      const double loo = (k == 3) ? -100.0 : -400.0;
      return KFitOutcome{loo, false, ""};
    };
    const SpicCurve curve = select_k(250, 2, 1, 5, fit, 2);
    CHECK(curve.selected_k == 3);
    CHECK(curve.points.size() == 5);
  }
  SUBCASE("exact ties resolve to the smallest k") {
    // equalize the criterion across two k by back-solving the penalty gap
    const int n = 250, p = 2;
    const double pen2 = spic(2, 0.0, n, p);
    const double pen3 = spic(3, 0.0, n, p);
    auto fit = [&](int k) {
      // loo chosen so spic(2) == spic(3) exactly
      const double loo = (k == 3) ? -double(n) * (pen2 - pen3) : 0.0;
      return KFitOutcome{loo, false, ""};
    };
    REQUIRE(spic(2, 0.0, n, p) ==
            doctest::Approx(spic(3, -double(n) * (pen2 - pen3), n, p)).epsilon(1e-12));
    const SpicCurve curve = select_k(n, p, 2, 3, fit);
    CHECK(curve.selected_k == 2);
  }
  SUBCASE("failed candidates are excluded but recorded") {
    auto fit = [](int k) {
      if (k == 2) return KFitOutcome{0.0, true, "boom"};
      return KFitOutcome{-300.0 * k, false, ""};
    };
    const SpicCurve curve = select_k(250, 2, 1, 4, fit);
    CHECK(curve.points.size() == 4);
    CHECK(curve.points[1].failed);
    CHECK(curve.points[1].error == "boom");
    CHECK(curve.selected_k != 2);
    CHECK(curve.selected_k == 1);  // smallest k has the best loo here
  }
}
