#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "sced/density.hpp"
#include "sced/rng.hpp"

using namespace sced;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int j = 1; j < panels; ++j) s += (j % 2 == 1 ? 4.0 : 2.0) * f(a + j * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("biweight kernel properties") {
  CHECK(kernel_biweight(0.0) == doctest::Approx(0.9375));
  CHECK(kernel_biweight(1.0) == 0.0);
  CHECK(kernel_biweight(-1.2) == 0.0);
  // unit mass
  CHECK(simpson([](double u) { return kernel_biweight(u); }, -1, 1, 512) ==
        doctest::Approx(1.0).epsilon(1e-10));
  // integral of the second derivative vanishes: K''(u) = (15/16)(-4 + 12u^2)
  CHECK(simpson([](double u) { return 0.9375 * (-4.0 + 12.0 * u * u); }, -1, 1, 512) ==
        doctest::Approx(0.0).epsilon(1e-10));
  // analytic antiderivative check: K'(1) - K'(-1) = 0
  auto kprime = [](double u) { return 0.9375 * (-4.0 * u + 4.0 * u * u * u); };
  CHECK(kprime(1.0) - kprime(-1.0) == doctest::Approx(0.0));
}

TEST_CASE("boundary kernel") {
  CHECK(kernel_boundary(0.0, 0.0, 1.0) == doctest::Approx(1.875));
  CHECK(kernel_boundary(0.5, 0.5, 1.0) == doctest::Approx(0.9375));
  CHECK(kernel_boundary(3.0, 1.0, 1.0) == 0.0);
  // reflection normalization over [0, inf)
  for (double v : {0.0, 0.3, 0.9, 2.5}) {
    const double mass = simpson([&](double y) { return kernel_boundary(v, y, 1.0); }, 0.0,
                                v + 2.0, 2048);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("transform_y") {
  TransformSpec t2{1.0, 2};
  Vector x(2), mu(2);
  x << 1, 2;
  mu << 1, 2;
  CHECK(transform_y(x, mu, Matrix::Identity(2, 2), t2) == doctest::Approx(0.0));
  x << 1.0 + std::sqrt(3.0), 2.0;
  CHECK(transform_y(x, mu, Matrix::Identity(2, 2), t2) == doctest::Approx(3.0));

  TransformSpec t4{1.0, 4};
  // q = 4 -> -1 + (1 + 4^2)^{1/2}
  Vector x4(4), mu4(4);
  x4 << 2, 0, 0, 0;
  mu4 << 0, 0, 0, 0;
  CHECK(transform_y(x4, mu4, Matrix::Identity(4, 4), t4) ==
        doctest::Approx(std::sqrt(17.0) - 1.0));

  // strictly increasing in the quadratic form
  double prev = -1.0;
  for (double q : {0.0, 0.5, 1.0, 4.0, 25.0}) {
    Vector xx(4);
    xx << std::sqrt(q), 0, 0, 0;
    const double y = transform_y(xx, mu4, Matrix::Identity(4, 4), t4);
    CHECK(y > prev);
    prev = y;
  }
}

TEST_CASE("ghat basics") {
  TransformSpec tf{1.0, 2};
  SUBCASE("single point at the boundary") {
    Vector y(1);
    y << 0.0;
    GeneratorEstimate g(y, 1.0, tf);
    CHECK(g(0.0) == doctest::Approx(1.875));
  }
  SUBCASE("zero beyond the support") {
    Vector y(3);
    y << 0.5, 1.0, 2.0;
    GeneratorEstimate g(y, 1.0, tf);
    CHECK(g(3.5) == 0.0);
  }
  SUBCASE("nonnegative and integrates to one") {
    auto rng = make_rng(9);
    std::exponential_distribution<double> ex(0.5);
    for (int trial = 0; trial < 10; ++trial) {
      Vector y(80);
      for (int i = 0; i < 80; ++i) y[i] = ex(rng);
      const double h = 0.4;
      GeneratorEstimate g(y, h, tf);
      const double hi = y.maxCoeff() + h;
      const double mass = simpson([&](double yy) { return g(yy); }, 0.0, hi, 4096);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
      for (double yy = 0.0; yy < hi; yy += hi / 37.0) CHECK(g(yy) >= 0.0);
    }
  }
  SUBCASE("leave-one-out subtraction identity") {
    Vector y(12);
    for (int i = 0; i < 12; ++i) y[i] = 0.3 * i;
    GeneratorEstimate g(y, 1.0, tf);
    // brute-force LOO
    for (int i = 0; i < 12; ++i) {
      Vector rest(11);
      int pos = 0;
      for (int j = 0; j < 12; ++j)
        if (j != i) rest[pos++] = y[j];
      GeneratorEstimate gi(rest, 1.0, tf);
      const double at = 0.3 * i;
      CHECK(g.loo(at, y[i]) == doctest::Approx(gi(at)).epsilon(1e-12));
    }
  }
}

TEST_CASE("plugin weight and density at p = 2") {
  TransformSpec tf{1.0, 2};
  // w(y) = 1 / (pi sqrt(det)) independent of y
  CHECK(plugin_weight(0.7, 2, 1.0, tf) == doctest::Approx(1.0 / M_PI));
  CHECK(plugin_weight(3.0, 2, 1.0, tf) == doctest::Approx(1.0 / M_PI));
  // scaling the scatter by 4 at p = 2 divides w by 2
  CHECK(plugin_weight(0.7, 2, 16.0, tf) == doctest::Approx(0.25 / M_PI));

  // with the analytic normal generator g(y) = exp(-y/2)/2 the plug-in density
  // is the bivariate standard normal at quadratic form y
  const double y = 1.3;
  const double f = (1.0 / M_PI) * 0.5 * std::exp(-y / 2.0);
  CHECK(f == doctest::Approx(std::exp(-y / 2.0) / (2.0 * M_PI)));
}

TEST_CASE("plugin weight guards p > 2 near the center") {
  TransformSpec tf{1.0, 6};
  CHECK_THROWS_AS(plugin_weight(0.0, 6, 1.0, tf), WeightOverflow);
  CHECK(plugin_weight(0.5, 6, 1.0, tf) > 0.0);
}

TEST_CASE("cv_bandwidth") {
  TransformSpec tf{1.0, 2};
  auto rng = make_rng(123);
  SUBCASE("inflation exponent") {
    std::chi_squared_distribution<double> chi2(2.0);
    Vector y(500);
    for (int i = 0; i < 500; ++i) y[i] = chi2(rng);
    const BandwidthSelection sel = cv_bandwidth(y, 40);
    CHECK(sel.h_hat / sel.h_tilde == doctest::Approx(std::pow(500.0, 3.0 / 80.0)));
    CHECK(sel.h_hat / sel.h_tilde == doctest::Approx(1.2623).epsilon(1e-3));
    // minimizer attains the minimal CV value on the grid
    double best = 1e300;
    for (const auto& [h, cv] : sel.cv_curve) best = std::min(best, cv);
    bool found = false;
    for (const auto& [h, cv] : sel.cv_curve)
      if (h == sel.h_tilde) {
        found = true;
        CHECK(cv == doctest::Approx(best));
      }
    CHECK(found);
  }
  SUBCASE("CV choice beats far-off bandwidths against the analytic generator") {
    std::chi_squared_distribution<double> chi2(2.0);
    const int n = 1000;
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = chi2(rng);
    const BandwidthSelection sel = cv_bandwidth(y, 40);
    auto ise = [&](double h) {
      GeneratorEstimate g(y, h, tf);
      return simpson(
          [&](double yy) {
            const double diff = g(yy) - 0.5 * std::exp(-yy / 2.0);
            return diff * diff;
          },
          0.0, y.maxCoeff() + h, 2048);
    };
    const double at_cv = ise(sel.h_hat);
    CHECK(at_cv < ise(4.0 * sel.h_hat));
    CHECK(at_cv < ise(sel.h_hat / 4.0));
  }
  SUBCASE("flat sample is rejected") {
    Vector y = Vector::Zero(50);
    CHECK_THROWS_AS(cv_bandwidth(y, 40), ScedError);
  }
}
