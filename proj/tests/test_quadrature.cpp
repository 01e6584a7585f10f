#include <doctest.h>

#include <cmath>

#include "nlform/quadrature.hpp"

using nlform::gauss_legendre_composite;
using nlform::integrate;
using nlform::integrate_to_inf;

TEST_CASE("polynomial integral is exact") {
  const auto q = integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-12);
  CHECK(q.converged);
  CHECK(q.value == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("gaussian mass on a wide interval") {
  const auto q = integrate(
      [](double x) { return std::exp(-0.5 * x * x) / 2.5066282746310005024; }, -10.0, 10.0, 1e-10);
  CHECK(q.converged);
  CHECK(q.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("integrable endpoint spike converges") {
  // int_delta^1 t^-1.5 dt = 2(delta^-0.5 - 1)
  const double delta = 1e-4;
  const auto q = integrate([](double t) { return std::pow(t, -1.5); }, delta, 1.0, 1e-8);
  CHECK(q.converged);
  CHECK(q.value == doctest::Approx(2.0 * (std::pow(delta, -0.5) - 1.0)).epsilon(1e-9));
}

TEST_CASE("semi-infinite map handles exponential tails") {
  const auto q = integrate_to_inf([](double t) { return std::exp(-t); }, 0.0, 1e-10);
  CHECK(q.converged);
  CHECK(q.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("composite gauss-legendre refines to the smooth answer") {
  auto f = [](double x) { return std::cos(3.0 * x); };
  const double exact = (std::sin(6.0) - std::sin(-6.0)) / 3.0;
  const double v8 = gauss_legendre_composite(f, -2.0, 2.0, 8);
  CHECK(v8 == doctest::Approx(exact).epsilon(1e-12));
}
