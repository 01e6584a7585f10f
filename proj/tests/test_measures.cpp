#include <doctest.h>

#include <cmath>

#include "nlform/hilbert.hpp"
#include "nlform/measures.hpp"
#include "nlform/stats.hpp"

using namespace nlform;
using namespace nlform::meas;

namespace {

double grid_mass(const Conditional1D& c) {
  const auto& g = c.as_grid();
  const double dx = (g.hi - g.lo) / static_cast<double>(g.pdf.size() - 1);
  double m = 0.0;
  for (std::size_t j = 0; j + 1 < g.pdf.size(); ++j) m += 0.5 * (g.pdf[j] + g.pdf[j + 1]) * dx;
  return m;
}

}  // namespace

TEST_CASE("conditional representations normalize and sample inside support") {
  const Conditional1D g = Conditional1D::gaussian(0.5, 2.0);
  CHECK(g.mean() == 0.5);
  CHECK(g.variance() == 2.0);

  const Conditional1D u = Conditional1D::grid(0.0, 1.0, {1.0, 1.0});
  CHECK(grid_mass(u) == doctest::Approx(1.0).epsilon(1e-12));
  RngStream rng = RngStream::root(2);
  for (int i = 0; i < 2000; ++i) {
    const double y = u.sample(rng);
    CHECK(y >= 0.0);
    CHECK(y <= 1.0);
  }
  CHECK(u.mean() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(u.variance() == doctest::Approx(1.0 / 12.0).epsilon(1e-10));

  const Conditional1D a = Conditional1D::atoms({-1.0, 0.0, 1.0}, {1.0, 1.0, 2.0});
  CHECK(a.mean() == doctest::Approx(0.25));
  CHECK_THROWS_AS(a.density(0.0), Unsupported);
}

TEST_CASE("gaussian density bounds") {
  const Conditional1D g = Conditional1D::gaussian(0.0, 1.0);
  CHECK(g.bound_on(-1.0, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  CHECK(g.bound_on(2.0, 3.0) == doctest::Approx(g.density(2.0)).epsilon(1e-12));
  // sup over a subinterval never exceeds the sup over a containing one
  CHECK(g.bound_on(0.2, 0.4) <= g.bound_on(0.0, 1.0));
  CHECK(g.bound_on(2.0, 2.5) <= g.bound_on(2.0, 3.0));
}

TEST_CASE("product model: marginals, sampling, closed forms") {
  const ProductMeasure m = ProductMeasure::standard_normal(3);
  const Conditional1D c0 = m.conditional(0, std::vector<double>{0.0, 9.0, -4.0});
  CHECK(c0.is_gaussian());
  CHECK(c0.mean() == 0.0);  // independent of the rest

  auto sampler = m.sampler(RngStream::root(5));
  RunningStat s;
  for (int i = 0; i < 100000; ++i) s.add(sampler->draw()[0]);
  CHECK(std::fabs(s.mean()) <= 3.0 * s.stderr_mean());

  const Estimate tail = estimate_tail(m, 0, 1.959964, 10, 1);
  CHECK(tail.exact);
  CHECK(tail.stderr_ == 0.0);
  CHECK(tail.value == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(estimate_tail(m, 0, 0.0, 10, 1).value == 1.0);
  CHECK(estimate_tail(m, 0, 40.0, 10, 1).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(moment2(m, 1, 10, 1).value == doctest::Approx(1.0));
}

TEST_CASE("uniform marginal closed forms") {
  const ProductMeasure m(
      std::vector<ProductMeasure::Marginal>{ProductMeasure::UniformMarginal{0.0, 1.0}});
  CHECK(moment2(m, 0, 10, 1).value == doctest::Approx(1.0 / 3.0));
  CHECK(estimate_tail(m, 0, 0.5, 10, 1).value == doctest::Approx(0.5));
}

TEST_CASE("correlated gaussian conditional matches bivariate conditioning") {
  const double rho = 0.6;
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, rho, rho, 1.0;
  const CorrelatedGaussian m(cov);
  const Conditional1D c = m.conditional(0, std::vector<double>{0.0, 1.0});
  CHECK(c.mean() == doctest::Approx(rho).epsilon(1e-12));
  CHECK(c.variance() == doctest::Approx(1.0 - rho * rho).epsilon(1e-12));

  // Monte-Carlo rejection cross-check: condition on |x_2 - 1| < 0.01.
  auto sampler = m.sampler(RngStream::root(6));
  RunningStat kept;
  for (int i = 0; i < 400000; ++i) {
    const Point x = sampler->draw();
    if (std::fabs(x[1] - 1.0) < 0.01) kept.add(x[0]);
  }
  REQUIRE(kept.n() > 200);
  CHECK(std::fabs(kept.mean() - rho) <= 3.0 * kept.stderr_mean() + 0.01);
}

TEST_CASE("correlated gaussian sample covariance reproduces the matrix") {
  Eigen::MatrixXd cov(3, 3);
  cov << 2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 1.5;
  const CorrelatedGaussian m(cov);
  auto sampler = m.sampler(RngStream::root(8));
  const long n = 200000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (long s = 0; s < n; ++s) {
    const Point x = sampler->draw();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) acc(i, j) += x[i] * x[j];
  }
  acc /= static_cast<double>(n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      // Var(x_i x_j) <= E x_i^2 x_j^2 <= 3 C_ii C_jj by Wick.
      const double se = std::sqrt(3.0 * cov(i, i) * cov(j, j) / static_cast<double>(n));
      CHECK(std::fabs(acc(i, j) - cov(i, j)) <= 4.0 * se);
    }
}

TEST_CASE("correlated gaussian rejects bad covariance") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.2, -0.2, 1.0;
  CHECK_THROWS_AS(CorrelatedGaussian{asym}, InvalidInput);
  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(CorrelatedGaussian{indef}, InvalidInput);
}

TEST_CASE("discrete joint model: conditionals, tails and sampling") {
  // Two coordinates, three atoms each, non-product joint weights.
  std::vector<double> w(9);
  for (int i = 0; i < 9; ++i) w[static_cast<std::size_t>(i)] = 1.0 + i;
  const DiscreteMeasure m({{-1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}}, w);
  CHECK(m.n_states() == 9);

  // Conditional of coordinate 0 given x_1 = 0 (middle column): weights at
  // flat indices {1, 4, 7} -> masses {2, 5, 8}/15.
  const Conditional1D c = m.conditional(0, std::vector<double>{0.0, 0.0});
  const auto& atoms = c.as_atoms();
  CHECK(atoms.mass[0] == doctest::Approx(2.0 / 15.0));
  CHECK(atoms.mass[1] == doctest::Approx(5.0 / 15.0));
  CHECK(atoms.mass[2] == doctest::Approx(8.0 / 15.0));

  const double total = 45.0;  // sum 1..9
  CHECK(estimate_tail(m, 1, 0.5, 10, 1).value ==
        doctest::Approx((1.0 + 2.0 + 3.0 + 7.0 + 8.0 + 9.0) / total));
  CHECK(moment2(m, 0, 10, 1).value ==
        doctest::Approx((1 + 2 + 3 + 7 + 8 + 9) / total));

  auto sampler = m.sampler(RngStream::root(4));
  std::vector<double> freq(9, 0.0);
  const long n = 90000;
  for (long s = 0; s < n; ++s) {
    const Point x = sampler->draw();
    const int i = m.atom_index(0, x[0]), j = m.atom_index(1, x[1]);
    freq[static_cast<std::size_t>(3 * i + j)] += 1.0;
  }
  for (int k = 0; k < 9; ++k) {
    const double p = (k + 1.0) / total;
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
    CHECK(std::fabs(freq[static_cast<std::size_t>(k)] / static_cast<double>(n) - p) <= 4.0 * se);
  }
}

TEST_CASE("phi4 action matches hand enumeration on the 2-cycle") {
  Phi4Params p;
  p.d = 1;
  p.L = 2;
  p.eps_lat = 1.0;
  p.m0_sq = 1.0;
  p.lambda = 0.0;
  p.a_eps = 1.0;
  CHECK(phi4_action(p, std::vector<double>{0.0, 0.0}) == 0.0);
  CHECK(phi4_action(p, std::vector<double>{1.0, -1.0}) == doctest::Approx(5.0));
  p.lambda = 1.0;
  CHECK(phi4_action(p, std::vector<double>{1.0, -1.0}) == doctest::Approx(6.0));
}

TEST_CASE("phi4 conditional at lambda=0 completes the square") {
  Phi4Params p;
  p.d = 1;
  p.L = 4;
  p.eps_lat = 1.0;
  p.m0_sq = 0.7;  // a_eps defaults to m0^2
  p.lambda = 0.0;
  const LatticePhi4 m(p);
  const std::vector<double> x = {0.0, 0.8, -0.3, 0.5};
  const Conditional1D c = m.conditional(0, x);
  REQUIRE(c.is_grid());
  CHECK(grid_mass(c) == doctest::Approx(1.0).epsilon(1e-8));
  const double nbr = x[1] + x[3];
  const double mean = nbr / (2.0 + 0.7);
  const double var = 1.0 / (2.0 + 0.7);
  CHECK(c.mean() == doctest::Approx(mean).epsilon(1e-5));
  CHECK(c.variance() == doctest::Approx(var).epsilon(1e-4));
}

TEST_CASE("phi4 at lambda=0 reproduces the lattice propagator") {
  Phi4Params p;
  p.d = 1;
  p.L = 16;
  p.eps_lat = 1.0;
  p.m0_sq = 1.0;
  p.lambda = 0.0;
  p.burnin_sweeps = 400;
  p.thinning = 4;
  const LatticePhi4 m(p);
  auto sampler = m.sampler(RngStream::root(10));

  const long n = 6000;
  BatchTable table(3, 50);
  for (long s = 0; s < n; ++s) {
    const Point x = sampler->draw();
    const double v[3] = {x[0] * x[0], x[0] * x[1], x[0] * x[2]};
    table.add(v);
  }
  const auto mean = table.mean();
  for (int sep = 0; sep < 3; ++sep) {
    const double xx = sep;
    const double want = hilb::lattice_propagator(1, 1.0, 1.0, std::span<const double>(&xx, 1));
    double grad[3] = {0, 0, 0};
    grad[sep] = 1.0;
    const double se = table.stderr_linear(grad);
    CHECK(std::fabs(mean[static_cast<std::size_t>(sep)] - want) <= 3.5 * se);
  }

  // Second moment estimator route: E|X_i|^2 -> D(0).
  const double zero = 0.0;
  const Estimate m2 = moment2(m, 3, 4000, 77);
  CHECK(std::fabs(m2.value - hilb::lattice_propagator(1, 1.0, 1.0,
                                                      std::span<const double>(&zero, 1))) <=
        3.0 * m2.stderr_);
}

TEST_CASE("single-site conditional resampling preserves the law") {
  // Resampling one coordinate from its full conditional must leave the
  // joint law invariant (the Gibbs kernel fixes mu).
  Phi4Params p;
  p.d = 1;
  p.L = 6;
  p.m0_sq = 1.0;
  p.lambda = 0.3;
  p.burnin_sweeps = 300;
  p.thinning = 3;
  const LatticePhi4 m(p);
  auto sampler = m.sampler(RngStream::root(11));
  RngStream resample = RngStream::root(12);

  BatchTable before(2, 40), after(2, 40);
  const long n = 5000;
  for (long s = 0; s < n; ++s) {
    Point x = sampler->draw();
    const double b[2] = {x[2], x[2] * x[2]};
    before.add(b);
    x[2] = m.conditional(2, x).sample(resample);
    const double a[2] = {x[2], x[2] * x[2]};
    after.add(a);
  }
  const auto mb = before.mean(), ma = after.mean();
  const double g0[2] = {1, 0}, g1[2] = {0, 1};
  CHECK(std::fabs(mb[0] - ma[0]) <=
        3.0 * std::hypot(before.stderr_linear(g0), after.stderr_linear(g0)));
  CHECK(std::fabs(mb[1] - ma[1]) <=
        3.0 * std::hypot(before.stderr_linear(g1), after.stderr_linear(g1)));
}

TEST_CASE("chebyshev coherence between tails and second moments") {
  const ProductMeasure m = ProductMeasure::standard_normal(2);
  for (double t : {0.5, 1.0, 2.0}) {
    const Estimate tail = estimate_tail(m, 0, t, 10, 1);
    const Estimate m2 = moment2(m, 0, 10, 1);
    CHECK(tail.value <= m2.value / (t * t) + 3.0 * (tail.stderr_ + m2.stderr_));
  }
}

TEST_CASE("cond_density_bound rejects atoms") {
  const DiscreteMeasure m = DiscreteMeasure::product({{0.0, 1.0}}, {{1.0, 1.0}});
  CHECK_THROWS_AS(cond_density_bound(m, 0, std::vector<double>{0.0}, -1.0, 1.0), Unsupported);
}

TEST_CASE("estimators validate their inputs") {
  const ProductMeasure m = ProductMeasure::standard_normal(1);
  CHECK_THROWS_AS(estimate_tail(m, 0, -1.0, 10, 1), InvalidInput);
  Phi4Params p;
  const LatticePhi4 phi(p);
  CHECK_THROWS_AS(estimate_tail(phi, 0, 1.0, 0, 1), InvalidInput);
}
