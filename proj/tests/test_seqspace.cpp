#include <doctest.h>

#include <cmath>
#include <limits>

#include "nlform/rng.hpp"
#include "nlform/seqspace.hpp"

using namespace nlform;
using namespace nlform::seq;

TEST_CASE("lp norm evaluates the weighted sum") {
  const SpaceSpec s = SpaceSpec::lp(2.0, {1.0, 1.0});
  CHECK(norm(s, std::vector<double>{3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(norm(s, std::vector<double>{0.0, 0.0}) == 0.0);
}

TEST_CASE("linf norm takes the weighted sup") {
  const SpaceSpec s = SpaceSpec::linf({1.0, 0.5});
  CHECK(norm(s, std::vector<double>{1.0, 4.0}) == doctest::Approx(2.0));
}

TEST_CASE("norms reject NaN input") {
  const SpaceSpec s = SpaceSpec::lp(2.0, {1.0});
  CHECK_THROWS_AS(norm(s, std::vector<double>{std::numeric_limits<double>::quiet_NaN()}),
                  InvalidInput);
}

TEST_CASE("norm homogeneity") {
  RngStream rng = RngStream::root(3);
  const SpaceSpec lp = SpaceSpec::lp(1.5, {1.0, 0.3, 2.0});
  const SpaceSpec li = SpaceSpec::linf({1.0, 0.3, 2.0});
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double c = rng.uniform(-2.5, 2.5);
    std::vector<double> cx = x;
    for (auto& v : cx) v *= c;
    CHECK(norm(lp, cx) == doctest::Approx(std::fabs(c) * norm(lp, x)).epsilon(1e-12));
    CHECK(norm(li, cx) == doctest::Approx(std::fabs(c) * norm(li, x)).epsilon(1e-12));
  }
}

TEST_CASE("product metric basics") {
  const std::vector<double> zero3 = {0.0, 0.0, 0.0};
  CHECK(metric_rn(zero3, zero3) == 0.0);
  // A single unit first coordinate: all partial norms are 1, the folded
  // weights sum to one, so d = 1/2 exactly.
  CHECK(metric_rn(std::vector<double>{1.0, 0.0, 0.0}, zero3) ==
        doctest::Approx(0.5).epsilon(1e-15));
  // The c -> infinity limit approaches 1 monotonically.
  double prev = 0.0;
  for (double c : {10.0, 100.0, 1000.0}) {
    const double d = metric_rn(std::vector<double>{c, 0.0, 0.0}, zero3);
    CHECK(d == doctest::Approx(c / (1.0 + c)).epsilon(1e-14));
    CHECK(d > prev);
    CHECK(d < 1.0);
    prev = d;
  }
}

TEST_CASE("product metric is a bounded metric") {
  RngStream rng = RngStream::root(5);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> x(4), y(4), z(4);
    for (int i = 0; i < 4; ++i) {
      x[i] = rng.uniform(-5, 5);
      y[i] = rng.uniform(-5, 5);
      z[i] = rng.uniform(-5, 5);
    }
    const double dxy = metric_rn(x, y);
    CHECK(dxy == metric_rn(y, x));  // symmetric, exactly
    CHECK(dxy < 1.0);
    CHECK(dxy <= metric_rn(x, z) + metric_rn(z, y) + 1e-15);
  }
}

TEST_CASE("box membership allows equality") {
  const int n = 6;
  std::vector<double> beta(n, 1.0), gamma(n);
  for (int i = 0; i < n; ++i) gamma[i] = (i + 1.0) * (i + 1.0);
  const SpaceSpec s = SpaceSpec::lp(2.0, beta);
  const BoxSpec box = BoxSpec::make(s, 1.0, gamma);

  std::vector<double> zero(n, 0.0), edge(n), outside(n, 0.0);
  for (int i = 0; i < n; ++i) edge[i] = 1.0 / (i + 1.0);  // beta^(1/2)|x| = M gamma^(-1/2)
  outside[0] = 2.0;
  CHECK(box_contains(box, zero));
  CHECK(box_contains(box, edge));
  CHECK_FALSE(box_contains(box, outside));
}

TEST_CASE("epsilon net reproduces the hand-computed single-coordinate grid") {
  const SpaceSpec s = SpaceSpec::lp(2.0, {1.0});
  const BoxSpec box = BoxSpec::make(s, 1.0, {1.0});
  const auto net = epsilon_net(s, box, 0.75);
  // eps' = (eps/3) * 1 = 0.25, indices j = 0..floor(2/0.25)+1 = 0..9.
  REQUIRE(net.size() == 10);
  for (std::size_t j = 0; j < net.size(); ++j) {
    const double expect = std::min(-1.0 + 0.25 * static_cast<double>(j), 1.0);
    CHECK(net[j][0] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("epsilon net covers the box") {
  const int n = 3;
  std::vector<double> beta = {1.0, 0.5, 2.0};
  std::vector<double> gamma = {1.0, 4.0, 9.0};
  const SpaceSpec s = SpaceSpec::lp(2.0, beta);
  const BoxSpec box = BoxSpec::make(s, 1.0, gamma);

  for (double eps : {1.2, 0.6}) {
    const auto net = epsilon_net(s, box, eps);
    RngStream rng = RngStream::root(99);
    for (int t = 0; t < 2000; ++t) {
      std::vector<double> x(n);
      for (int i = 0; i < n; ++i) x[i] = rng.uniform(-box.radius(i), box.radius(i));
      REQUIRE(box_contains(box, x));
      double best = 1e300;
      std::vector<double> diff(n);
      for (const auto& p : net) {
        for (int i = 0; i < n; ++i) diff[i] = x[i] - p[i];
        best = std::min(best, norm(s, diff));
      }
      CHECK(best < eps);
    }
  }
}

TEST_CASE("huge eps still yields a covering net") {
  const SpaceSpec s = SpaceSpec::lp(2.0, {1.0, 1.0});
  const BoxSpec box = BoxSpec::make(s, 1.0, {1.0, 1.0});
  const auto net = epsilon_net(s, box, 50.0);
  CHECK(net.size() >= 1);
  RngStream rng = RngStream::root(7);
  std::vector<double> diff(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    double best = 1e300;
    for (const auto& p : net) {
      for (int i = 0; i < 2; ++i) diff[i] = x[i] - p[i];
      best = std::min(best, norm(s, diff));
    }
    CHECK(best < 50.0);
  }
}

TEST_CASE("epsilon net rejects bad inputs and oversized grids") {
  const SpaceSpec s = SpaceSpec::lp(2.0, std::vector<double>(8, 1.0));
  const BoxSpec box = BoxSpec::make(s, 1.0, std::vector<double>(8, 1.0));
  CHECK_THROWS_AS(epsilon_net(s, box, -1.0), InvalidInput);
  CHECK_THROWS_AS(epsilon_net(s, box, 0.05, 1000), ResourceLimit);
}

TEST_CASE("scaled cutoff plateau, support and Lipschitz bound") {
  const SpaceSpec s = SpaceSpec::lp(2.0, {1.0, 1.0});
  const BoxSpec box = BoxSpec::make(s, 1.0, {1.0, 1.0});  // a = 1
  const CutoffProfile eta;
  CHECK(eta_scaled(eta, box, 0, 0.5) == 1.0);
  CHECK(eta_scaled(eta, box, 0, 4.0) == 0.0);
  CHECK(eta_scaled(eta, box, 0, -1.0) == 1.0);

  RngStream rng = RngStream::root(21);
  for (int t = 0; t < 5000; ++t) {
    const double x = rng.uniform(-4, 4), y = rng.uniform(-4, 4);
    CHECK(std::fabs(eta(x) - eta(y)) <= std::fabs(x - y) + 1e-15);
  }
}

TEST_CASE("cutoff sandwich around the compact boxes") {
  const int n = 4;
  std::vector<double> beta = {1.0, 2.0, 0.5, 1.0};
  std::vector<double> gamma = {1.0, 2.0, 3.0, 4.0};
  const SpaceSpec s = SpaceSpec::lp(2.0, beta);
  const BoxSpec box = BoxSpec::make(s, 1.5, gamma);
  const BoxSpec box3 = BoxSpec::make(s, 3.0 * 1.5, gamma);
  const CutoffProfile eta;
  RngStream rng = RngStream::root(31);
  for (int t = 0; t < 3000; ++t) {
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(-3.0 * box.radius(i), 3.0 * box.radius(i));
    double prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= eta_scaled(eta, box, i, x[i]);
    if (box_contains(box, x)) CHECK(prod == 1.0);
    if (prod != 0.0) CHECK(box_contains(box3, x));
  }
}

TEST_CASE("cylinder functions evaluate and replace coordinates") {
  const CylinderFunction f = CylinderFunction::coordinate(1);
  std::vector<double> x = {3.0, 7.0, 9.0};
  CHECK(f(x) == 7.0);
  CHECK(f.eval_replaced(x, 1, -2.0) == -2.0);
  CHECK(f.eval_replaced(x, 0, 100.0) == 7.0);
  CHECK(x[1] == 7.0);  // untouched

  const CylinderFunction c = CylinderFunction::constant(2.5);
  CHECK(c(std::vector<double>{}) == 2.5);
  CHECK(c.arity() == 0);
}

TEST_CASE("build_fMk attaches cutoffs and respects the plateau assumption") {
  std::vector<double> beta(5, 1.0), gamma(5, 1.0);
  const SpaceSpec s = SpaceSpec::lp(2.0, beta);
  const BoxSpec big = BoxSpec::make(s, 4.0, gamma);    // a_i = 4 >= support radius 3
  const BoxSpec small = BoxSpec::make(s, 1.0, gamma);  // a_i = 1 < 3: precondition fails

  const CylinderFunction f = CylinderFunction::bump(0, 0.0, 1.0);  // support radius 3
  CHECK_THROWS_AS(build_fMk(f, small, 3), PreconditionError);

  const CylinderFunction same = build_fMk(f, big, 1);
  const CylinderFunction fmk = build_fMk(f, big, 3);
  RngStream rng = RngStream::root(41);
  std::vector<double> x(5);
  for (int t = 0; t < 1000; ++t) {
    for (auto& v : x) v = rng.uniform(-15, 15);
    CHECK(same(x) == f(x));
    // Outside the outer radius of an attached cutoff the product vanishes.
    std::vector<double> far = x;
    far[1] = 13.0;  // b = 3a = 12
    CHECK(fmk(far) == 0.0);
    // Difference bound in the base coordinates: attaching cutoffs can only
    // shrink increments.
    const double y = rng.uniform(-4, 4), yp = rng.uniform(-4, 4);
    const double dfmk = fmk.eval_replaced(x, 0, y) - fmk.eval_replaced(x, 0, yp);
    const double du = f.eval_replaced(x, 0, y) - f.eval_replaced(x, 0, yp);
    CHECK(dfmk * dfmk <= du * du + 1e-15);
  }
}

TEST_CASE("build_fMk rejects undeclared support") {
  const CylinderFunction f = CylinderFunction::coordinate(0);  // no support box
  const SpaceSpec s = SpaceSpec::lp(2.0, {1.0, 1.0});
  const BoxSpec box = BoxSpec::make(s, 10.0, {1.0, 1.0});
  CHECK_THROWS_AS(build_fMk(f, box, 2), PreconditionError);
}
