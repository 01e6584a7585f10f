#include <doctest.h>

#include <cmath>

#include "nlform/process.hpp"
#include "nlform/stats.hpp"

using namespace nlform;
using namespace nlform::proc;
using meas::DiscreteMeasure;
using meas::ProductMeasure;
using seq::CylinderFunction;

namespace {

ProductMeasure uniform01() {
  return ProductMeasure(
      std::vector<ProductMeasure::Marginal>{ProductMeasure::UniformMarginal{0.0, 1.0}});
}

JumpChainConfig config_ad(double alpha, double delta, double horizon) {
  JumpChainConfig c;
  c.alpha = alpha;
  c.delta = delta;
  c.horizon = horizon;
  return c;
}

}  // namespace

TEST_CASE("coordinate rate closed form on the uniform conditional") {
  const ProductMeasure m = uniform01();
  // x = 0.5, alpha = 1, delta = 0.25: 2 int_{0.25}^{0.5} t^-2 dt = 4.
  const double z = coordinate_rate(m, std::vector<double>{0.5}, 0, 1.0, 0.25);
  CHECK(z == doctest::Approx(4.0).epsilon(1e-7));
  // Cutoff beyond the support: no jump region left.
  CHECK(coordinate_rate(m, std::vector<double>{0.5}, 0, 1.0, 0.6) == 0.0);
  // The rate shrinks as the cutoff grows.
  double prev = 1e300;
  for (double d : {0.1, 0.2, 0.3, 0.4}) {
    const double r = coordinate_rate(m, std::vector<double>{0.5}, 0, 1.0, d);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("jump sampling respects the cutoff and symmetry") {
  const ProductMeasure normal = ProductMeasure::standard_normal(1);
  RngStream rng = RngStream::root(3);
  RunningStat disp;
  for (int t = 0; t < 20000; ++t) {
    const double y = sample_jump(normal, std::vector<double>{0.0}, 0, 1.0, 0.3, rng, 512);
    CHECK(std::fabs(y) > 0.3);
    disp.add(y);
  }
  CHECK(std::fabs(disp.mean()) <= 3.0 * disp.stderr_mean());

  const ProductMeasure u = uniform01();
  RunningStat above;
  for (int t = 0; t < 20000; ++t) {
    const double y = sample_jump(u, std::vector<double>{0.5}, 0, 1.0, 0.25, rng, 512);
    CHECK(std::fabs(y - 0.5) > 0.25);
    above.add(y > 0.5 ? 1.0 : 0.0);
  }
  CHECK(std::fabs(above.mean() - 0.5) <= 3.0 * above.stderr_mean());
}

TEST_CASE("frozen chain when the cutoff exceeds every reachable jump") {
  const ProductMeasure u = uniform01();
  const Trajectory t =
      simulate(u, std::vector<double>{0.5}, config_ad(1.0, 5.0, 2.0), RngStream::root(5));
  CHECK(t.events() == 0);
  CHECK(t.absorbed);
  CHECK(t.final_state()[0] == 0.5);

  // Asking for a jump from the same dead region is an error for callers.
  RngStream rng = RngStream::root(6);
  CHECK_THROWS_AS(sample_jump(u, std::vector<double>{0.5}, 0, 1.0, 5.0, rng), NumericalError);
}

TEST_CASE("trajectories advance one coordinate per event with increasing times") {
  const ProductMeasure m = ProductMeasure::standard_normal(2);
  const Trajectory t =
      simulate(m, std::vector<double>{0.1, -0.2}, config_ad(1.0, 0.3, 1.0), RngStream::root(7));
  for (std::size_t k = 1; k < t.times.size(); ++k) CHECK(t.times[k] > t.times[k - 1]);
  for (long e = 0; e < t.events(); ++e) {
    CHECK(t.coords[static_cast<std::size_t>(e)] >= 0);
    CHECK(t.coords[static_cast<std::size_t>(e)] < 2);
    CHECK(std::isfinite(t.values[static_cast<std::size_t>(e)]));
  }
}

TEST_CASE("event budget flags the stop reason") {
  const ProductMeasure m = ProductMeasure::standard_normal(1);
  JumpChainConfig c = config_ad(1.0, 0.05, 1000.0);
  c.max_events = 5;
  const Trajectory t = simulate(m, std::vector<double>{0.0}, c, RngStream::root(9));
  CHECK(t.events() == 5);
  CHECK(t.stop == StopReason::Budget);
}

TEST_CASE("first holding times follow the exponential with the total rate") {
  const DiscreteMeasure m =
      DiscreteMeasure::product({{-1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}}, {{1, 1, 1}, {1, 2, 1}});
  // Mean first event time is 1/R(x0) for frozen rates at the start.
  const std::vector<double> x0 = {0.0, 0.0};
  double total = 0.0;
  for (int i = 0; i < 2; ++i) total += coordinate_rate(m, x0, i, 1.0, 0.5);
  JumpChainConfig c = config_ad(1.0, 0.5, 1e9);
  c.max_events = 1;
  RngStream root = RngStream::root(11);
  RunningStat wait;
  for (int t = 0; t < 20000; ++t) {
    const Trajectory tr = simulate(m, x0, c, root.substream(static_cast<std::uint64_t>(t)));
    REQUIRE(tr.events() == 1);
    wait.add(tr.times[1]);
  }
  CHECK(std::fabs(wait.mean() - 1.0 / total) <= 3.0 * wait.stderr_mean());

  const double p = holding_time_ks_pvalue(m, x0, config_ad(1.0, 0.5, 1.0), 4000, 13);
  CHECK(p > 1e-3);
}

TEST_CASE("reversibility oracle: symmetric single-coordinate model is exact") {
  const DiscreteMeasure m = DiscreteMeasure::product({{-1.0, 0.0, 1.0}}, {{1.0, 1.0, 1.0}});
  const auto rep = reversibility_oracle(m, 1.0, 0.5, 10, 17);
  CHECK(rep.states == 3);
  CHECK(rep.max_balance_violation < 1e-14);
  CHECK(rep.max_identity_rel_error < 1e-12);
  CHECK(rep.max_rate_row_error < 1e-13);
}

TEST_CASE("reversibility oracle: correlated three-coordinate model") {
  RngStream rng = RngStream::root(19);
  std::vector<double> w(27);
  for (auto& v : w) v = std::exp(rng.uniform(-1.0, 1.0));
  const DiscreteMeasure m({{-1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}, {-1.0, 0.0, 1.0}}, w);
  const auto rep = reversibility_oracle(m, 1.0, 0.5, 20, 23);
  CHECK(rep.states == 27);
  CHECK(rep.max_balance_violation < 1e-12);
  CHECK(rep.max_identity_rel_error < 1e-10);
  CHECK(rep.max_rate_row_error < 1e-12);
}

TEST_CASE("invariance: constants are exactly invariant, tiny horizons are noise") {
  const ProductMeasure m = ProductMeasure::standard_normal(2);
  const CylinderFunction c = CylinderFunction::constant(2.0);
  const auto rep_const = invariance_test(m, c, config_ad(1.0, 0.2, 1e-9), 200, 29);
  CHECK(rep_const.difference() == 0.0);

  const CylinderFunction u = CylinderFunction::bump(0, 0.0, 1.0);
  const auto rep_null = invariance_test(m, u, config_ad(1.0, 0.2, 1e-9), 2000, 31);
  CHECK(rep_null.pass(3.0));  // both sides sample the same law
}

TEST_CASE("invariance holds at a real horizon on a small budget") {
  const ProductMeasure m = ProductMeasure::standard_normal(1);
  const CylinderFunction u = CylinderFunction::bump(0, 0.0, 1.0);
  JumpChainConfig c = config_ad(1.0, 0.2, 1.0);
  c.jump_grid = 512;
  const auto rep = invariance_test(m, u, c, 1500, 37);
  CHECK(rep.pass(3.0));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config_ad(1.0, -0.1, 1.0).validate(), InvalidInput);
  CHECK_THROWS_AS(config_ad(0.0, 0.1, 1.0).validate(), InvalidInput);
  CHECK_THROWS_AS(config_ad(1.0, 0.1, 0.0).validate(), InvalidInput);
}
