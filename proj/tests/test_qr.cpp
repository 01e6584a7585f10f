#include <doctest.h>

#include <cmath>

#include "nlform/qr_check.hpp"

using namespace nlform;
using namespace nlform::qr;
using meas::DiscreteMeasure;
using meas::ProductMeasure;

namespace {

const hilb::EigenSystem& test_eig() {
  static const hilb::EigenSystem eig = [] {
    hilb::HInverse op(hilb::GridSpec{1, 8.0, 64});
    return hilb::eigensystem(op, 32);
  }();
  return eig;
}

}  // namespace

TEST_CASE("free-field schemes reproduce the eigenvalue powers") {
  const auto& eig = test_eig();
  const WeightScheme s2 = free_field_scheme(eig, -2, 1.0);
  const WeightScheme s3 = free_field_scheme(eig, -3, 0.5);
  for (int i = 0; i < eig.count(); ++i) {
    const double lam = eig.lambda[i];
    const auto u = static_cast<std::size_t>(i);
    CHECK(s2.beta[u] * s2.gamma[u] == doctest::Approx(lam * lam).epsilon(1e-12));
    // (beta gamma)^{(alpha+1)/2} = lambda^{2(alpha+1)}: alpha=0.5 -> lambda^3.
    CHECK(std::pow(s3.beta[u] * s3.gamma[u], (0.5 + 1.0) / 2.0) ==
          doctest::Approx(std::pow(lam, 3.0)).epsilon(1e-10));
    CHECK(1.0 / s3.gamma[u] == doctest::Approx(lam * lam).epsilon(1e-12));
  }
  // Summability witness equals the eigen table partial sums.
  CHECK(s2.gamma_inv_partial.back() ==
        doctest::Approx(eig.lambda_sq_partial.back()).epsilon(1e-12));
  CHECK_THROWS_AS(free_field_scheme(eig, -1, 1.0), InvalidInput);
}

TEST_CASE("level -3 scheme terms are bounded by the cubed eigenvalues") {
  // Tails never exceed one, so each condition-4.3 term is at most
  // (beta gamma)^{(alpha+1)/2} = lambda^3 at alpha = 1/2.
  const auto& eig = test_eig();
  const int K = eig.count();
  const meas::CorrelatedGaussian field(hilb::free_field_covariance(eig.grid, 1.0, eig, K));
  const WeightScheme s = free_field_scheme(eig, -3, 0.5);
  const auto rep = check_condition(field, s, "4.3", K, 10, 1, 1e-6);
  for (int i = 0; i < K; ++i) {
    const double lam3 = std::pow(eig.lambda[i], 3.0);
    CHECK(rep.terms[static_cast<std::size_t>(i)] <= lam3 * (1.0 + 1e-12));
  }
}

TEST_CASE("trivial model: every tail condition sums to zero") {
  const DiscreteMeasure zero =
      DiscreteMeasure::product({{0.0}, {0.0}, {0.0}}, {{1.0}, {1.0}, {1.0}});
  const WeightScheme s = manual_scheme(SpaceTag::Lp, 2.0, {1.0, 1.0, 1.0},
                                       {1.0, 2.0, 3.0}, 1.0, 1.0);
  const auto rep = check_condition(zero, s, "4.3", 3, 10, 1, 1e-6);
  for (double t : rep.terms) CHECK(t == 0.0);
  CHECK(rep.verdict == Verdict::ConsistentWithFinite);
}

TEST_CASE("chebyshev series matches the classical zeta value") {
  // Unit variance, beta_i gamma_i = i^-2, p = 2, alpha = 1: terms i^-4.
  const int n = 200;
  const ProductMeasure m = ProductMeasure::standard_normal(n);
  std::vector<double> beta(n), gamma(n, 1.0);
  for (int i = 0; i < n; ++i) beta[static_cast<std::size_t>(i)] = std::pow(i + 1.0, -2.0);
  const WeightScheme s = manual_scheme(SpaceTag::Lp, 2.0, beta, gamma, 1.0, 1.0);
  const auto rep = chebyshev_sufficient(m, s, n, 10, 1, 1e-6);
  const double zeta4 = std::pow(3.14159265358979323846, 4) / 90.0;
  CHECK(rep.partial_sums.back() == doctest::Approx(zeta4).epsilon(1e-7));
  CHECK(rep.verdict == Verdict::ConsistentWithFinite);
}

TEST_CASE("zero-variance coordinates contribute nothing") {
  const DiscreteMeasure m = DiscreteMeasure::product(
      {{0.0}, {-1.0, 1.0}}, {{1.0}, {1.0, 1.0}});
  const WeightScheme s = manual_scheme(SpaceTag::Lp, 2.0, {1.0, 1.0}, {1.0, 1.0}, 1.0, 1.0);
  const auto rep = chebyshev_sufficient(m, s, 2, 10, 1, 1e-6);
  CHECK(rep.terms[0] == 0.0);
  CHECK(rep.terms[1] == doctest::Approx(1.0));
}

TEST_CASE("tail sums are dominated termwise by the moment sums") {
  // At alpha = 1, M0 = 1 and beta gamma <= 1 the Chebyshev bound applies
  // term by term.
  const int n = 24;
  const ProductMeasure m = ProductMeasure::standard_normal(n);
  std::vector<double> beta(n), gamma(n, 1.0);
  for (int i = 0; i < n; ++i) beta[static_cast<std::size_t>(i)] = std::pow(i + 1.0, -2.0);
  const WeightScheme s = manual_scheme(SpaceTag::Lp, 2.0, beta, gamma, 1.0, 1.0);
  const auto tails = check_condition(m, s, "4.3", n, 10, 1, 1e-6);
  const auto moments = chebyshev_sufficient(m, s, n, 10, 1, 1e-6);
  for (int i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    CHECK(tails.terms[u] <=
          moments.terms[u] + 3.0 * (tails.term_stderr[u] + moments.term_stderr[u]) + 1e-15);
  }
}

TEST_CASE("support estimates rise toward one and vanish at zero") {
  const ProductMeasure m = ProductMeasure::standard_normal(4);
  const WeightScheme s = manual_scheme(SpaceTag::Lp, 2.0, std::vector<double>(4, 1.0),
                                       std::vector<double>(4, 1.0), 1.0, 1.0);
  const double grid[4] = {0.0, 1.0, 3.0, 30.0};
  const auto table = support_estimate(m, s, grid, 4000, 5);
  CHECK(table.probability[0] == 0.0);
  for (int g = 1; g < 4; ++g) CHECK(table.probability[g] >= table.probability[g - 1]);
  CHECK(table.probability[3] == 1.0);
}

TEST_CASE("support property for the free-field scheme at level -3") {
  // Under the level -3 scheme the box event is a finite next-finer weighted
  // norm; its mass must climb to one as M grows.
  const auto& eig = test_eig();
  const int K = eig.count();
  const Eigen::MatrixXd cov = hilb::free_field_covariance(eig.grid, 1.0, eig, K);
  const meas::CorrelatedGaussian field(cov);
  const WeightScheme s = free_field_scheme(eig, -3, 0.5);
  const double grid[3] = {0.5, 2.0, 16.0};
  const auto table = support_estimate(field, s, grid, 3000, 7);
  CHECK(table.probability[0] <= table.probability[1]);
  CHECK(table.probability[1] <= table.probability[2]);
  CHECK(table.probability[2] > 0.99);
}

TEST_CASE("condition and scheme kinds must match") {
  const ProductMeasure m = ProductMeasure::standard_normal(2);
  const WeightScheme lp = manual_scheme(SpaceTag::Lp, 2.0, {1.0, 1.0}, {1.0, 1.0}, 1.0, 1.0);
  CHECK_THROWS_AS(check_condition(m, lp, "4.5", 2, 10, 1, 1e-6), InvalidInput);
  CHECK_THROWS_AS(check_condition(m, lp, "4.4", 2, 10, 1, 1e-6), InvalidInput);
  CHECK_THROWS_AS(check_condition(m, lp, "4.8", 2, 10, 1, 1e-6), InvalidInput);
  CHECK_THROWS_AS(check_condition(m, lp, "9.9", 2, 10, 1, 1e-6), InvalidInput);
}

TEST_CASE("density-bound family runs on lp, linf and product spaces") {
  const ProductMeasure m = ProductMeasure::standard_normal(3);
  const WeightScheme lp = manual_scheme(SpaceTag::Lp, 2.0, {1.0, 0.5, 0.25},
                                        {1.0, 2.0, 4.0}, 1.0, 1.5);
  const double grid[2] = {1.0, 2.0};
  const auto rep = check_condition(m, lp, "4.53", 3, 10, 3, 1e-6, grid, 8);
  CHECK(rep.terms.size() == 3);
  CHECK(rep.sup_total >= rep.partial_sums.back() - 1e-15);
  for (double t : rep.terms) CHECK(t >= 0.0);

  const WeightScheme li = manual_scheme(SpaceTag::Linf, 2.0, {1.0, 1.0, 1.0},
                                        {1.0, 2.0, 3.0}, 1.0, 1.5);
  const auto rep_li = check_condition(m, li, "4.55", 3, 10, 3, 1e-6, grid, 4);
  CHECK(rep_li.terms.size() == 3);

  const WeightScheme rn = manual_scheme(SpaceTag::RN, 2.0, {1.0, 1.0, 1.0},
                                        {1.0, 2.0, 3.0}, 1.0, 1.5);
  const auto rep_rn = check_condition(m, rn, "4.56", 3, 10, 3, 1e-6, grid, 4);
  CHECK(rep_rn.terms.size() == 3);
}

TEST_CASE("linf gamma must be nondecreasing") {
  CHECK_THROWS_AS(manual_scheme(SpaceTag::Linf, 2.0, {1.0, 1.0}, {2.0, 1.0}, 1.0, 1.0),
                  InvalidInput);
}
