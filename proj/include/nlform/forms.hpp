#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlform/measures.hpp"
#include "nlform/seqspace.hpp"

namespace nlform::forms {

using seq::CylinderFunction;

/// Truncated-form description: order alpha, jump cutoff delta (pairs with
/// |y - y'| <= delta are excluded), coordinate set, per-coordinate budget.
struct FormSpec {
  double alpha = 1.0;
  double delta = 0.1;
  std::vector<int> coords;  // empty = all live coordinates of the model
  long samples_per_coord = 10000;

  void validate() const;
};

struct CoordEstimate {
  int coord = 0;
  double value = 0.0;
  double stderr_ = 0.0;
  long n = 0;
  bool exact_zero = false;
};

struct FormEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  long nsamples = 0;
  std::vector<CoordEstimate> per_coord;
};

/// Jump kernel factor: |y-y'|^-(alpha+1) (u(..y..) - u(..y'..)) (v(..y..) - v(..y'..))
/// with the replacement at coordinate i of x.  Throws on y == y'.
double phi_alpha(const CylinderFunction& u, const CylinderFunction& v,
                 std::span<const double> x, int i, double y, double yp, double alpha);

/// Monte-Carlo estimate of the i-th coordinate form in the symmetric
/// two-conditional-draw expression: x ~ mu, then y, y' ~ mu(.|rest)
/// independently.  Nonnegative term by term when u == v.
FormEstimate form_i_estimate(const meas::Measure& model, const CylinderFunction& u,
                             const CylinderFunction& v, int i, const FormSpec& spec,
                             std::uint64_t seed);

/// Sum over the coordinate set; coordinates on which neither u nor v
/// depends contribute exact zeros.
FormEstimate form_estimate(const meas::Measure& model, const CylinderFunction& u,
                           const CylinderFunction& v, const FormSpec& spec, std::uint64_t seed);

/// Common-random-number table: every (u,v) pair and every delta is
/// evaluated on the same draw tuples, so pointwise kernel inequalities
/// survive into the estimates deterministically.
struct FormPair {
  const CylinderFunction* u;
  const CylinderFunction* v;
};
std::vector<std::vector<FormEstimate>> form_crn(const meas::Measure& model,
                                                std::span<const FormPair> pairs,
                                                std::span<const double> deltas, double alpha,
                                                std::span<const int> coords, long samples_per_coord,
                                                std::uint64_t seed);

/// Exact triple sum over a finite discrete model (the brute-force oracle
/// for the Monte-Carlo estimators).
double form_exact_small(const meas::DiscreteMeasure& model, const CylinderFunction& u,
                        const CylinderFunction& v, const FormSpec& spec, long state_budget = 100000);

/// Product model with each marginal collapsed onto `points` atoms, for
/// grid-refinement oracles.
meas::DiscreteMeasure discretize_product(const meas::ProductMeasure& model, int points,
                                         double span_sigmas = 8.0);

/// Unit contraction: smooth, identity on [-eps/2, 1+eps/2], constant
/// outside [-2 eps, 1+2 eps], slope within [0,1] everywhere.
class ContractionProfile {
 public:
  explicit ContractionProfile(double eps);
  double eps() const { return eps_; }
  double operator()(double t) const;

 private:
  double eps_;
};

/// phi_eps composed with u; sup norm min(sup u, 1+eps), Lipschitz unchanged.
CylinderFunction apply_contraction(const ContractionProfile& phi, const CylinderFunction& u);

struct MonotonicityReport {
  std::vector<double> deltas;  // strictly decreasing
  std::vector<double> values;
  bool nondecreasing = false;
};

/// Common-random-number estimates at a decreasing ladder of jump cutoffs;
/// shrinking delta only adds nonnegative terms, so the values must not
/// decrease.
MonotonicityReport truncation_monotonicity_check(const meas::Measure& model,
                                                 const CylinderFunction& u,
                                                 std::span<const double> deltas, double alpha,
                                                 std::span<const int> coords,
                                                 long samples_per_coord, std::uint64_t seed);

/// L^1 mass of |t|^{1-alpha} over [lo, hi] (finite for 1 < alpha < 2).
double young_kernel_l1(double lo, double hi, double alpha);

/// Finiteness diagnostic for 1 < alpha < 2: L_{K,i} * || I_K / |.|^(alpha-1) ||_L1.
double young_diagnostic(const meas::Measure& model, int i, std::span<const double> x, double k_lo,
                        double k_hi, double alpha);

}  // namespace nlform::forms
