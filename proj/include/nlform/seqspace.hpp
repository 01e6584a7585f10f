#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlform/errors.hpp"

namespace nlform::seq {

using Point = std::vector<double>;

enum class SpaceKind { WeightedLp, WeightedLinf, ProductRN };

/// A truncated weighted sequence space: N live coordinates, strictly
/// positive weights, coordinates beyond N frozen at zero.
struct SpaceSpec {
  SpaceKind kind = SpaceKind::WeightedLp;
  double p = 2.0;               // only meaningful for WeightedLp
  std::vector<double> beta;     // size N, beta_i > 0

  int dim() const { return static_cast<int>(beta.size()); }

  static SpaceSpec lp(double p, std::vector<double> beta);
  static SpaceSpec linf(std::vector<double> beta);
  static SpaceSpec product_rn(int n);
};

/// Space norm of x; for the product space this is the metric to the origin.
double norm(const SpaceSpec& space, std::span<const double> x);

/// Bounded product-space metric.  The tail of the 2^-k weights is folded
/// into the last live term, so vectors supported on the live coordinates
/// get their exact full-sequence distance.
double metric_rn(std::span<const double> x, std::span<const double> y);

/// Compact box: per-coordinate plateau radii a_i (and outer radii 3 a_i).
struct BoxSpec {
  double M = 1.0;
  std::vector<double> gamma;
  std::vector<double> a;  // derived plateau radii, one per coordinate

  static BoxSpec make(const SpaceSpec& space, double M, std::vector<double> gamma);
  double radius(int i) const { return a[static_cast<std::size_t>(i)]; }
  double outer_radius(int i) const { return 3.0 * a[static_cast<std::size_t>(i)]; }
  int dim() const { return static_cast<int>(a.size()); }
};

bool box_contains(const BoxSpec& box, std::span<const double> x);

/// Smooth bump: 1 on [-1,1], 0 outside (-3,3), quintic-smoothstep ramp in
/// between; |eta'| <= 15/16 < 1 everywhere.
class CutoffProfile {
 public:
  double operator()(double x) const;
  /// eta(x / a): plateau radius a, support radius 3a, Lipschitz 15/(16 a).
  double scaled(double x, double a) const { return (*this)(x / a); }
  static constexpr double lipschitz() { return 15.0 / 16.0; }
};

/// Scaled cutoff for coordinate i of a box: eta(x / a_i).
double eta_scaled(const CutoffProfile& profile, const BoxSpec& box, int i, double x);

/// A function of finitely many leading coordinates, with declared (not
/// proven) Lipschitz and sup-norm metadata.  `arity` counts all coordinates
/// the evaluation reads, including attached cutoff factors.
class CylinderFunction {
 public:
  using Evaluator = std::function<double(std::span<const double>)>;
  static constexpr int kMaxArity = 128;

  CylinderFunction() = default;
  CylinderFunction(int base_dim, int arity, Evaluator eval, double lipschitz,
                   double sup_norm, std::vector<double> support_radius = {});

  double operator()(std::span<const double> x) const;
  /// Value with coordinate i replaced by y (x itself is left untouched).
  double eval_replaced(std::span<const double> x, int i, double y) const;

  int base_dim() const { return base_dim_; }
  int arity() const { return arity_; }
  bool depends_on(int i) const { return i < arity_; }
  double lipschitz() const { return lipschitz_; }
  double sup_norm() const { return sup_norm_; }
  const std::vector<double>& support_radius() const { return support_radius_; }

  // Factories.
  static CylinderFunction constant(double c);
  static CylinderFunction coordinate(int i);
  /// eta((x_i - center) / a).
  static CylinderFunction bump(int i, double center, double a);
  /// prod_{i<m} eta(x_i / a[i]).
  static CylinderFunction product_of_bumps(std::span<const double> a);
  /// Polynomial sum_k coeffs[k] * x_i^k.
  static CylinderFunction polynomial(int i, std::span<const double> coeffs);

  // Combinators.
  static CylinderFunction sum(const CylinderFunction& f, const CylinderFunction& g);
  static CylinderFunction scaled(double c, const CylinderFunction& f);

 private:
  int base_dim_ = 0;
  int arity_ = 0;
  Evaluator eval_;
  double lipschitz_ = 0.0;
  double sup_norm_ = 0.0;
  std::vector<double> support_radius_;  // per base coordinate; empty = undeclared
};

/// f * prod_{i=n..k-1} eta_{M,i}(x_i).  Requires the declared support of f
/// to sit inside the box plateau in every base coordinate, so the skipped
/// factors are identically 1 on supp f.
CylinderFunction build_fMk(const CylinderFunction& f, const BoxSpec& box, int k,
                           const CutoffProfile& profile = {});

/// Grid net covering the box within eps in the space norm (weighted-lp
/// spaces with gamma_i >= 1 only).  Throws ResourceLimit if the grid would
/// exceed max_points.
std::vector<Point> epsilon_net(const SpaceSpec& space, const BoxSpec& box, double eps,
                               std::size_t max_points = 2000000);

}  // namespace nlform::seq
