#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "nlform/errors.hpp"
#include "nlform/rng.hpp"
#include "nlform/stats.hpp"

namespace nlform::meas {

using Point = std::vector<double>;

/// Exact single-coordinate conditional law.  Three representations:
/// closed-form Gaussian, a piecewise-linear density on a uniform grid, or
/// finitely many atoms.
class Conditional1D {
 public:
  struct Gaussian {
    double mean, var;
  };
  struct Grid {
    double lo, hi;
    std::vector<double> pdf;  // node values, trapezoid-normalized to 1
    std::vector<double> cdf;  // cdf[j] = integral up to node j
  };
  struct Atoms {
    std::vector<double> loc;
    std::vector<double> mass;  // normalized
  };

  static Conditional1D gaussian(double mean, double var);
  /// Normalizes the supplied node densities; throws NumericalError if the
  /// raw values cannot be normalized.
  static Conditional1D grid(double lo, double hi, std::vector<double> pdf);
  static Conditional1D atoms(std::vector<double> loc, std::vector<double> mass);

  bool is_gaussian() const { return std::holds_alternative<Gaussian>(rep_); }
  bool is_grid() const { return std::holds_alternative<Grid>(rep_); }
  bool is_atoms() const { return std::holds_alternative<Atoms>(rep_); }
  const Gaussian& as_gaussian() const { return std::get<Gaussian>(rep_); }
  const Grid& as_grid() const { return std::get<Grid>(rep_); }
  const Atoms& as_atoms() const { return std::get<Atoms>(rep_); }

  bool has_density() const { return !is_atoms(); }

  /// One draw; consumes a fixed number of uniforms per representation
  /// (gaussian: 2, grid: 1, atoms: 1), so replayed streams stay aligned.
  double sample(RngStream& rng) const;

  double density(double y) const;  // atoms -> Unsupported

  /// L_{K} >= sup of the density over K = [lo, hi].
  double bound_on(double lo, double hi) const;

  double mean() const;
  double variance() const;

  /// Interval carrying all but a negligible sliver of mass.
  double support_lo() const;
  double support_hi() const;

 private:
  std::variant<Gaussian, Grid, Atoms> rep_;
};

/// Draws points approximately distributed as the model; MCMC-backed models
/// hold a warm chain.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual Point draw() = 0;
  virtual long sweeps_used() const { return 0; }
  /// True when successive draws are correlated (batch stderr needed).
  virtual bool correlated() const { return false; }
};

/// A probability law on the truncated space with exact single-coordinate
/// conditional kernels.
class Measure {
 public:
  virtual ~Measure() = default;
  virtual int dim() const = 0;
  /// Full conditional of coordinate i given the others; x supplies the
  /// conditioning values (entry i is ignored).
  virtual Conditional1D conditional(int i, std::span<const double> x) const = 0;
  virtual std::unique_ptr<Sampler> sampler(RngStream stream) const = 0;
  /// Closed-form marginal facts where the variant admits them.
  virtual std::optional<double> exact_tail(int i, double threshold) const;
  virtual std::optional<double> exact_moment2(int i) const;
  /// Coordinates are independent: jump rates of unchanged coordinates
  /// survive a single-coordinate update.
  virtual bool product_structure() const { return false; }
};

/// Independent coordinates with named 1-d marginals.
class ProductMeasure : public Measure {
 public:
  struct GaussianMarginal {
    double mean, var;
  };
  struct UniformMarginal {
    double lo, hi;
  };
  using Marginal = std::variant<GaussianMarginal, UniformMarginal>;

  explicit ProductMeasure(std::vector<Marginal> marginals);
  static ProductMeasure standard_normal(int n);

  int dim() const override { return static_cast<int>(marginals_.size()); }
  Conditional1D conditional(int i, std::span<const double> x) const override;
  std::unique_ptr<Sampler> sampler(RngStream stream) const override;
  std::optional<double> exact_tail(int i, double threshold) const override;
  std::optional<double> exact_moment2(int i) const override;
  bool product_structure() const override { return true; }

 private:
  std::vector<Marginal> marginals_;
};

/// Centered Gaussian with a full covariance matrix.
class CorrelatedGaussian : public Measure {
 public:
  explicit CorrelatedGaussian(Eigen::MatrixXd covariance);

  int dim() const override { return static_cast<int>(cov_.rows()); }
  Conditional1D conditional(int i, std::span<const double> x) const override;
  std::unique_ptr<Sampler> sampler(RngStream stream) const override;
  std::optional<double> exact_tail(int i, double threshold) const override;
  std::optional<double> exact_moment2(int i) const override;
  const Eigen::MatrixXd& covariance() const { return cov_; }

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd precision_;
  Eigen::MatrixXd chol_;  // lower factor
};

/// Finite product grid of atom locations with a joint weight table.
/// Exists to let exhaustive brute-force oracles run against the same
/// interfaces the Monte-Carlo estimators use.
class DiscreteMeasure : public Measure {
 public:
  DiscreteMeasure(std::vector<std::vector<double>> locations, std::vector<double> joint_weights);
  /// Independent coordinates: joint weights form the outer product.
  static DiscreteMeasure product(std::vector<std::vector<double>> locations,
                                 std::vector<std::vector<double>> masses);

  int dim() const override { return static_cast<int>(locs_.size()); }
  Conditional1D conditional(int i, std::span<const double> x) const override;
  std::unique_ptr<Sampler> sampler(RngStream stream) const override;
  std::optional<double> exact_tail(int i, double threshold) const override;
  std::optional<double> exact_moment2(int i) const override;
  bool product_structure() const override { return product_; }

  long n_states() const { return static_cast<long>(weights_.size()); }
  const std::vector<std::vector<double>>& locations() const { return locs_; }
  /// Normalized probability of the state with the given atom indices.
  double probability(std::span<const int> atom_idx) const;
  Point state(std::span<const int> atom_idx) const;
  /// Atom index of value v in coordinate i (exact match required).
  int atom_index(int i, double v) const;

 private:
  std::size_t flat_index(std::span<const int> atom_idx) const;
  std::vector<std::vector<double>> locs_;
  std::vector<double> weights_;  // normalized joint table, last coordinate fastest
  std::vector<std::size_t> strides_;
  bool product_ = false;
};

/// Nearest-neighbor lattice quartic field on a periodic box.
struct Phi4Params {
  int d = 1;             // lattice dimension, 1 or 2
  int L = 8;             // sites per axis
  double eps_lat = 1.0;  // lattice spacing
  double m0_sq = 1.0;    // bare mass squared
  double lambda = 0.0;   // quartic coupling
  std::optional<double> a_eps;  // counter term; defaults to m0_sq
  int burnin_sweeps = 500;
  int thinning = 4;
  int cond_grid = 512;     // nodes for the grid conditional
  double guard = 1e6;      // divergence guard on |phi_x|

  double counter_term() const { return a_eps.value_or(m0_sq); }
  int sites() const;
};

/// S = 1/2 sum_bonds eps^{d-2} (phi_x - phi_y)^2 + 1/2 a_eps sum eps^d phi^2
///   + lambda/2 sum eps^d phi^4, periodic, each bond counted once.
double phi4_action(const Phi4Params& params, std::span<const double> config);

class LatticePhi4 : public Measure {
 public:
  explicit LatticePhi4(Phi4Params params);

  int dim() const override { return params_.sites(); }
  Conditional1D conditional(int i, std::span<const double> x) const override;
  std::unique_ptr<Sampler> sampler(RngStream stream) const override;
  const Phi4Params& params() const { return params_; }
  const std::vector<int>& neighbors(int site) const;

 private:
  Phi4Params params_;
  std::vector<std::vector<int>> neighbors_;  // 2d entries per site
};

// Estimators over any model.  Closed-form values are returned exactly
// (stderr 0); otherwise Monte Carlo with batch-aware standard errors.
Estimate estimate_tail(const Measure& model, int i, double threshold, long nsamples,
                       std::uint64_t seed);
Estimate moment2(const Measure& model, int i, long nsamples, std::uint64_t seed);

/// L_{K,i} for the conditional at the given conditioning point.
double cond_density_bound(const Measure& model, int i, std::span<const double> x, double k_lo,
                          double k_hi);

}  // namespace nlform::meas
