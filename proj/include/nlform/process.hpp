#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlform/forms.hpp"
#include "nlform/measures.hpp"
#include "nlform/seqspace.hpp"

namespace nlform::proc {

struct JumpChainConfig {
  double alpha = 1.0;
  double delta = 0.1;
  double horizon = 1.0;
  long max_events = 1000000;
  int jump_grid = 2048;       // nodes per side of the inverse-CDF jump table
  double rate_tol = 1e-8;     // quadrature tolerance for coordinate rates

  void validate() const;
};

enum class StopReason { Horizon, Budget };

/// Event-driven sample path: times[0] = 0 is the initial state; event k
/// happened at times[k+1] and set coordinate coords[k] to values[k].
struct Trajectory {
  std::vector<double> times;
  std::vector<int> coords;
  std::vector<double> values;
  std::vector<double> initial;
  StopReason stop = StopReason::Horizon;
  bool absorbed = false;  // total rate hit zero

  long events() const { return static_cast<long>(coords.size()); }
  std::vector<double> final_state() const;
};

/// Z_i(x) = int_{|y - x_i| > delta} |y - x_i|^-(alpha+1) mu(dy | rest).
double coordinate_rate(const meas::Measure& model, std::span<const double> x, int i, double alpha,
                       double delta, double tol = 1e-8);

/// Draw from the normalized jump law |y-x_i|^-(alpha+1) mu(dy|rest) / Z_i
/// restricted to |y-x_i| > delta.  Throws NumericalError when Z_i = 0.
double sample_jump(const meas::Measure& model, std::span<const double> x, int i, double alpha,
                   double delta, RngStream& rng, int grid = 2048);

Trajectory simulate(const meas::Measure& model, std::span<const double> x0,
                    const JumpChainConfig& config, RngStream rng);

struct InvarianceReport {
  double mean_horizon = 0.0;
  double se_horizon = 0.0;
  double mean_fresh = 0.0;
  double se_fresh = 0.0;
  long chains = 0;

  double difference() const { return mean_horizon - mean_fresh; }
  double pooled_se() const;
  bool pass(double nsigma = 3.0) const;
};

/// Runs chains from independent draws of the model to the horizon and
/// compares E u(X_T) against E_mu u on fresh draws.
InvarianceReport invariance_test(const meas::Measure& model, const seq::CylinderFunction& u,
                                 const JumpChainConfig& config, long nchains, std::uint64_t seed);

struct ReversibilityReport {
  long states = 0;
  double max_balance_violation = 0.0;   // |mu_x Q_xy - mu_y Q_yx|
  double max_identity_rel_error = 0.0;  // -<Qu,u>_mu vs 1/2 E_exact(u,u)
  double max_rate_row_error = 0.0;      // off-diagonal row sums vs coordinate rates
};

/// Exact rate-matrix oracle on a finite discrete model: detailed balance,
/// the Dirichlet-form identity -<Qu,u>_mu = 1/2 E(u,u) on random u, and
/// row-sum consistency with coordinate_rate.
ReversibilityReport reversibility_oracle(const meas::DiscreteMeasure& model, double alpha,
                                         double delta, int n_test_functions, std::uint64_t seed,
                                         long state_budget = 100000);

/// Kolmogorov-Smirnov p-value of first holding times against the
/// exponential law with the initial state's total rate (diagnostic).
double holding_time_ks_pvalue(const meas::Measure& model, std::span<const double> x0,
                              const JumpChainConfig& config, long nchains, std::uint64_t seed);

}  // namespace nlform::proc
