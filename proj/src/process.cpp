#include "nlform/process.hpp"

#include <algorithm>
#include <cmath>

#include "nlform/quadrature.hpp"
#include "nlform/stats.hpp"

namespace nlform::proc {

void JumpChainConfig::validate() const {
  if (!(alpha > 0.0) || !(alpha < 2.0)) throw InvalidInput("JumpChainConfig: alpha in (0,2)");
  if (!(delta > 0.0)) throw InvalidInput("JumpChainConfig: delta must be positive");
  if (!(horizon > 0.0)) throw InvalidInput("JumpChainConfig: horizon must be positive");
  if (max_events < 1) throw InvalidInput("JumpChainConfig: event budget must be >= 1");
  if (jump_grid < 16) throw InvalidInput("JumpChainConfig: jump grid too small");
}

std::vector<double> Trajectory::final_state() const {
  std::vector<double> x = initial;
  for (std::size_t k = 0; k < coords.size(); ++k)
    x[static_cast<std::size_t>(coords[k])] = values[k];
  return x;
}

namespace {

double atom_rate(const meas::Conditional1D& cond, double xi, double alpha, double delta) {
  const auto& a = cond.as_atoms();
  double z = 0.0;
  for (std::size_t j = 0; j < a.loc.size(); ++j) {
    const double gap = std::fabs(a.loc[j] - xi);
    if (gap > delta) z += a.mass[j] * std::pow(gap, -(alpha + 1.0));
  }
  return z;
}

double density_rate(const meas::Conditional1D& cond, double xi, double alpha, double delta,
                    double tol) {
  const double lo = cond.support_lo(), hi = cond.support_hi();
  auto f = [&](double y) {
    return std::pow(std::fabs(y - xi), -(alpha + 1.0)) * cond.density(y);
  };
  double z = 0.0;
  if (xi - delta > lo) {
    const QuadResult q = integrate(f, lo, xi - delta, 0.5 * tol);
    if (!q.converged) throw NumericalError("coordinate_rate: quadrature did not converge");
    z += q.value;
  }
  if (xi + delta < hi) {
    const QuadResult q = integrate(f, xi + delta, hi, 0.5 * tol);
    if (!q.converged) throw NumericalError("coordinate_rate: quadrature did not converge");
    z += q.value;
  }
  return z;
}

}  // namespace

double coordinate_rate(const meas::Measure& model, std::span<const double> x, int i, double alpha,
                       double delta, double tol) {
  if (!(delta > 0.0)) throw InvalidInput("coordinate_rate: delta must be positive");
  const meas::Conditional1D cond = model.conditional(i, x);
  const double xi = x[static_cast<std::size_t>(i)];
  if (cond.is_atoms()) return atom_rate(cond, xi, alpha, delta);
  return density_rate(cond, xi, alpha, delta, tol);
}

namespace {

/// Inverse-CDF table for the jump law of one coordinate.  The grid is
/// log-spaced in the distance t = |y - x_i| so the kernel spike just above
/// delta is resolved.
class JumpTable {
 public:
  JumpTable(const meas::Conditional1D& cond, double xi, double alpha, double delta, int grid) {
    const double lo = cond.support_lo(), hi = cond.support_hi();
    build_side(cond, xi, alpha, delta, grid, xi + delta, hi, +1.0);
    build_side(cond, xi, alpha, delta, grid, xi - delta, lo, -1.0);
    total_ = 0.0;
    for (double m : seg_mass_) total_ += m;
  }

  double total_mass() const { return total_; }

  double draw(RngStream& rng) const {
    double u = rng.uniform01() * total_;
    std::size_t k = seg_mass_.size() - 1;
    for (std::size_t j = 0; j < seg_mass_.size(); ++j) {
      if (u <= seg_mass_[j]) {
        k = j;
        break;
      }
      u -= seg_mass_[j];
    }
    // Linear-density inversion within the segment (q_a -> q_b over w).
    const double w = seg_b_[k] - seg_a_[k];
    const double aw = std::fabs(w);
    if (!(aw > 0.0) || !(seg_mass_[k] > 0.0)) return seg_a_[k];
    const double qa = seg_qa_[k], qb = seg_qb_[k];
    const double slope = (qb - qa) / aw;
    double t;
    if (std::fabs(slope) * aw < 1e-14 * (qa + qb + 1e-300)) {
      t = qa > 0.0 ? u / qa : 0.5 * aw;
    } else {
      const double disc = qa * qa + 2.0 * slope * u;
      t = (std::sqrt(std::max(0.0, disc)) - qa) / slope;
    }
    t = std::clamp(t, 0.0, aw);
    return seg_a_[k] + (w > 0 ? t : -t);
  }

 private:
  void build_side(const meas::Conditional1D& cond, double xi, double alpha, double delta,
                  int grid, double start, double end, double dir) {
    const double span = dir > 0 ? end - start : start - end;
    if (span <= 0.0) return;
    const int m = std::max(8, grid / 2);
    const double ratio = std::log((delta + span) / delta) / m;
    auto q = [&](double y) {
      return std::pow(std::fabs(y - xi), -(alpha + 1.0)) * cond.density(y);
    };
    double t_prev = delta;
    double q_prev = q(xi + dir * t_prev);
    for (int j = 1; j <= m; ++j) {
      const double t = delta * std::exp(ratio * j);
      const double y_prev = xi + dir * t_prev;
      const double y = xi + dir * std::min(t, delta + span);
      const double qc = q(y);
      const double mass = 0.5 * (q_prev + qc) * std::fabs(y - y_prev);
      if (mass > 0.0) {
        seg_a_.push_back(y_prev);
        seg_b_.push_back(y);
        seg_qa_.push_back(q_prev);
        seg_qb_.push_back(qc);
        seg_mass_.push_back(mass);
      }
      t_prev = t;
      q_prev = qc;
    }
  }

  std::vector<double> seg_a_, seg_b_, seg_qa_, seg_qb_, seg_mass_;
  double total_ = 0.0;
};

}  // namespace

double sample_jump(const meas::Measure& model, std::span<const double> x, int i, double alpha,
                   double delta, RngStream& rng, int grid) {
  const meas::Conditional1D cond = model.conditional(i, x);
  const double xi = x[static_cast<std::size_t>(i)];
  if (cond.is_atoms()) {
    const auto& a = cond.as_atoms();
    std::vector<double> w(a.loc.size(), 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < a.loc.size(); ++j) {
      const double gap = std::fabs(a.loc[j] - xi);
      if (gap > delta) {
        w[j] = a.mass[j] * std::pow(gap, -(alpha + 1.0));
        total += w[j];
      }
    }
    if (!(total > 0.0)) throw NumericalError("sample_jump: zero jump rate at this coordinate");
    return a.loc[static_cast<std::size_t>(rng.pick(w, total))];
  }
  const JumpTable table(cond, xi, alpha, delta, grid);
  if (!(table.total_mass() > 0.0))
    throw NumericalError("sample_jump: zero jump rate at this coordinate");
  return table.draw(rng);
}

Trajectory simulate(const meas::Measure& model, std::span<const double> x0,
                    const JumpChainConfig& config, RngStream rng) {
  config.validate();
  if (static_cast<int>(x0.size()) != model.dim())
    throw InvalidInput("simulate: initial state length mismatch");
  Trajectory traj;
  traj.initial.assign(x0.begin(), x0.end());
  traj.times.push_back(0.0);

  std::vector<double> x(x0.begin(), x0.end());
  const int n = model.dim();
  std::vector<double> rate(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    rate[static_cast<std::size_t>(i)] = coordinate_rate(model, x, i, config.alpha, config.delta,
                                                        config.rate_tol);
  double t = 0.0;
  for (;;) {
    double total = 0.0;
    for (double r : rate) total += r;
    // Conservativeness: truncated rates are finite, so the cemetery state
    // is unreachable.  A non-finite rate would be a numerical defect.
    if (!std::isfinite(total))
      throw NumericalError("simulate: non-finite total jump rate");
    if (!(total > 0.0)) {
      traj.absorbed = true;
      traj.stop = StopReason::Horizon;
      break;
    }
    const double wait = rng.exponential(total);
    if (t + wait > config.horizon) {
      traj.stop = StopReason::Horizon;
      break;
    }
    t += wait;
    const int i = rng.pick(rate, total);
    const double y = sample_jump(model, x, i, config.alpha, config.delta, rng, config.jump_grid);
    x[static_cast<std::size_t>(i)] = y;
    traj.times.push_back(t);
    traj.coords.push_back(i);
    traj.values.push_back(y);
    if (model.product_structure()) {
      rate[static_cast<std::size_t>(i)] =
          coordinate_rate(model, x, i, config.alpha, config.delta, config.rate_tol);
    } else {
      for (int j = 0; j < n; ++j)
        rate[static_cast<std::size_t>(j)] =
            coordinate_rate(model, x, j, config.alpha, config.delta, config.rate_tol);
    }
    if (traj.events() >= config.max_events) {
      traj.stop = StopReason::Budget;
      break;
    }
  }
  return traj;
}

double InvarianceReport::pooled_se() const {
  return std::sqrt(se_horizon * se_horizon + se_fresh * se_fresh);
}

bool InvarianceReport::pass(double nsigma) const {
  return std::fabs(difference()) <= nsigma * pooled_se();
}

InvarianceReport invariance_test(const meas::Measure& model, const seq::CylinderFunction& u,
                                 const JumpChainConfig& config, long nchains, std::uint64_t seed) {
  config.validate();
  if (nchains < 2) throw InvalidInput("invariance_test: needs at least two chains");
  RngStream root = RngStream::root(seed);
  auto start_sampler = model.sampler(root.substream(0));
  auto fresh_sampler = model.sampler(root.substream(1));
  RngStream chain_streams = root.substream(2);

  RunningStat at_horizon, fresh;
  for (long c = 0; c < nchains; ++c) {
    const meas::Point x0 = start_sampler->draw();
    Trajectory traj = simulate(model, x0, config, chain_streams.substream(static_cast<std::uint64_t>(c)));
    at_horizon.add(u(traj.final_state()));
    fresh.add(u(fresh_sampler->draw()));
  }
  InvarianceReport rep;
  rep.mean_horizon = at_horizon.mean();
  rep.se_horizon = at_horizon.stderr_mean();
  rep.mean_fresh = fresh.mean();
  rep.se_fresh = fresh.stderr_mean();
  rep.chains = nchains;
  return rep;
}

ReversibilityReport reversibility_oracle(const meas::DiscreteMeasure& model, double alpha,
                                         double delta, int n_test_functions, std::uint64_t seed,
                                         long state_budget) {
  if (model.n_states() > state_budget)
    throw ResourceLimit("reversibility_oracle: state space exceeds budget");
  const int n = model.dim();
  const long S = model.n_states();
  const auto& locs = model.locations();

  // Enumerate states.
  std::vector<std::vector<int>> states;
  states.reserve(static_cast<std::size_t>(S));
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    states.push_back(idx);
    int c = n - 1;
    while (c >= 0) {
      if (++idx[static_cast<std::size_t>(c)] <
          static_cast<int>(locs[static_cast<std::size_t>(c)].size()))
        break;
      idx[static_cast<std::size_t>(c)] = 0;
      --c;
    }
    if (c < 0) break;
  }

  std::vector<double> mu(static_cast<std::size_t>(S));
  for (long s = 0; s < S; ++s) mu[static_cast<std::size_t>(s)] = model.probability(states[static_cast<std::size_t>(s)]);

  // State lookup: flatten atom indices with the same mixed radix.
  auto flat_of = [&](const std::vector<int>& ai) {
    long f = 0;
    for (int i = 0; i < n; ++i)
      f = f * static_cast<long>(locs[static_cast<std::size_t>(i)].size()) + ai[static_cast<std::size_t>(i)];
    return f;
  };
  std::vector<long> order(static_cast<std::size_t>(S));
  for (long s = 0; s < S; ++s) order[static_cast<std::size_t>(flat_of(states[static_cast<std::size_t>(s)]))] = s;

  // Dense rate matrix.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(S, S);
  for (long s = 0; s < S; ++s) {
    const meas::Point x = model.state(states[static_cast<std::size_t>(s)]);
    for (int i = 0; i < n; ++i) {
      const meas::Conditional1D cond = model.conditional(i, x);
      const auto& a = cond.as_atoms();
      const double xi = x[static_cast<std::size_t>(i)];
      for (std::size_t ya = 0; ya < a.loc.size(); ++ya) {
        const double gap = std::fabs(a.loc[ya] - xi);
        if (!(gap > delta)) continue;
        const double k = std::pow(gap, -(alpha + 1.0));
        std::vector<int> tgt = states[static_cast<std::size_t>(s)];
        tgt[static_cast<std::size_t>(i)] = static_cast<int>(ya);
        Q(s, order[static_cast<std::size_t>(flat_of(tgt))]) += k * a.mass[ya];
      }
    }
    Q(s, s) = 0.0;
    Q(s, s) = -Q.row(s).sum();
  }

  ReversibilityReport rep;
  rep.states = S;
  for (long s = 0; s < S; ++s)
    for (long r = 0; r < S; ++r) {
      if (r == s) continue;
      rep.max_balance_violation =
          std::max(rep.max_balance_violation,
                   std::fabs(mu[static_cast<std::size_t>(s)] * Q(s, r) -
                             mu[static_cast<std::size_t>(r)] * Q(r, s)));
    }

  // Off-diagonal row sums against the rate integrals.
  for (long s = 0; s < S; ++s) {
    const meas::Point x = model.state(states[static_cast<std::size_t>(s)]);
    double rates = 0.0;
    for (int i = 0; i < n; ++i) rates += coordinate_rate(model, x, i, alpha, delta);
    rep.max_rate_row_error = std::max(rep.max_rate_row_error, std::fabs(rates + Q(s, s)));
  }

  // Dirichlet identity on random state functions: -<Qu,u>_mu = 1/2 E(u,u).
  RngStream rng = RngStream::root(seed);
  forms::FormSpec spec;
  spec.alpha = alpha;
  spec.delta = delta;
  spec.samples_per_coord = 1;  // unused by the exact path
  for (int f = 0; f < n_test_functions; ++f) {
    RngStream fs = rng.substream(static_cast<std::uint64_t>(f));
    Eigen::VectorXd uvec(S);
    for (long s = 0; s < S; ++s) uvec[s] = fs.uniform(-1.0, 1.0);
    // Wrap as a cylinder function via atom-index lookup.
    seq::CylinderFunction ufun(
        n, n,
        [&model, uvec, order, n, flat_of](std::span<const double> x) {
          std::vector<int> ai(static_cast<std::size_t>(n));
          for (int i = 0; i < n; ++i) ai[static_cast<std::size_t>(i)] = model.atom_index(i, x[static_cast<std::size_t>(i)]);
          long f2 = 0;
          const auto& ls = model.locations();
          for (int i = 0; i < n; ++i)
            f2 = f2 * static_cast<long>(ls[static_cast<std::size_t>(i)].size()) + ai[static_cast<std::size_t>(i)];
          return uvec[order[static_cast<std::size_t>(f2)]];
        },
        0.0, 1.0, {});
    const double exact = forms::form_exact_small(model, ufun, ufun, spec, state_budget);
    double quad = 0.0;
    const Eigen::VectorXd qu = Q * uvec;
    for (long s = 0; s < S; ++s) quad -= mu[static_cast<std::size_t>(s)] * qu[s] * uvec[s];
    const double target = 0.5 * exact;
    const double scale = std::max({std::fabs(target), std::fabs(quad), 1e-300});
    rep.max_identity_rel_error =
        std::max(rep.max_identity_rel_error, std::fabs(quad - target) / scale);
  }
  return rep;
}

double holding_time_ks_pvalue(const meas::Measure& model, std::span<const double> x0,
                              const JumpChainConfig& config, long nchains, std::uint64_t seed) {
  config.validate();
  double total = 0.0;
  for (int i = 0; i < model.dim(); ++i)
    total += coordinate_rate(model, x0, i, config.alpha, config.delta, config.rate_tol);
  if (!(total > 0.0)) throw NumericalError("holding_time_ks: initial state is absorbing");
  // First event times through the simulator itself: one-event budget, a
  // horizon long enough that censoring is negligible.
  JumpChainConfig first = config;
  first.max_events = 1;
  first.horizon = 200.0 / total;
  RngStream root = RngStream::root(seed);
  std::vector<double> waits;
  waits.reserve(static_cast<std::size_t>(nchains));
  for (long c = 0; c < nchains; ++c) {
    const Trajectory t = simulate(model, x0, first, root.substream(static_cast<std::uint64_t>(c)));
    if (t.events() >= 1) waits.push_back(t.times[1]);
  }
  if (waits.size() < 8) throw NumericalError("holding_time_ks: too few events observed");
  nchains = static_cast<long>(waits.size());
  std::sort(waits.begin(), waits.end());
  double d = 0.0;
  for (long k = 0; k < nchains; ++k) {
    const double cdf = 1.0 - std::exp(-total * waits[static_cast<std::size_t>(k)]);
    const double lo = static_cast<double>(k) / static_cast<double>(nchains);
    const double hi = static_cast<double>(k + 1) / static_cast<double>(nchains);
    d = std::max({d, std::fabs(cdf - lo), std::fabs(cdf - hi)});
  }
  return ks_p_value(d, nchains);
}

}  // namespace nlform::proc
