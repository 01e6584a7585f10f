#include "nlform/forms.hpp"

#include <algorithm>
#include <cmath>

namespace nlform::forms {

void FormSpec::validate() const {
  if (!(alpha > 0.0) || !(alpha < 2.0)) throw InvalidInput("FormSpec: alpha must be in (0,2)");
  if (!(delta > 0.0)) throw InvalidInput("FormSpec: delta must be positive");
  if (samples_per_coord <= 0) throw InvalidInput("FormSpec: sample budget must be positive");
}

double phi_alpha(const CylinderFunction& u, const CylinderFunction& v,
                 std::span<const double> x, int i, double y, double yp, double alpha) {
  if (y == yp) throw InvalidInput("phi_alpha: y and y' must differ");
  const double du = u.eval_replaced(x, i, y) - u.eval_replaced(x, i, yp);
  const double dv = (&u == &v) ? du : v.eval_replaced(x, i, y) - v.eval_replaced(x, i, yp);
  return du * dv * std::pow(std::fabs(y - yp), -(alpha + 1.0));
}

namespace {

std::vector<int> resolve_coords(const meas::Measure& model, std::span<const int> coords) {
  std::vector<int> out;
  if (coords.empty()) {
    out.resize(static_cast<std::size_t>(model.dim()));
    for (int i = 0; i < model.dim(); ++i) out[static_cast<std::size_t>(i)] = i;
  } else {
    out.assign(coords.begin(), coords.end());
    for (int i : out)
      if (i < 0 || i >= model.dim())
        throw InvalidInput("form estimate: coordinate out of range");
  }
  return out;
}

/// Drives the draw sequence for one coordinate.  The tuples depend only on
/// (seed, coordinate, sample index), never on the integrands or on delta,
/// which is what makes common-random-number comparisons exact.
template <class Visit>
void for_each_tuple(const meas::Measure& model, int i, long nsamples, std::uint64_t seed,
                    Visit&& visit) {
  RngStream coord_stream = RngStream::root(seed).substream(static_cast<std::uint64_t>(i));
  auto sampler = model.sampler(coord_stream.substream(0));
  RngStream cond_streams = coord_stream.substream(1);
  for (long s = 0; s < nsamples; ++s) {
    const meas::Point x = sampler->draw();
    RngStream rs = cond_streams.substream(static_cast<std::uint64_t>(s));
    const meas::Conditional1D cond = model.conditional(i, x);
    const double y = cond.sample(rs);
    const double yp = cond.sample(rs);
    visit(x, y, yp);
  }
}

CoordEstimate exact_zero_estimate(int i) { return {i, 0.0, 0.0, 0, true}; }

}  // namespace

FormEstimate form_i_estimate(const meas::Measure& model, const CylinderFunction& u,
                             const CylinderFunction& v, int i, const FormSpec& spec,
                             std::uint64_t seed) {
  spec.validate();
  if (i < 0 || i >= model.dim()) throw InvalidInput("form_i_estimate: coordinate out of range");
  FormEstimate out;
  if (!u.depends_on(i) || !v.depends_on(i)) {
    out.per_coord.push_back(exact_zero_estimate(i));
    return out;
  }
  RunningStat stat;
  const double alpha = spec.alpha;
  const double delta = spec.delta;
  for_each_tuple(model, i, spec.samples_per_coord, seed,
                 [&](const meas::Point& x, double y, double yp) {
                   const double term = std::fabs(y - yp) > delta
                                           ? phi_alpha(u, v, x, i, y, yp, alpha)
                                           : 0.0;
                   stat.add(term);
                 });
  out.value = stat.mean();
  out.stderr_ = stat.stderr_mean();
  out.nsamples = stat.n();
  out.per_coord.push_back({i, out.value, out.stderr_, out.nsamples, false});
  return out;
}

FormEstimate form_estimate(const meas::Measure& model, const CylinderFunction& u,
                           const CylinderFunction& v, const FormSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::vector<int> coords = resolve_coords(model, spec.coords);
  FormEstimate out;
  double var = 0.0;
  for (int i : coords) {
    if (!u.depends_on(i) || !v.depends_on(i)) {
      out.per_coord.push_back(exact_zero_estimate(i));
      continue;
    }
    FormEstimate ci = form_i_estimate(model, u, v, i, spec, seed);
    out.value += ci.value;
    var += ci.stderr_ * ci.stderr_;
    out.nsamples += ci.nsamples;
    out.per_coord.push_back(ci.per_coord.front());
  }
  out.stderr_ = std::sqrt(var);
  return out;
}

std::vector<std::vector<FormEstimate>> form_crn(const meas::Measure& model,
                                                std::span<const FormPair> pairs,
                                                std::span<const double> deltas, double alpha,
                                                std::span<const int> coords, long samples_per_coord,
                                                std::uint64_t seed) {
  if (!(alpha > 0.0) || !(alpha < 2.0)) throw InvalidInput("form_crn: alpha must be in (0,2)");
  if (pairs.empty() || deltas.empty()) throw InvalidInput("form_crn: empty pair or delta list");
  for (double d : deltas)
    if (!(d > 0.0)) throw InvalidInput("form_crn: deltas must be positive");
  if (samples_per_coord <= 0) throw InvalidInput("form_crn: sample budget must be positive");
  const std::vector<int> cs = resolve_coords(model, coords);

  const std::size_t np = pairs.size(), nd = deltas.size();
  std::vector<std::vector<FormEstimate>> out(np, std::vector<FormEstimate>(nd));

  for (int i : cs) {
    bool any = false;
    for (const auto& pr : pairs)
      if (pr.u->depends_on(i) && pr.v->depends_on(i)) any = true;
    if (!any) {
      for (std::size_t p = 0; p < np; ++p)
        for (std::size_t d = 0; d < nd; ++d)
          out[p][d].per_coord.push_back(exact_zero_estimate(i));
      continue;
    }
    std::vector<std::vector<RunningStat>> local(np, std::vector<RunningStat>(nd));
    for_each_tuple(model, i, samples_per_coord, seed,
                   [&](const meas::Point& x, double y, double yp) {
                     const double gap = std::fabs(y - yp);
                     for (std::size_t p = 0; p < np; ++p) {
                       const bool dep = pairs[p].u->depends_on(i) && pairs[p].v->depends_on(i);
                       const double kernel =
                           dep ? phi_alpha(*pairs[p].u, *pairs[p].v, x, i, y, yp, alpha) : 0.0;
                       for (std::size_t d = 0; d < nd; ++d)
                         local[p][d].add(gap > deltas[d] ? kernel : 0.0);
                     }
                   });
    for (std::size_t p = 0; p < np; ++p)
      for (std::size_t d = 0; d < nd; ++d)
        out[p][d].per_coord.push_back({i, local[p][d].mean(), local[p][d].stderr_mean(),
                                       local[p][d].n(), false});
  }
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t d = 0; d < nd; ++d) {
      double value = 0.0, var = 0.0;
      long n = 0;
      for (const auto& ce : out[p][d].per_coord) {
        value += ce.value;
        var += ce.stderr_ * ce.stderr_;
        n += ce.n;
      }
      out[p][d].value = value;
      out[p][d].stderr_ = std::sqrt(var);
      out[p][d].nsamples = n;
    }
  }
  return out;
}

double form_exact_small(const meas::DiscreteMeasure& model, const CylinderFunction& u,
                        const CylinderFunction& v, const FormSpec& spec, long state_budget) {
  spec.validate();
  if (model.n_states() > state_budget)
    throw ResourceLimit("form_exact_small: state space exceeds budget (" +
                        std::to_string(model.n_states()) + " states)");
  const std::vector<int> coords = resolve_coords(model, spec.coords);
  const int n = model.dim();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const auto& locs = model.locations();
  double total = 0.0;
  // Enumerate full states; for each coordinate sum the two conditional draws.
  for (;;) {
    const double px = model.probability(idx);
    if (px > 0.0) {
      const meas::Point x = model.state(idx);
      for (int i : coords) {
        if (!u.depends_on(i) || !v.depends_on(i)) continue;
        const meas::Conditional1D cond = model.conditional(i, x);
        const auto& atoms = cond.as_atoms();
        for (std::size_t ya = 0; ya < atoms.loc.size(); ++ya) {
          for (std::size_t yb = 0; yb < atoms.loc.size(); ++yb) {
            if (ya == yb) continue;
            const double y = atoms.loc[ya], yp = atoms.loc[yb];
            if (y == yp || std::fabs(y - yp) <= spec.delta) continue;
            const double w = atoms.mass[ya] * atoms.mass[yb];
            if (w == 0.0) continue;
            total += px * w * phi_alpha(u, v, x, i, y, yp, spec.alpha);
          }
        }
      }
    }
    int c = n - 1;
    while (c >= 0) {
      if (++idx[static_cast<std::size_t>(c)] < static_cast<int>(locs[static_cast<std::size_t>(c)].size()))
        break;
      idx[static_cast<std::size_t>(c)] = 0;
      --c;
    }
    if (c < 0) break;
  }
  return total;
}

meas::DiscreteMeasure discretize_product(const meas::ProductMeasure& model, int points,
                                         double span_sigmas) {
  if (points < 2) throw InvalidInput("discretize_product: needs at least two points");
  std::vector<std::vector<double>> locs(static_cast<std::size_t>(model.dim()));
  std::vector<std::vector<double>> masses(static_cast<std::size_t>(model.dim()));
  for (int i = 0; i < model.dim(); ++i) {
    const meas::Conditional1D c = model.conditional(i, {});
    double lo, hi;
    if (c.is_gaussian()) {
      const auto& g = c.as_gaussian();
      const double sd = std::sqrt(g.var);
      lo = g.mean - span_sigmas * sd;
      hi = g.mean + span_sigmas * sd;
    } else {
      lo = c.support_lo();
      hi = c.support_hi();
    }
    const double dx = (hi - lo) / points;
    auto& l = locs[static_cast<std::size_t>(i)];
    auto& m = masses[static_cast<std::size_t>(i)];
    l.resize(static_cast<std::size_t>(points));
    m.resize(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) {
      const double t = lo + (j + 0.5) * dx;  // midpoint rule
      l[static_cast<std::size_t>(j)] = t;
      m[static_cast<std::size_t>(j)] = c.density(t);
    }
  }
  return meas::DiscreteMeasure::product(std::move(locs), std::move(masses));
}

ContractionProfile::ContractionProfile(double eps) : eps_(eps) {
  if (!(eps > 0.0)) throw InvalidInput("ContractionProfile: eps must be positive");
}

double ContractionProfile::operator()(double t) const {
  const double e = eps_;
  if (t >= -0.5 * e && t <= 1.0 + 0.5 * e) return t;  // exact identity plateau
  if (t <= -2.0 * e) return -e;
  if (t >= 1.0 + 2.0 * e) return 1.0 + e;
  if (t < -0.5 * e) {
    // Cubic blend on [-2e, -e/2] whose slope is s^2 in the normalized
    // position s, joining the constant and identity pieces C^1.
    const double s = (t + 2.0 * e) / (1.5 * e);
    return -e + (0.5 * e) * s * s * s;
  }
  const double s = (1.0 + 2.0 * e - t) / (1.5 * e);
  return 1.0 + e - (0.5 * e) * s * s * s;
}

CylinderFunction apply_contraction(const ContractionProfile& phi, const CylinderFunction& u) {
  auto base = u;
  const ContractionProfile p = phi;
  const double sup = std::min(u.sup_norm(), 1.0 + phi.eps());
  return {u.base_dim(), u.arity(),
          [base, p](std::span<const double> x) { return p(base(x)); },
          u.lipschitz(), sup, u.support_radius()};
}

MonotonicityReport truncation_monotonicity_check(const meas::Measure& model,
                                                 const CylinderFunction& u,
                                                 std::span<const double> deltas, double alpha,
                                                 std::span<const int> coords,
                                                 long samples_per_coord, std::uint64_t seed) {
  if (deltas.size() < 2) throw InvalidInput("truncation check: need at least two deltas");
  for (std::size_t j = 1; j < deltas.size(); ++j)
    if (!(deltas[j] <= deltas[j - 1]))
      throw InvalidInput("truncation check: deltas must be nonincreasing");
  const FormPair pair{&u, &u};
  const auto table = form_crn(model, std::span<const FormPair>(&pair, 1), deltas, alpha, coords,
                              samples_per_coord, seed);
  MonotonicityReport rep;
  rep.deltas.assign(deltas.begin(), deltas.end());
  rep.values.reserve(deltas.size());
  for (const auto& est : table.front()) rep.values.push_back(est.value);
  rep.nondecreasing = true;
  for (std::size_t j = 1; j < rep.values.size(); ++j)
    if (rep.values[j] < rep.values[j - 1]) rep.nondecreasing = false;
  return rep;
}

double young_kernel_l1(double lo, double hi, double alpha) {
  if (!(alpha > 1.0) || !(alpha < 2.0))
    throw InvalidInput("young_kernel_l1: alpha must be in (1,2)");
  if (!(hi >= lo)) throw InvalidInput("young_kernel_l1: empty interval");
  const double q = 2.0 - alpha;  // in (0,1): |t|^{1-alpha} integrates to |t|^q / q
  auto anti = [q](double t) { return std::pow(std::fabs(t), q) / q; };
  if (lo >= 0.0) return anti(hi) - anti(lo);
  if (hi <= 0.0) return anti(lo) - anti(hi);
  return anti(lo) + anti(hi);
}

double young_diagnostic(const meas::Measure& model, int i, std::span<const double> x, double k_lo,
                        double k_hi, double alpha) {
  const double l = meas::cond_density_bound(model, i, x, k_lo, k_hi);
  return l * young_kernel_l1(k_lo, k_hi, alpha);
}

}  // namespace nlform::forms
