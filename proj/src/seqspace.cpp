#include "nlform/seqspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlform::seq {

namespace {

void check_finite(std::span<const double> x, const char* what) {
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite entry");
}

}  // namespace

SpaceSpec SpaceSpec::lp(double p, std::vector<double> beta) {
  if (p < 1.0) throw InvalidInput("SpaceSpec: p must be >= 1");
  for (double b : beta)
    if (!(b > 0.0)) throw InvalidInput("SpaceSpec: weights must be strictly positive");
  return {SpaceKind::WeightedLp, p, std::move(beta)};
}

SpaceSpec SpaceSpec::linf(std::vector<double> beta) {
  for (double b : beta)
    if (!(b > 0.0)) throw InvalidInput("SpaceSpec: weights must be strictly positive");
  return {SpaceKind::WeightedLinf, 0.0, std::move(beta)};
}

SpaceSpec SpaceSpec::product_rn(int n) {
  if (n <= 0) throw InvalidInput("SpaceSpec: dimension must be positive");
  return {SpaceKind::ProductRN, 0.0, std::vector<double>(static_cast<std::size_t>(n), 1.0)};
}

double norm(const SpaceSpec& space, std::span<const double> x) {
  if (static_cast<int>(x.size()) != space.dim())
    throw InvalidInput("norm: point length does not match space dimension");
  check_finite(x, "norm");
  switch (space.kind) {
    case SpaceKind::WeightedLp: {
      double s = 0.0;
      for (int i = 0; i < space.dim(); ++i)
        s += space.beta[static_cast<std::size_t>(i)] *
             std::pow(std::fabs(x[static_cast<std::size_t>(i)]), space.p);
      return std::pow(s, 1.0 / space.p);
    }
    case SpaceKind::WeightedLinf: {
      double s = 0.0;
      for (int i = 0; i < space.dim(); ++i)
        s = std::max(s, space.beta[static_cast<std::size_t>(i)] *
                            std::fabs(x[static_cast<std::size_t>(i)]));
      return s;
    }
    case SpaceKind::ProductRN: {
      const std::vector<double> zero(x.size(), 0.0);
      return metric_rn(x, zero);
    }
  }
  return 0.0;
}

double metric_rn(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("metric_rn: length mismatch");
  check_finite(x, "metric_rn");
  check_finite(y, "metric_rn");
  const int n = static_cast<int>(x.size());
  double sq = 0.0;
  double d = 0.0;
  double w = 0.5;
  for (int k = 0; k < n; ++k) {
    const double diff = x[static_cast<std::size_t>(k)] - y[static_cast<std::size_t>(k)];
    sq += diff * diff;
    const double nk = std::sqrt(sq);
    // Last live term carries the whole remaining 2^-k tail: the partial
    // norms are constant beyond the live coordinates.
    const double weight = (k + 1 == n) ? 2.0 * w : w;
    d += weight * nk / (1.0 + nk);
    w *= 0.5;
  }
  return d;
}

BoxSpec BoxSpec::make(const SpaceSpec& space, double M, std::vector<double> gamma) {
  if (!(M > 0.0)) throw InvalidInput("BoxSpec: M must be positive");
  if (static_cast<int>(gamma.size()) != space.dim())
    throw InvalidInput("BoxSpec: gamma length does not match space dimension");
  for (double g : gamma)
    if (!(g > 0.0)) throw InvalidInput("BoxSpec: gamma must be strictly positive");
  BoxSpec box;
  box.M = M;
  box.a.resize(gamma.size());
  for (int i = 0; i < space.dim(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    switch (space.kind) {
      case SpaceKind::WeightedLp:
        box.a[u] = M * std::pow(gamma[u], -1.0 / space.p) * std::pow(space.beta[u], -1.0 / space.p);
        break;
      case SpaceKind::WeightedLinf:
        box.a[u] = M / (gamma[u] * space.beta[u]);
        break;
      case SpaceKind::ProductRN:
        box.a[u] = M * gamma[u];
        break;
    }
  }
  box.gamma = std::move(gamma);
  return box;
}

bool box_contains(const BoxSpec& box, std::span<const double> x) {
  if (x.size() != box.a.size()) throw InvalidInput("box_contains: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::fabs(x[i]) > box.a[i]) return false;
  return true;
}

double CutoffProfile::operator()(double x) const {
  const double t = std::fabs(x);
  if (t <= 1.0) return 1.0;
  if (t >= 3.0) return 0.0;
  const double s = (3.0 - t) * 0.5;  // in (0,1), 1 at the plateau edge
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double eta_scaled(const CutoffProfile& profile, const BoxSpec& box, int i, double x) {
  if (i < 0 || i >= box.dim()) throw InvalidInput("eta_scaled: coordinate out of range");
  return profile.scaled(x, box.radius(i));
}

CylinderFunction::CylinderFunction(int base_dim, int arity, Evaluator eval, double lipschitz,
                                   double sup_norm, std::vector<double> support_radius)
    : base_dim_(base_dim),
      arity_(arity),
      eval_(std::move(eval)),
      lipschitz_(lipschitz),
      sup_norm_(sup_norm),
      support_radius_(std::move(support_radius)) {
  if (arity_ < 0 || arity_ > kMaxArity)
    throw InvalidInput("CylinderFunction: arity out of range");
}

double CylinderFunction::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) < arity_)
    throw InvalidInput("CylinderFunction: point shorter than arity");
  return eval_(x.first(static_cast<std::size_t>(arity_)));
}

double CylinderFunction::eval_replaced(std::span<const double> x, int i, double y) const {
  if (i >= arity_) return (*this)(x);
  double scratch[kMaxArity];
  std::copy(x.begin(), x.begin() + arity_, scratch);
  scratch[static_cast<std::size_t>(i)] = y;
  return eval_({scratch, static_cast<std::size_t>(arity_)});
}

CylinderFunction CylinderFunction::constant(double c) {
  return {0, 0, [c](std::span<const double>) { return c; }, 0.0, std::fabs(c), {}};
}

CylinderFunction CylinderFunction::coordinate(int i) {
  return {i + 1, i + 1,
          [i](std::span<const double> x) { return x[static_cast<std::size_t>(i)]; }, 1.0,
          std::numeric_limits<double>::infinity(), {}};
}

CylinderFunction CylinderFunction::bump(int i, double center, double a) {
  if (!(a > 0.0)) throw InvalidInput("bump: scale must be positive");
  CutoffProfile eta;
  std::vector<double> radius(static_cast<std::size_t>(i) + 1,
                             std::numeric_limits<double>::infinity());
  radius.back() = std::fabs(center) + 3.0 * a;
  return {i + 1, i + 1,
          [i, center, a, eta](std::span<const double> x) {
            return eta.scaled(x[static_cast<std::size_t>(i)] - center, a);
          },
          CutoffProfile::lipschitz() / a, 1.0, std::move(radius)};
}

CylinderFunction CylinderFunction::product_of_bumps(std::span<const double> a) {
  const int m = static_cast<int>(a.size());
  if (m == 0) throw InvalidInput("product_of_bumps: empty scale list");
  double lip = 0.0;
  std::vector<double> radius(a.size());
  std::vector<double> scales(a.begin(), a.end());
  for (int i = 0; i < m; ++i) {
    if (!(a[static_cast<std::size_t>(i)] > 0.0))
      throw InvalidInput("product_of_bumps: scales must be positive");
    lip = std::max(lip, CutoffProfile::lipschitz() / a[static_cast<std::size_t>(i)]);
    radius[static_cast<std::size_t>(i)] = 3.0 * a[static_cast<std::size_t>(i)];
  }
  CutoffProfile eta;
  return {m, m,
          [scales, eta](std::span<const double> x) {
            double v = 1.0;
            for (std::size_t i = 0; i < scales.size(); ++i) v *= eta.scaled(x[i], scales[i]);
            return v;
          },
          lip, 1.0, std::move(radius)};
}

CylinderFunction CylinderFunction::polynomial(int i, std::span<const double> coeffs) {
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return {i + 1, i + 1,
          [i, c](std::span<const double> x) {
            const double t = x[static_cast<std::size_t>(i)];
            double v = 0.0;
            for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
            return v;
          },
          std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), {}};
}

CylinderFunction CylinderFunction::sum(const CylinderFunction& f, const CylinderFunction& g) {
  const int arity = std::max(f.arity_, g.arity_);
  const int base = std::max(f.base_dim_, g.base_dim_);
  auto fe = f, ge = g;
  return {base, arity,
          [fe, ge](std::span<const double> x) {
            return fe.eval_(x.first(static_cast<std::size_t>(fe.arity_))) +
                   ge.eval_(x.first(static_cast<std::size_t>(ge.arity_)));
          },
          f.lipschitz_ + g.lipschitz_, f.sup_norm_ + g.sup_norm_, {}};
}

CylinderFunction CylinderFunction::scaled(double c, const CylinderFunction& f) {
  auto fe = f;
  return {f.base_dim_, f.arity_,
          [c, fe](std::span<const double> x) { return c * fe.eval_(x); },
          std::fabs(c) * f.lipschitz_, std::fabs(c) * f.sup_norm_, f.support_radius_};
}

CylinderFunction build_fMk(const CylinderFunction& f, const BoxSpec& box, int k,
                           const CutoffProfile& profile) {
  const int n = f.base_dim();
  if (k < n) throw InvalidInput("build_fMk: k must be >= base dimension");
  if (k > box.dim()) throw InvalidInput("build_fMk: k exceeds box dimension");
  // Standing assumption: the skipped factors eta_{M,i}, i < n, are 1 on
  // supp f, i.e. the declared support sits inside the plateau radii.
  if (static_cast<int>(f.support_radius().size()) < n)
    throw PreconditionError("build_fMk: function has no declared support box");
  for (int i = 0; i < n; ++i) {
    const double r = f.support_radius()[static_cast<std::size_t>(i)];
    if (!(r <= box.radius(i)))
      throw PreconditionError("build_fMk: box plateau too small at coordinate " +
                              std::to_string(i + 1));
  }
  if (k == n) return f;

  std::vector<double> scales;
  scales.reserve(static_cast<std::size_t>(k - n));
  double lip = f.lipschitz();
  for (int i = n; i < k; ++i) {
    scales.push_back(box.radius(i));
    lip = std::max(lip, f.sup_norm() * CutoffProfile::lipschitz() / box.radius(i));
  }
  std::vector<double> radius = f.support_radius();
  radius.resize(static_cast<std::size_t>(k));
  for (int i = n; i < k; ++i) radius[static_cast<std::size_t>(i)] = box.outer_radius(i);

  auto base = f;
  const int nb = n;
  return {n, k,
          [base, scales, nb, profile](std::span<const double> x) {
            double v = base(x.first(static_cast<std::size_t>(base.arity())));
            for (std::size_t j = 0; j < scales.size(); ++j)
              v *= profile.scaled(x[static_cast<std::size_t>(nb) + j], scales[j]);
            return v;
          },
          lip, f.sup_norm(), std::move(radius)};
}

std::vector<Point> epsilon_net(const SpaceSpec& space, const BoxSpec& box, double eps,
                               std::size_t max_points) {
  if (space.kind != SpaceKind::WeightedLp)
    throw InvalidInput("epsilon_net: only weighted-lp spaces are supported");
  if (!(eps > 0.0)) throw InvalidInput("epsilon_net: eps must be positive");
  const int n = space.dim();
  for (double g : box.gamma)
    if (g < 1.0) throw InvalidInput("epsilon_net: requires gamma_i >= 1");

  const double M = box.M;
  const double p = space.p;
  const double tail_budget = std::pow(eps / 3.0, p);

  // Live coordinates: smallest prefix whose gamma^-1 tail is within budget.
  std::vector<double> ginv_tail(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = n - 1; i >= 0; --i)
    ginv_tail[static_cast<std::size_t>(i)] =
        ginv_tail[static_cast<std::size_t>(i) + 1] + 1.0 / box.gamma[static_cast<std::size_t>(i)];
  int live = n;
  for (int j = 0; j <= n; ++j) {
    if (std::pow(M, p) * ginv_tail[static_cast<std::size_t>(j)] <= tail_budget) {
      live = j;
      break;
    }
  }
  if (live == 0) live = 1;  // always grid at least one coordinate

  const double eps_prime = (eps / 3.0) * std::pow(static_cast<double>(live), -1.0 / p);
  const long last = static_cast<long>(std::floor(2.0 * M / eps_prime)) + 1;
  const std::size_t per_coord = static_cast<std::size_t>(last) + 1;

  double size_f = 1.0;
  for (int i = 0; i < live; ++i) size_f *= static_cast<double>(per_coord);
  if (size_f > static_cast<double>(max_points))
    throw ResourceLimit("epsilon_net: grid would need " + std::to_string(size_f) +
                        " points (budget " + std::to_string(max_points) + ")");

  // Scaled grid values per live coordinate, clamped into the box.
  std::vector<std::vector<double>> values(static_cast<std::size_t>(live));
  for (int i = 0; i < live; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double binv = std::pow(space.beta[u], -1.0 / p);
    const double edge = M * std::pow(box.gamma[u], -1.0 / p);
    values[u].resize(per_coord);
    for (std::size_t j = 0; j < per_coord; ++j) {
      const double s = std::clamp(-M + eps_prime * static_cast<double>(j), -edge, edge);
      values[u][j] = s * binv;
    }
  }

  std::vector<Point> net;
  net.reserve(static_cast<std::size_t>(size_f));
  std::vector<std::size_t> idx(static_cast<std::size_t>(live), 0);
  while (true) {
    Point x(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < live; ++i)
      x[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    net.push_back(std::move(x));
    int c = 0;
    while (c < live) {
      if (++idx[static_cast<std::size_t>(c)] < per_coord) break;
      idx[static_cast<std::size_t>(c)] = 0;
      ++c;
    }
    if (c == live) break;
  }
  return net;
}

}  // namespace nlform::seq
