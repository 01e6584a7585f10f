#include "nlform/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlform::meas {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310005024;
constexpr double kGaussianSupportSigmas = 12.0;

}  // namespace

// ---------------------------------------------------------------------------
// Conditional1D

Conditional1D Conditional1D::gaussian(double mean, double var) {
  if (!(var > 0.0) || !std::isfinite(mean) || !std::isfinite(var))
    throw InvalidInput("Conditional1D: gaussian needs finite mean and positive variance");
  Conditional1D c;
  c.rep_ = Gaussian{mean, var};
  return c;
}

Conditional1D Conditional1D::grid(double lo, double hi, std::vector<double> pdf) {
  if (!(hi > lo) || pdf.size() < 2) throw InvalidInput("Conditional1D: bad grid");
  const double dx = (hi - lo) / static_cast<double>(pdf.size() - 1);
  double raw = 0.0;
  for (std::size_t j = 0; j + 1 < pdf.size(); ++j) raw += 0.5 * (pdf[j] + pdf[j + 1]) * dx;
  if (!(raw > 0.0) || !std::isfinite(raw))
    throw NumericalError("Conditional1D: grid density cannot be normalized");
  for (auto& v : pdf) {
    if (v < 0.0) throw InvalidInput("Conditional1D: negative density value");
    v /= raw;
  }
  std::vector<double> cdf(pdf.size());
  cdf[0] = 0.0;
  for (std::size_t j = 0; j + 1 < pdf.size(); ++j)
    cdf[j + 1] = cdf[j] + 0.5 * (pdf[j] + pdf[j + 1]) * dx;
  cdf.back() = 1.0;
  Conditional1D c;
  c.rep_ = Grid{lo, hi, std::move(pdf), std::move(cdf)};
  return c;
}

Conditional1D Conditional1D::atoms(std::vector<double> loc, std::vector<double> mass) {
  if (loc.empty() || loc.size() != mass.size()) throw InvalidInput("Conditional1D: bad atoms");
  double total = 0.0;
  for (double m : mass) {
    if (m < 0.0) throw InvalidInput("Conditional1D: negative atom mass");
    total += m;
  }
  if (!(total > 0.0)) throw InvalidInput("Conditional1D: zero total mass");
  for (auto& m : mass) m /= total;
  Conditional1D c;
  c.rep_ = Atoms{std::move(loc), std::move(mass)};
  return c;
}

namespace {

/// Inverse CDF within one cell of a piecewise-linear density: solves
/// q0 t + (q1-q0) t^2 / (2 dx) = mass for t in [0, dx].
double invert_linear_cell(double q0, double q1, double dx, double mass) {
  const double slope = (q1 - q0) / dx;
  double t;
  if (std::fabs(slope) * dx < 1e-14 * (q0 + q1 + 1e-300)) {
    t = q0 > 0.0 ? mass / q0 : 0.5 * dx;
  } else {
    const double disc = q0 * q0 + 2.0 * slope * mass;
    t = (std::sqrt(std::max(0.0, disc)) - q0) / slope;
  }
  return std::clamp(t, 0.0, dx);
}

}  // namespace

double Conditional1D::sample(RngStream& rng) const {
  if (const auto* g = std::get_if<Gaussian>(&rep_)) return rng.normal(g->mean, std::sqrt(g->var));
  if (const auto* gr = std::get_if<Grid>(&rep_)) {
    const double u = rng.uniform01();
    const auto it = std::upper_bound(gr->cdf.begin(), gr->cdf.end(), u);
    std::size_t j = it == gr->cdf.begin() ? 0 : static_cast<std::size_t>(it - gr->cdf.begin()) - 1;
    if (j + 1 >= gr->cdf.size()) j = gr->cdf.size() - 2;
    const double dx = (gr->hi - gr->lo) / static_cast<double>(gr->pdf.size() - 1);
    const double t = invert_linear_cell(gr->pdf[j], gr->pdf[j + 1], dx, u - gr->cdf[j]);
    return gr->lo + dx * static_cast<double>(j) + t;
  }
  const auto& a = std::get<Atoms>(rep_);
  double u = rng.uniform01();
  for (std::size_t j = 0; j + 1 < a.mass.size(); ++j) {
    u -= a.mass[j];
    if (u <= 0.0) return a.loc[j];
  }
  return a.loc.back();
}

double Conditional1D::density(double y) const {
  if (const auto* g = std::get_if<Gaussian>(&rep_)) {
    const double sd = std::sqrt(g->var);
    const double z = (y - g->mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * kSqrt2Pi);
  }
  if (const auto* gr = std::get_if<Grid>(&rep_)) {
    if (y < gr->lo || y > gr->hi) return 0.0;
    const double dx = (gr->hi - gr->lo) / static_cast<double>(gr->pdf.size() - 1);
    const double s = (y - gr->lo) / dx;
    std::size_t j = static_cast<std::size_t>(s);
    if (j + 1 >= gr->pdf.size()) j = gr->pdf.size() - 2;
    const double frac = s - static_cast<double>(j);
    return gr->pdf[j] * (1.0 - frac) + gr->pdf[j + 1] * frac;
  }
  throw Unsupported("Conditional1D: atoms have no density");
}

double Conditional1D::bound_on(double lo, double hi) const {
  if (!(hi >= lo)) throw InvalidInput("bound_on: empty interval");
  if (const auto* g = std::get_if<Gaussian>(&rep_)) {
    double at;
    if (g->mean < lo)
      at = lo;
    else if (g->mean > hi)
      at = hi;
    else
      at = g->mean;
    return density(at);
  }
  if (const auto* gr = std::get_if<Grid>(&rep_)) {
    const double a = std::max(lo, gr->lo), b = std::min(hi, gr->hi);
    if (a > b) return 0.0;
    // Piecewise-linear density attains its sup at nodes or clipped ends.
    double best = std::max(density(a), density(b));
    const double dx = (gr->hi - gr->lo) / static_cast<double>(gr->pdf.size() - 1);
    for (std::size_t j = 0; j < gr->pdf.size(); ++j) {
      const double t = gr->lo + dx * static_cast<double>(j);
      if (t >= a && t <= b) best = std::max(best, gr->pdf[j]);
    }
    return best;
  }
  throw Unsupported("bound_on: atoms have no density");
}

double Conditional1D::mean() const {
  if (const auto* g = std::get_if<Gaussian>(&rep_)) return g->mean;
  if (const auto* gr = std::get_if<Grid>(&rep_)) {
    const double dx = (gr->hi - gr->lo) / static_cast<double>(gr->pdf.size() - 1);
    double m = 0.0;
    for (std::size_t j = 0; j + 1 < gr->pdf.size(); ++j) {
      const double t0 = gr->lo + dx * static_cast<double>(j), t1 = t0 + dx;
      m += dx * (gr->pdf[j] * (2.0 * t0 + t1) + gr->pdf[j + 1] * (t0 + 2.0 * t1)) / 6.0;
    }
    return m;
  }
  const auto& a = std::get<Atoms>(rep_);
  double m = 0.0;
  for (std::size_t j = 0; j < a.loc.size(); ++j) m += a.loc[j] * a.mass[j];
  return m;
}

double Conditional1D::variance() const {
  if (const auto* g = std::get_if<Gaussian>(&rep_)) return g->var;
  const double m = mean();
  if (const auto* gr = std::get_if<Grid>(&rep_)) {
    const double dx = (gr->hi - gr->lo) / static_cast<double>(gr->pdf.size() - 1);
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < gr->pdf.size(); ++j) {
      const double t0 = gr->lo + dx * static_cast<double>(j), t1 = t0 + dx;
      s += dx *
           (gr->pdf[j] * (3.0 * t0 * t0 + 2.0 * t0 * t1 + t1 * t1) +
            gr->pdf[j + 1] * (t0 * t0 + 2.0 * t0 * t1 + 3.0 * t1 * t1)) /
           12.0;
    }
    return s - m * m;
  }
  const auto& a = std::get<Atoms>(rep_);
  double s = 0.0;
  for (std::size_t j = 0; j < a.loc.size(); ++j) s += a.loc[j] * a.loc[j] * a.mass[j];
  return s - m * m;
}

double Conditional1D::support_lo() const {
  if (const auto* g = std::get_if<Gaussian>(&rep_))
    return g->mean - kGaussianSupportSigmas * std::sqrt(g->var);
  if (const auto* gr = std::get_if<Grid>(&rep_)) return gr->lo;
  const auto& a = std::get<Atoms>(rep_);
  return *std::min_element(a.loc.begin(), a.loc.end());
}

double Conditional1D::support_hi() const {
  if (const auto* g = std::get_if<Gaussian>(&rep_))
    return g->mean + kGaussianSupportSigmas * std::sqrt(g->var);
  if (const auto* gr = std::get_if<Grid>(&rep_)) return gr->hi;
  const auto& a = std::get<Atoms>(rep_);
  return *std::max_element(a.loc.begin(), a.loc.end());
}

// ---------------------------------------------------------------------------
// Measure defaults

std::optional<double> Measure::exact_tail(int, double) const { return std::nullopt; }
std::optional<double> Measure::exact_moment2(int) const { return std::nullopt; }

// ---------------------------------------------------------------------------
// ProductMeasure

namespace {

class IidProductSampler : public Sampler {
 public:
  IidProductSampler(const ProductMeasure* model, RngStream stream)
      : model_(model), stream_(stream) {}
  Point draw() override {
    Point x(static_cast<std::size_t>(model_->dim()));
    for (int i = 0; i < model_->dim(); ++i)
      x[static_cast<std::size_t>(i)] = model_->conditional(i, x).sample(stream_);
    return x;
  }

 private:
  const ProductMeasure* model_;
  RngStream stream_;
};

}  // namespace

ProductMeasure::ProductMeasure(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {
  if (marginals_.empty()) throw InvalidInput("ProductMeasure: needs at least one coordinate");
  for (const auto& m : marginals_) {
    if (const auto* g = std::get_if<GaussianMarginal>(&m)) {
      if (!(g->var > 0.0)) throw InvalidInput("ProductMeasure: variance must be positive");
    } else if (const auto* u = std::get_if<UniformMarginal>(&m)) {
      if (!(u->hi > u->lo)) throw InvalidInput("ProductMeasure: empty uniform support");
    }
  }
}

ProductMeasure ProductMeasure::standard_normal(int n) {
  if (n <= 0) throw InvalidInput("ProductMeasure: dimension must be positive");
  return ProductMeasure(std::vector<Marginal>(static_cast<std::size_t>(n), GaussianMarginal{0.0, 1.0}));
}

Conditional1D ProductMeasure::conditional(int i, std::span<const double>) const {
  if (i < 0 || i >= dim()) throw InvalidInput("conditional: coordinate out of range");
  const auto& m = marginals_[static_cast<std::size_t>(i)];
  if (const auto* g = std::get_if<GaussianMarginal>(&m)) return Conditional1D::gaussian(g->mean, g->var);
  const auto& u = std::get<UniformMarginal>(m);
  const double c = 1.0 / (u.hi - u.lo);
  return Conditional1D::grid(u.lo, u.hi, {c, c});
}

std::unique_ptr<Sampler> ProductMeasure::sampler(RngStream stream) const {
  return std::make_unique<IidProductSampler>(this, stream);
}

std::optional<double> ProductMeasure::exact_tail(int i, double t) const {
  const auto& m = marginals_[static_cast<std::size_t>(i)];
  if (const auto* g = std::get_if<GaussianMarginal>(&m))
    return normal_two_sided_tail(g->mean, std::sqrt(g->var), t);
  const auto& u = std::get<UniformMarginal>(m);
  if (t <= 0.0) return 1.0;
  const double len = u.hi - u.lo;
  const double inside = std::max(0.0, std::min(u.hi, t) - std::max(u.lo, -t));
  return 1.0 - inside / len;
}

std::optional<double> ProductMeasure::exact_moment2(int i) const {
  const auto& m = marginals_[static_cast<std::size_t>(i)];
  if (const auto* g = std::get_if<GaussianMarginal>(&m)) return g->var + g->mean * g->mean;
  const auto& u = std::get<UniformMarginal>(m);
  return (u.lo * u.lo + u.lo * u.hi + u.hi * u.hi) / 3.0;
}

// ---------------------------------------------------------------------------
// CorrelatedGaussian

namespace {

class CholeskySampler : public Sampler {
 public:
  CholeskySampler(const Eigen::MatrixXd* chol, RngStream stream) : chol_(chol), stream_(stream) {}
  Point draw() override {
    const auto n = chol_->rows();
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = stream_.normal();
    Eigen::VectorXd x = (*chol_) * g;
    return Point(x.data(), x.data() + n);
  }

 private:
  const Eigen::MatrixXd* chol_;
  RngStream stream_;
};

}  // namespace

CorrelatedGaussian::CorrelatedGaussian(Eigen::MatrixXd covariance) : cov_(std::move(covariance)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() == 0)
    throw InvalidInput("CorrelatedGaussian: covariance must be square");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInput("CorrelatedGaussian: covariance must be symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose().eval());
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success)
    throw InvalidInput("CorrelatedGaussian: covariance not positive definite");
  chol_ = llt.matrixL();
  precision_ = llt.solve(Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols()));
}

Conditional1D CorrelatedGaussian::conditional(int i, std::span<const double> x) const {
  if (i < 0 || i >= dim()) throw InvalidInput("conditional: coordinate out of range");
  if (static_cast<int>(x.size()) != dim())
    throw InvalidInput("conditional: point length mismatch");
  const double pii = precision_(i, i);
  double s = 0.0;
  for (int j = 0; j < dim(); ++j)
    if (j != i) s += precision_(i, j) * x[static_cast<std::size_t>(j)];
  return Conditional1D::gaussian(-s / pii, 1.0 / pii);
}

std::unique_ptr<Sampler> CorrelatedGaussian::sampler(RngStream stream) const {
  return std::make_unique<CholeskySampler>(&chol_, stream);
}

std::optional<double> CorrelatedGaussian::exact_tail(int i, double t) const {
  return normal_two_sided_tail(0.0, std::sqrt(cov_(i, i)), t);
}

std::optional<double> CorrelatedGaussian::exact_moment2(int i) const { return cov_(i, i); }

// ---------------------------------------------------------------------------
// DiscreteMeasure

namespace {

class DiscreteSampler : public Sampler {
 public:
  DiscreteSampler(const DiscreteMeasure* model, const std::vector<double>* weights,
                  RngStream stream)
      : model_(model), weights_(weights), stream_(stream) {}
  Point draw() override {
    double u = stream_.uniform01();
    std::size_t flat = weights_->size() - 1;
    for (std::size_t s = 0; s < weights_->size(); ++s) {
      u -= (*weights_)[s];
      if (u <= 0.0) {
        flat = s;
        break;
      }
    }
    const int n = model_->dim();
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
      const std::size_t sz = model_->locations()[static_cast<std::size_t>(i)].size();
      idx[static_cast<std::size_t>(i)] = static_cast<int>(flat % sz);
      flat /= sz;
    }
    return model_->state(idx);
  }

 private:
  const DiscreteMeasure* model_;
  const std::vector<double>* weights_;
  RngStream stream_;
};

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<std::vector<double>> locations,
                                 std::vector<double> joint_weights)
    : locs_(std::move(locations)), weights_(std::move(joint_weights)) {
  if (locs_.empty()) throw InvalidInput("DiscreteMeasure: needs at least one coordinate");
  std::size_t states = 1;
  for (const auto& l : locs_) {
    if (l.empty()) throw InvalidInput("DiscreteMeasure: empty atom list");
    states *= l.size();
  }
  if (states != weights_.size())
    throw InvalidInput("DiscreteMeasure: weight table size mismatch");
  double total = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw InvalidInput("DiscreteMeasure: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidInput("DiscreteMeasure: zero total weight");
  for (auto& w : weights_) w /= total;
  strides_.resize(locs_.size());
  std::size_t s = 1;
  for (std::size_t i = locs_.size(); i-- > 0;) {
    strides_[i] = s;
    s *= locs_[i].size();
  }
}

DiscreteMeasure DiscreteMeasure::product(std::vector<std::vector<double>> locations,
                                         std::vector<std::vector<double>> masses) {
  if (locations.size() != masses.size())
    throw InvalidInput("DiscreteMeasure: locations/masses mismatch");
  std::size_t states = 1;
  for (const auto& l : locations) states *= l.size();
  std::vector<double> joint(states, 1.0);
  std::vector<std::size_t> strides(locations.size());
  std::size_t s = 1;
  for (std::size_t i = locations.size(); i-- > 0;) {
    strides[i] = s;
    s *= locations[i].size();
  }
  for (std::size_t flat = 0; flat < states; ++flat) {
    std::size_t rem = flat;
    for (std::size_t i = 0; i < locations.size(); ++i) {
      const std::size_t idx = rem / strides[i];
      rem %= strides[i];
      joint[flat] *= masses[i][idx];
    }
  }
  DiscreteMeasure m(std::move(locations), std::move(joint));
  m.product_ = true;
  return m;
}

std::size_t DiscreteMeasure::flat_index(std::span<const int> atom_idx) const {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < locs_.size(); ++i)
    flat += static_cast<std::size_t>(atom_idx[i]) * strides_[i];
  return flat;
}

double DiscreteMeasure::probability(std::span<const int> atom_idx) const {
  return weights_[flat_index(atom_idx)];
}

Point DiscreteMeasure::state(std::span<const int> atom_idx) const {
  Point x(locs_.size());
  for (std::size_t i = 0; i < locs_.size(); ++i)
    x[i] = locs_[i][static_cast<std::size_t>(atom_idx[i])];
  return x;
}

int DiscreteMeasure::atom_index(int i, double v) const {
  const auto& l = locs_[static_cast<std::size_t>(i)];
  for (std::size_t j = 0; j < l.size(); ++j)
    if (l[j] == v) return static_cast<int>(j);
  throw InvalidInput("DiscreteMeasure: point is off the atom grid");
}

Conditional1D DiscreteMeasure::conditional(int i, std::span<const double> x) const {
  if (i < 0 || i >= dim()) throw InvalidInput("conditional: coordinate out of range");
  std::vector<int> idx(locs_.size(), 0);
  for (int j = 0; j < dim(); ++j)
    if (j != i) idx[static_cast<std::size_t>(j)] = atom_index(j, x[static_cast<std::size_t>(j)]);
  const auto& l = locs_[static_cast<std::size_t>(i)];
  std::vector<double> mass(l.size());
  for (std::size_t a = 0; a < l.size(); ++a) {
    idx[static_cast<std::size_t>(i)] = static_cast<int>(a);
    mass[a] = weights_[flat_index(idx)];
  }
  return Conditional1D::atoms(l, std::move(mass));
}

std::unique_ptr<Sampler> DiscreteMeasure::sampler(RngStream stream) const {
  return std::make_unique<DiscreteSampler>(this, &weights_, stream);
}

std::optional<double> DiscreteMeasure::exact_tail(int i, double t) const {
  double p = 0.0;
  for (std::size_t flat = 0; flat < weights_.size(); ++flat) {
    const std::size_t idx = (flat / strides_[static_cast<std::size_t>(i)]) %
                            locs_[static_cast<std::size_t>(i)].size();
    if (std::fabs(locs_[static_cast<std::size_t>(i)][idx]) > t) p += weights_[flat];
  }
  return p;
}

std::optional<double> DiscreteMeasure::exact_moment2(int i) const {
  double s = 0.0;
  for (std::size_t flat = 0; flat < weights_.size(); ++flat) {
    const std::size_t idx = (flat / strides_[static_cast<std::size_t>(i)]) %
                            locs_[static_cast<std::size_t>(i)].size();
    const double v = locs_[static_cast<std::size_t>(i)][idx];
    s += v * v * weights_[flat];
  }
  return s;
}

// ---------------------------------------------------------------------------
// LatticePhi4

int Phi4Params::sites() const {
  int s = 1;
  for (int k = 0; k < d; ++k) s *= L;
  return s;
}

double phi4_action(const Phi4Params& params, std::span<const double> config) {
  if (static_cast<int>(config.size()) != params.sites())
    throw InvalidInput("phi4_action: config length mismatch");
  const double eps = params.eps_lat;
  const double grad_w = std::pow(eps, params.d - 2);
  const double vol_w = std::pow(eps, params.d);
  const int L = params.L;
  double grad = 0.0, mass = 0.0, quart = 0.0;
  const int n = params.sites();
  for (int s = 0; s < n; ++s) {
    const double phi = config[static_cast<std::size_t>(s)];
    mass += phi * phi;
    quart += phi * phi * phi * phi;
    // One forward bond per axis; periodic wrap.
    int stride = 1;
    for (int ax = params.d - 1; ax >= 0; --ax) {
      const int coord = (s / stride) % L;
      const int nb = (coord + 1 == L) ? s - coord * stride : s + stride;
      const double diff = phi - config[static_cast<std::size_t>(nb)];
      grad += diff * diff;
      stride *= L;
    }
  }
  return 0.5 * grad_w * grad + 0.5 * params.counter_term() * vol_w * mass +
         0.5 * params.lambda * vol_w * quart;
}

LatticePhi4::LatticePhi4(Phi4Params params) : params_(params) {
  if (params_.d < 1 || params_.d > 2) throw InvalidInput("LatticePhi4: d must be 1 or 2");
  if (params_.L < 2) throw InvalidInput("LatticePhi4: L must be >= 2");
  if (!(params_.eps_lat > 0.0)) throw InvalidInput("LatticePhi4: lattice spacing must be positive");
  if (!(params_.m0_sq > 0.0)) throw InvalidInput("LatticePhi4: bare mass must be positive");
  if (params_.lambda < 0.0) throw InvalidInput("LatticePhi4: coupling must be nonnegative");
  const int n = params_.sites();
  const int L = params_.L;
  neighbors_.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    auto& nb = neighbors_[static_cast<std::size_t>(s)];
    int stride = 1;
    for (int ax = 0; ax < params_.d; ++ax) {
      const int coord = (s / stride) % L;
      nb.push_back((coord + 1 == L) ? s - coord * stride : s + stride);
      nb.push_back((coord == 0) ? s + (L - 1) * stride : s - stride);
      stride *= L;
    }
  }
}

const std::vector<int>& LatticePhi4::neighbors(int site) const {
  return neighbors_[static_cast<std::size_t>(site)];
}

namespace {

struct SiteEnergy {
  double quad;   // t^2 coefficient
  double lin;    // -t coefficient (energy = quad t^2 - lin t + quart t^4)
  double quart;  // t^4 coefficient
};

SiteEnergy site_energy(const Phi4Params& p, std::span<const double> x,
                       const std::vector<int>& nbs) {
  const double eps = p.eps_lat;
  const double grad_w = std::pow(eps, p.d - 2);
  const double vol_w = std::pow(eps, p.d);
  double nbr_sum = 0.0;
  for (int nb : nbs) nbr_sum += x[static_cast<std::size_t>(nb)];
  return {p.d * grad_w + 0.5 * p.counter_term() * vol_w, grad_w * nbr_sum,
          0.5 * p.lambda * vol_w};
}

Conditional1D phi4_conditional(const Phi4Params& p, const SiteEnergy& e) {
  if (!(e.quad > 0.0) && !(e.quart > 0.0))
    throw NumericalError("phi4 conditional: unnormalizable site density");
  double center, sd;
  if (e.quad > 0.0) {
    center = e.lin / (2.0 * e.quad);
    sd = 1.0 / std::sqrt(2.0 * e.quad);
  } else {
    center = 0.0;
    sd = std::pow(2.0 * e.quart, -0.25);
  }
  auto energy = [&](double t) { return (e.quad * t - e.lin) * t + e.quart * t * t * t * t; };
  const double e0 = energy(center);
  auto raw_mass = [&](double w, int nodes) {
    const double lo = center - w * sd, hi = center + w * sd;
    const double dx = (hi - lo) / (nodes - 1);
    double m = 0.0, prev = std::exp(-(energy(lo) - e0));
    for (int j = 1; j < nodes; ++j) {
      const double cur = std::exp(-(energy(lo + j * dx) - e0));
      m += 0.5 * (prev + cur) * dx;
      prev = cur;
    }
    return m;
  };
  // Widen until the captured mass stops growing (relative 1e-9).
  double w = 8.0;
  double mass = raw_mass(w, 257);
  for (int iter = 0; iter < 60; ++iter) {
    const double w2 = 1.5 * w;
    const double mass2 = raw_mass(w2, 257);
    if (mass2 - mass <= 1e-9 * mass2) break;
    w = w2;
    mass = mass2;
    if (iter == 59) throw NumericalError("phi4 conditional: support expansion failed");
  }
  const double lo = center - 1.5 * w * sd, hi = center + 1.5 * w * sd;
  const int nodes = std::max(64, p.cond_grid);
  std::vector<double> pdf(static_cast<std::size_t>(nodes));
  const double dx = (hi - lo) / (nodes - 1);
  for (int j = 0; j < nodes; ++j)
    pdf[static_cast<std::size_t>(j)] = std::exp(-(energy(lo + j * dx) - e0));
  return Conditional1D::grid(lo, hi, std::move(pdf));
}

class GibbsSampler : public Sampler {
 public:
  GibbsSampler(const LatticePhi4* model, RngStream stream)
      : model_(model), stream_(stream), state_(static_cast<std::size_t>(model->dim()), 0.0) {
    for (int s = 0; s < model_->params().burnin_sweeps; ++s) sweep();
  }

  Point draw() override {
    for (int s = 0; s < std::max(1, model_->params().thinning); ++s) sweep();
    return state_;
  }

  long sweeps_used() const override { return sweeps_; }
  bool correlated() const override { return true; }

 private:
  void sweep() {
    ++sweeps_;
    const auto& p = model_->params();
    for (int site = 0; site < model_->dim(); ++site) {
      const SiteEnergy e = site_energy(p, state_, model_->neighbors(site));
      double t;
      if (e.quad > 0.0) {
        // Exact update: gaussian proposal, accept with exp(-quart * t^4).
        const double center = e.lin / (2.0 * e.quad);
        const double sd = 1.0 / std::sqrt(2.0 * e.quad);
        int attempts = 0;
        for (;;) {
          t = stream_.normal(center, sd);
          if (e.quart == 0.0) break;
          if (stream_.uniform01() <= std::exp(-e.quart * t * t * t * t)) break;
          if (++attempts > 100000) {
            t = phi4_conditional(p, e).sample(stream_);
            break;
          }
        }
      } else {
        t = phi4_conditional(p, e).sample(stream_);
      }
      if (std::fabs(t) > p.guard)
        throw NumericalError("LatticePhi4: divergence guard tripped");
      state_[static_cast<std::size_t>(site)] = t;
    }
  }

  const LatticePhi4* model_;
  RngStream stream_;
  Point state_;
  long sweeps_ = 0;
};

}  // namespace

Conditional1D LatticePhi4::conditional(int i, std::span<const double> x) const {
  if (i < 0 || i >= dim()) throw InvalidInput("conditional: coordinate out of range");
  if (static_cast<int>(x.size()) != dim())
    throw InvalidInput("conditional: point length mismatch");
  return phi4_conditional(params_, site_energy(params_, x, neighbors_[static_cast<std::size_t>(i)]));
}

std::unique_ptr<Sampler> LatticePhi4::sampler(RngStream stream) const {
  return std::make_unique<GibbsSampler>(this, stream);
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

Estimate mc_scalar(const Measure& model, long nsamples, std::uint64_t seed,
                   const std::function<double(const Point&)>& f) {
  if (nsamples <= 0) throw InvalidInput("estimator: nsamples must be positive");
  auto sampler = model.sampler(RngStream::root(seed));
  if (sampler->correlated()) {
    const int batches = static_cast<int>(std::min<long>(64, std::max<long>(2, nsamples / 16)));
    BatchTable table(1, batches);
    for (long s = 0; s < nsamples; ++s) {
      const double v = f(sampler->draw());
      table.add(std::span<const double>(&v, 1));
    }
    const double grad = 1.0;
    return {table.mean()[0], table.stderr_linear(std::span<const double>(&grad, 1)), nsamples,
            false};
  }
  RunningStat stat;
  for (long s = 0; s < nsamples; ++s) stat.add(f(sampler->draw()));
  return stat.estimate();
}

}  // namespace

Estimate estimate_tail(const Measure& model, int i, double threshold, long nsamples,
                       std::uint64_t seed) {
  if (i < 0 || i >= model.dim()) throw InvalidInput("estimate_tail: coordinate out of range");
  if (threshold < 0.0) throw InvalidInput("estimate_tail: threshold must be nonnegative");
  if (auto exact = model.exact_tail(i, threshold)) return {*exact, 0.0, 0, true};
  if (nsamples <= 0) throw InvalidInput("estimate_tail: nsamples must be positive");
  return mc_scalar(model, nsamples, seed, [i, threshold](const Point& x) {
    return std::fabs(x[static_cast<std::size_t>(i)]) > threshold ? 1.0 : 0.0;
  });
}

Estimate moment2(const Measure& model, int i, long nsamples, std::uint64_t seed) {
  if (i < 0 || i >= model.dim()) throw InvalidInput("moment2: coordinate out of range");
  if (auto exact = model.exact_moment2(i)) return {*exact, 0.0, 0, true};
  if (nsamples <= 0) throw InvalidInput("moment2: nsamples must be positive");
  return mc_scalar(model, nsamples, seed, [i](const Point& x) {
    const double v = x[static_cast<std::size_t>(i)];
    return v * v;
  });
}

double cond_density_bound(const Measure& model, int i, std::span<const double> x, double k_lo,
                          double k_hi) {
  const Conditional1D c = model.conditional(i, x);
  if (!c.has_density())
    throw Unsupported("cond_density_bound: conditional has no density representation");
  return c.bound_on(k_lo, k_hi);
}

}  // namespace nlform::meas
