#include "nlform/hilbert.hpp"

#include <algorithm>
#include <cmath>

#include "nlform/quadrature.hpp"

namespace nlform::hilb {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Enumerate per-axis indices of a flat grid index (axis 0 slowest).
inline void unflatten(int flat, int d, int n, int* idx) {
  for (int ax = d - 1; ax >= 0; --ax) {
    idx[ax] = flat % n;
    flat /= n;
  }
}

/// Circulant kernel c[r] of a Fourier multiplier on the periodic grid:
/// c[r] = n^{-d} sum_m mult(|k_m|^2) cos(2 pi m.r / n).
std::vector<double> circulant_kernel(const GridSpec& g,
                                     const std::function<double(double)>& mult) {
  const int n = g.n;
  const int N = g.size();
  const double k1 = kPi / g.half_extent;  // fundamental wavenumber
  // 1-d |k|^2 contributions per axis index.
  std::vector<double> ksq(static_cast<std::size_t>(n));
  std::vector<int> mval(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int m = j < n / 2 ? j : j - n;
    mval[static_cast<std::size_t>(j)] = m;
    ksq[static_cast<std::size_t>(j)] = (k1 * m) * (k1 * m);
  }
  std::vector<double> kernel(static_cast<std::size_t>(N), 0.0);
  std::vector<int> mi(static_cast<std::size_t>(g.d));
  std::vector<int> ri(static_cast<std::size_t>(g.d));
  for (int mf = 0; mf < N; ++mf) {
    unflatten(mf, g.d, n, mi.data());
    double kk = 0.0;
    for (int ax = 0; ax < g.d; ++ax) kk += ksq[static_cast<std::size_t>(mi[static_cast<std::size_t>(ax)])];
    const double w = mult(kk) / static_cast<double>(N);
    for (int rf = 0; rf < N; ++rf) {
      unflatten(rf, g.d, n, ri.data());
      long dot = 0;
      for (int ax = 0; ax < g.d; ++ax)
        dot += static_cast<long>(mval[static_cast<std::size_t>(mi[static_cast<std::size_t>(ax)])]) *
               ri[static_cast<std::size_t>(ax)];
      kernel[static_cast<std::size_t>(rf)] += w * std::cos(2.0 * kPi * static_cast<double>(dot) /
                                                           static_cast<double>(n));
    }
  }
  return kernel;
}

/// kernel[(j - r) mod n per axis] lookup.
inline double kernel_at(const std::vector<double>& kernel, const GridSpec& g, const int* ji,
                        const int* ri) {
  int flat = 0;
  for (int ax = 0; ax < g.d; ++ax) {
    int diff = ji[ax] - ri[ax];
    if (diff < 0) diff += g.n;
    flat = flat * g.n + diff;
  }
  return kernel[static_cast<std::size_t>(flat)];
}

Eigen::VectorXd decay_weights(const GridSpec& g) {
  const int N = g.size();
  const double s = 0.5 * (g.d + 1);
  Eigen::VectorXd w(N);
  std::vector<int> idx(static_cast<std::size_t>(g.d));
  for (int f = 0; f < N; ++f) {
    unflatten(f, g.d, g.n, idx.data());
    double xx = 0.0;
    for (int ax = 0; ax < g.d; ++ax) {
      const double x = -g.half_extent + g.h() * idx[static_cast<std::size_t>(ax)];
      xx += x * x;
    }
    w[f] = std::pow(xx + 1.0, -s);
  }
  return w;
}

Eigen::MatrixXd circulant_dense(const std::vector<double>& kernel, const GridSpec& g) {
  const int N = g.size();
  Eigen::MatrixXd A(N, N);
  std::vector<int> ji(static_cast<std::size_t>(g.d)), ri(static_cast<std::size_t>(g.d));
  for (int j = 0; j < N; ++j) {
    unflatten(j, g.d, g.n, ji.data());
    for (int r = 0; r < N; ++r) {
      unflatten(r, g.d, g.n, ri.data());
      A(j, r) = kernel_at(kernel, g, ji.data(), ri.data());
    }
  }
  return A;
}

}  // namespace

int GridSpec::size() const {
  int s = 1;
  for (int k = 0; k < d; ++k) s *= n;
  return s;
}

void GridSpec::validate() const {
  if (d < 1 || d > 3) throw InvalidInput("GridSpec: d must be 1, 2 or 3");
  if (!(half_extent > 0.0)) throw InvalidInput("GridSpec: half extent must be positive");
  if (n < 8 || n % 2 != 0) throw InvalidInput("GridSpec: n must be even and >= 8");
}

HInverse::HInverse(GridSpec grid) : grid_(grid) {
  grid_.validate();
  const double s = 0.5 * (grid_.d + 1);
  kernel_ = circulant_kernel(grid_, [s](double kk) { return std::pow(1.0 + kk, -s); });
  decay_ = decay_weights(grid_);
}

Eigen::VectorXd HInverse::apply(const Eigen::VectorXd& f) const {
  const int N = grid_.size();
  if (f.size() != N) throw InvalidInput("HInverse: grid function size mismatch");
  Eigen::VectorXd g = decay_.cwiseProduct(f);
  Eigen::VectorXd out(N);
  std::vector<int> ji(static_cast<std::size_t>(grid_.d)), ri(static_cast<std::size_t>(grid_.d));
  for (int j = 0; j < N; ++j) {
    unflatten(j, grid_.d, grid_.n, ji.data());
    double acc = 0.0;
    for (int r = 0; r < N; ++r) {
      unflatten(r, grid_.d, grid_.n, ri.data());
      acc += kernel_at(kernel_, grid_, ji.data(), ri.data()) * g[r];
    }
    out[j] = acc;
  }
  return decay_.cwiseProduct(out);
}

Eigen::MatrixXd HInverse::dense() const {
  Eigen::MatrixXd A = circulant_dense(kernel_, grid_);
  return decay_.asDiagonal() * A * decay_.asDiagonal();
}

EigenSystem eigensystem(const HInverse& op, int K, double residual_tol) {
  const GridSpec& g = op.grid();
  const int N = g.size();
  if (K < 1 || K > N) throw InvalidInput("eigensystem: K out of range");
  const Eigen::MatrixXd A = op.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigensystem: eigensolver failed to converge");

  EigenSystem out;
  out.grid = g;
  out.lambda.resize(K);
  out.vectors.resize(N, K);
  out.residuals.resize(K);
  const double hd = std::pow(g.h(), g.d);
  for (int i = 0; i < K; ++i) {
    const int src = N - 1 - i;  // solver returns ascending order
    out.lambda[i] = solver.eigenvalues()[src];
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    // Deterministic sign: first component of definite size is positive.
    for (int j = 0; j < N; ++j) {
      if (std::fabs(v[j]) > 1e-9) {
        if (v[j] < 0.0) v = -v;
        break;
      }
    }
    out.residuals[i] = (A * v - out.lambda[i] * v).norm();
    out.vectors.col(i) = v / std::sqrt(hd);  // h^d-orthonormal
  }
  if (out.lambda[K - 1] <= 0.0)
    throw NumericalError("eigensystem: nonpositive eigenvalue in requested range");
  if (out.residuals.maxCoeff() > residual_tol)
    throw NumericalError("eigensystem: residual above tolerance, max " +
                         std::to_string(out.residuals.maxCoeff()));

  out.normalization = std::max(1.0, out.lambda[0]);
  out.lambda /= out.normalization;
  out.lambda_sq_partial.resize(static_cast<std::size_t>(K));
  double acc = 0.0;
  for (int i = 0; i < K; ++i) {
    acc += out.lambda[i] * out.lambda[i];
    out.lambda_sq_partial[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

Eigen::VectorXd ScaleMap::to_weighted(const Eigen::VectorXd& coeffs) const {
  if (coeffs.size() > lambda.size()) throw InvalidInput("ScaleMap: too many coefficients");
  Eigen::VectorXd x(coeffs.size());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    x[i] = std::pow(lambda[i], level) * coeffs[i];
  return x;
}

Eigen::VectorXd ScaleMap::from_weighted(const Eigen::VectorXd& x) const {
  if (x.size() > lambda.size()) throw InvalidInput("ScaleMap: too many coefficients");
  Eigen::VectorXd a(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) a[i] = std::pow(lambda[i], -level) * x[i];
  return a;
}

std::vector<double> ScaleMap::weights() const {
  std::vector<double> beta(static_cast<std::size_t>(lambda.size()));
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    beta[static_cast<std::size_t>(i)] = std::pow(lambda[i], -2 * level);
  return beta;
}

double ScaleMap::weighted_norm(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    s += std::pow(lambda[i], -2 * level) * x[i] * x[i];
  return std::sqrt(s);
}

ScaleMap scale_map(const EigenSystem& eig, int level) {
  if (eig.count() == 0) throw InvalidInput("scale_map: empty eigen system");
  return {level, eig.lambda};
}

Eigen::MatrixXd free_field_covariance(const GridSpec& grid, double m0_sq,
                                      const EigenSystem& basis, int K) {
  grid.validate();
  if (!(m0_sq > 0.0)) throw InvalidInput("free_field_covariance: m0^2 must be positive");
  if (K < 1 || K > basis.count()) throw InvalidInput("free_field_covariance: K out of range");
  if (basis.grid.size() != grid.size() || basis.grid.d != grid.d)
    throw InvalidInput("free_field_covariance: basis grid mismatch");
  const auto kernel = circulant_kernel(grid, [m0_sq](double kk) { return 1.0 / (kk + m0_sq); });
  const Eigen::MatrixXd G0 = circulant_dense(kernel, grid);
  const double hd = std::pow(grid.h(), grid.d);
  const Eigen::MatrixXd Phi = basis.vectors.leftCols(K);
  Eigen::MatrixXd C = hd * (Phi.transpose() * (G0 * Phi));
  C = 0.5 * (C + C.transpose().eval());
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success)
    throw NumericalError("free_field_covariance: matrix not positive definite");
  return C;
}

GaussianCharacteristic::GaussianCharacteristic(Eigen::MatrixXd covariance)
    : cov_(std::move(covariance)) {
  if (cov_.rows() != cov_.cols()) throw InvalidInput("GaussianCharacteristic: matrix not square");
}

std::complex<double> GaussianCharacteristic::operator()(std::span<const double> coeffs) const {
  if (static_cast<Eigen::Index>(coeffs.size()) != cov_.rows())
    throw InvalidInput("GaussianCharacteristic: coefficient length mismatch");
  const Eigen::Map<const Eigen::VectorXd> phi(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return {std::exp(-0.5 * phi.dot(cov_ * phi)), 0.0};
}

double pd_gram_min_eig(const CharFunctional& c, const std::vector<Eigen::VectorXd>& test_fns) {
  const int k = static_cast<int>(test_fns.size());
  if (k < 1) throw InvalidInput("pd_gram_min_eig: needs at least one test function");
  Eigen::MatrixXcd G(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd diff = test_fns[static_cast<std::size_t>(i)] -
                                   test_fns[static_cast<std::size_t>(j)];
      G(i, j) = c(std::span<const double>(diff.data(), static_cast<std::size_t>(diff.size())));
    }
  }
  const Eigen::MatrixXcd H = 0.5 * (G + G.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(H);
  if (solver.info() != Eigen::Success) throw NumericalError("pd_gram_min_eig: eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

double wick4(double t, double a) {
  if (a < 0.0) throw InvalidInput("wick4: variance must be nonnegative");
  return t * t * t * t - 6.0 * a * t * t + 3.0 * a * a;
}

namespace {

double pairing_sum(const Eigen::MatrixXd& a, std::vector<int>& avail) {
  if (avail.empty()) return 1.0;
  const int i = avail.front();
  double total = 0.0;
  for (std::size_t pos = 1; pos < avail.size(); ++pos) {
    const int j = avail[pos];
    std::vector<int> rest;
    rest.reserve(avail.size() - 2);
    for (std::size_t q = 1; q < avail.size(); ++q)
      if (q != pos) rest.push_back(avail[q]);
    total += a(i, j) * pairing_sum(a, rest);
  }
  return total;
}

}  // namespace

double pairing_moment(const Eigen::MatrixXd& pair_values) {
  if (pair_values.rows() != pair_values.cols())
    throw InvalidInput("pairing_moment: table must be square");
  const int k = static_cast<int>(pair_values.rows());
  if (k % 2 != 0) return 0.0;  // odd moments vanish
  if (k > 16) throw ResourceLimit("pairing_moment: table too large");
  if (k == 0) return 1.0;
  std::vector<int> avail(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) avail[static_cast<std::size_t>(i)] = i;
  return pairing_sum(pair_values, avail);
}

long long double_factorial_odd(int n) {
  if (n < 1) throw InvalidInput("double_factorial_odd: n must be >= 1");
  if (n > 16) throw ResourceLimit("double_factorial_odd: n too large for exact integer");
  long long v = 1;
  for (int m = 2 * n - 1; m >= 3; m -= 2) v *= m;
  return v;
}

double lattice_propagator(int d, double eps, double m0_sq, std::span<const double> x,
                          double abs_tol) {
  if (d < 1 || d > 2) throw InvalidInput("lattice_propagator: d must be 1 or 2");
  if (!(eps > 0.0)) throw InvalidInput("lattice_propagator: eps must be positive");
  if (!(m0_sq > 0.0)) throw InvalidInput("lattice_propagator: m0^2 must be positive");
  if (static_cast<int>(x.size()) != d) throw InvalidInput("lattice_propagator: x length mismatch");
  for (double xi : x) {
    const double r = xi / eps;
    if (std::fabs(r - std::round(r)) > 1e-9)
      throw InvalidInput("lattice_propagator: x must lie on the eps-lattice");
  }
  const double kmax = kPi / eps;
  const double inv_eps_sq = 1.0 / (eps * eps);
  auto denom1 = [&](double k) { return 2.0 * inv_eps_sq * (1.0 - std::cos(eps * k)); };

  auto eval = [&](int panels) {
    if (d == 1) {
      auto f = [&](double k) {
        // cos is even; fabs keeps D(x) = D(-x) bit-exact.
        return std::cos(std::fabs(k * x[0])) / (denom1(k) + m0_sq);
      };
      return gauss_legendre_composite(f, -kmax, kmax, panels) / (2.0 * kPi);
    }
    // d == 2: tensorized panels.
    auto inner = [&](double k1) {
      auto f = [&](double k2) {
        return std::cos(std::fabs(k1 * x[0] + k2 * x[1])) / (denom1(k1) + denom1(k2) + m0_sq);
      };
      return gauss_legendre_composite(f, -kmax, kmax, panels);
    };
    return gauss_legendre_composite(inner, -kmax, kmax, panels) / (4.0 * kPi * kPi);
  };

  const int max_panels = d == 1 ? 1024 : 128;
  double prev = eval(4);
  double achieved = 0.0;
  for (int panels = 8; panels <= max_panels; panels *= 2) {
    const double cur = eval(panels);
    achieved = std::fabs(cur - prev);
    if (achieved <= abs_tol) return cur;
    prev = cur;
  }
  throw NumericalError("lattice_propagator: refinement stalled at " + std::to_string(achieved) +
                       " (target " + std::to_string(abs_tol) + ")");
}

}  // namespace nlform::hilb
