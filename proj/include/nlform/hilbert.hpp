#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "nlform/errors.hpp"

namespace nlform::hilb {

/// Periodic grid on [-R, R)^d.
struct GridSpec {
  int d = 1;
  double half_extent = 10.0;
  int n = 64;  // points per axis, even

  int size() const;
  double h() const { return 2.0 * half_extent / n; }
  void validate() const;
};

/// Discretization of the compact operator
///   H^{-1} = (|x|^2+1)^{-s} (-Delta+1)^{-s} (|x|^2+1)^{-s},  s = (d+1)/2,
/// with the fractional resolvent applied spectrally on the periodic grid and
/// the decay factor applied pointwise.  Symmetric positive definite.
class HInverse {
 public:
  explicit HInverse(GridSpec grid);

  const GridSpec& grid() const { return grid_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
  Eigen::MatrixXd dense() const;

 private:
  GridSpec grid_;
  Eigen::VectorXd decay_;       // (|x|^2+1)^{-s} at grid points
  std::vector<double> kernel_;  // circulant kernel of (-Delta+1)^{-s}
};

/// Top-K eigenpairs of the discretized H^{-1}, descending, with the
/// Hilbert-Schmidt witness sum(lambda_i^2) exposed as partial sums.
struct EigenSystem {
  GridSpec grid;
  Eigen::VectorXd lambda;               // descending, strictly positive
  Eigen::MatrixXd vectors;              // columns, orthonormal in h^d inner product
  Eigen::VectorXd residuals;            // ||H^-1 v - lambda v||
  std::vector<double> lambda_sq_partial;
  double normalization = 1.0;           // rescale factor max(1, lambda_1)

  int count() const { return static_cast<int>(lambda.size()); }
};

EigenSystem eigensystem(const HInverse& op, int K, double residual_tol = 1e-8);

/// Coefficient-space isometry between scale level m and the weighted l^2
/// space with weights lambda_i^{-2m}: x_i = lambda_i^m a_i.
struct ScaleMap {
  int level = 0;
  Eigen::VectorXd lambda;

  Eigen::VectorXd to_weighted(const Eigen::VectorXd& coeffs) const;
  Eigen::VectorXd from_weighted(const Eigen::VectorXd& x) const;
  /// beta_i = lambda_i^{-2m}.
  std::vector<double> weights() const;
  /// Norm at scale level m (plain l^2 of coefficients).
  static double level_norm(const Eigen::VectorXd& coeffs) { return coeffs.norm(); }
  double weighted_norm(const Eigen::VectorXd& x) const;
};

ScaleMap scale_map(const EigenSystem& eig, int level);

/// C_ij = (phi_i, (-Delta+m0^2)^{-1} phi_j) in the grid inner product.
Eigen::MatrixXd free_field_covariance(const GridSpec& grid, double m0_sq,
                                      const EigenSystem& basis, int K);

/// Characteristic functional of the centered Gaussian with covariance C:
/// C(phi) = exp(-1/2 phi^T C phi) on coefficient vectors.
class GaussianCharacteristic {
 public:
  explicit GaussianCharacteristic(Eigen::MatrixXd covariance);
  std::complex<double> operator()(std::span<const double> coeffs) const;
  const Eigen::MatrixXd& covariance() const { return cov_; }

 private:
  Eigen::MatrixXd cov_;
};

using CharFunctional = std::function<std::complex<double>(std::span<const double>)>;

/// Smallest eigenvalue of the Hermitian Gram matrix [C(phi_i - phi_j)].
double pd_gram_min_eig(const CharFunctional& c, const std::vector<Eigen::VectorXd>& test_fns);

/// Fourth Wick power of a centered Gaussian with variance a:
/// :t^4: = t^4 - 6 a t^2 + 3 a^2.
double wick4(double t, double a);

/// Sum over the (k-1)!! distinguished pairings of prod a_{ij}; odd k gives 0.
double pairing_moment(const Eigen::MatrixXd& pair_values);

/// (2n-1)!! for n >= 1.
long long double_factorial_odd(int n);

/// Infinite-volume lattice free propagator
///   D(x) = (2pi)^{-d} int_{[-pi/eps,pi/eps]^d}
///          (2 eps^{-2} sum_i (1-cos(eps k_i)) + m0^2)^{-1} e^{i k.x} dk,
/// evaluated by composite Gauss-Legendre panels refined to abs_tol.
double lattice_propagator(int d, double eps, double m0_sq, std::span<const double> x,
                          double abs_tol = 1e-8);

}  // namespace nlform::hilb
