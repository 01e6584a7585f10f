#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nlform/errors.hpp"

namespace nlform {

/// Monte-Carlo estimate with its standard error.  `exact` marks closed-form
/// values (stderr 0 by construction).
struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  long n = 0;
  bool exact = false;
};

/// Welford accumulator; merging is associative, so block results can be
/// combined in deterministic block order.
class RunningStat {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const RunningStat& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * nb / (na + nb);
    m2_ += o.m2_ + d * d * na * nb / (na + nb);
    n_ += o.n_;
  }
  long n() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_mean() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  Estimate estimate() const { return {mean(), stderr_mean(), n(), false}; }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Batch-mean accumulator for vector-valued samples.  Standard errors are
/// taken across batch means, which absorbs autocorrelation from MCMC chains;
/// nonlinear functions of the means get delta-method errors.
class BatchTable {
 public:
  BatchTable(int dim, int batches) : dim_(dim), batches_(batches), sums_(), counts_() {
    if (dim <= 0 || batches <= 0) throw InvalidInput("BatchTable: dim and batches must be positive");
    sums_.assign(static_cast<std::size_t>(dim) * batches, 0.0);
    counts_.assign(batches, 0);
  }

  void add(std::span<const double> sample) {
    const int b = static_cast<int>(total_ % batches_);
    ++total_;
    ++counts_[b];
    double* row = &sums_[static_cast<std::size_t>(b) * dim_];
    for (int j = 0; j < dim_; ++j) row[j] += sample[j];
  }

  long total() const { return total_; }

  std::vector<double> mean() const {
    std::vector<double> m(dim_, 0.0);
    for (int b = 0; b < batches_; ++b)
      for (int j = 0; j < dim_; ++j) m[j] += sums_[static_cast<std::size_t>(b) * dim_ + j];
    for (auto& v : m) v /= static_cast<double>(total_);
    return m;
  }

  /// Standard error of sum_j grad[j]*mean[j] from the spread of batch means.
  double stderr_linear(std::span<const double> grad) const {
    int used = 0;
    for (int b = 0; b < batches_; ++b)
      if (counts_[b] > 0) ++used;
    if (used < 2) return 0.0;
    std::vector<double> proj;
    proj.reserve(used);
    for (int b = 0; b < batches_; ++b) {
      if (counts_[b] == 0) continue;
      double s = 0.0;
      for (int j = 0; j < dim_; ++j)
        s += grad[j] * sums_[static_cast<std::size_t>(b) * dim_ + j] / counts_[b];
      proj.push_back(s);
    }
    double m = 0.0;
    for (double v : proj) m += v;
    m /= proj.size();
    double var = 0.0;
    for (double v : proj) var += (v - m) * (v - m);
    var /= (proj.size() - 1);
    return std::sqrt(var / proj.size());
  }

 private:
  int dim_;
  int batches_;
  std::vector<double> sums_;
  std::vector<long> counts_;
  long total_ = 0;
};

/// P(|X| > t) for X ~ N(mean, sd^2), t >= 0.
inline double normal_two_sided_tail(double mean, double sd, double t) {
  if (t <= 0.0) return 1.0;
  if (sd <= 0.0) return std::fabs(mean) > t ? 1.0 : 0.0;
  const double inv = 1.0 / (sd * std::sqrt(2.0));
  return 0.5 * (std::erfc((t - mean) * inv) + std::erfc((t + mean) * inv));
}

/// Kolmogorov-Smirnov p-value (asymptotic) for statistic d with n samples.
inline double ks_p_value(double d, long n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lam = (rn + 0.12 + 0.11 / rn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
  }
  if (sum < 0.0) sum = 0.0;
  if (sum > 1.0) sum = 1.0;
  return sum;
}

}  // namespace nlform
