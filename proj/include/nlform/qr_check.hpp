#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlform/hilbert.hpp"
#include "nlform/measures.hpp"

namespace nlform::qr {

enum class SpaceTag { Lp, Linf, RN };

/// Weight scheme for a quasi-regularity check.  For the free-field tags
/// the weights come straight from an eigen table.
struct WeightScheme {
  SpaceTag space = SpaceTag::Lp;
  double p = 2.0;
  std::vector<double> beta;
  std::vector<double> gamma;
  double m0 = 1.0;     // the threshold constant M_0
  double alpha = 1.0;
  std::string source = "manual";
  std::vector<double> gamma_inv_partial;  // summability witness

  int terms() const { return static_cast<int>(beta.size()); }
  void validate() const;
};

WeightScheme manual_scheme(SpaceTag space, double p, std::vector<double> beta,
                           std::vector<double> gamma, double m0, double alpha);

/// beta_i = lambda_i^{-2m}, gamma_i = lambda_i^{-2}, p = 2, for scale level
/// m in {-2, -3}.
WeightScheme free_field_scheme(const hilb::EigenSystem& eig, int m_level, double alpha,
                               double m0 = 1.0);

enum class Verdict { ConsistentWithFinite, Inconclusive, Diverging };

const char* verdict_name(Verdict v);

struct QRReport {
  std::string condition;
  std::vector<double> terms;
  std::vector<double> partial_sums;
  std::vector<double> term_stderr;
  Verdict verdict = Verdict::Inconclusive;
  double increment_threshold = 1e-6;
  double m_used = 0.0;          // the M attaining the reported series (sup-type conditions)
  double sup_total = 0.0;       // for sup-type conditions: max over the M grid
  long density_bound_samples = 0;
};

/// Partial sums of the named tail-sum condition.  Conditions 4.3/4.52
/// (weighted lp) and 4.5/4.54 (weighted linf) need only tail estimates;
/// 4.53/4.55/4.56 also need conditional density bounds and scan the M grid
/// for the sup.
QRReport check_condition(const meas::Measure& model, const WeightScheme& scheme,
                         const std::string& condition, int n_terms, long samples,
                         std::uint64_t seed, double increment_threshold,
                         std::span<const double> m_grid = {}, long density_samples = 32);

/// Second-moment sufficient condition (4.8 for lp, 4.9 for linf).
QRReport chebyshev_sufficient(const meas::Measure& model, const WeightScheme& scheme, int n_terms,
                              long samples, std::uint64_t seed, double increment_threshold);

struct SupportTable {
  std::vector<double> m_values;
  std::vector<double> probability;
  std::vector<double> stderr_;
};

/// MC estimates of mu(|X_i| <= M beta_i^{-1/p} gamma_i^{-1/p} for all i).
SupportTable support_estimate(const meas::Measure& model, const WeightScheme& scheme,
                              std::span<const double> m_grid, long nsamples, std::uint64_t seed);

}  // namespace nlform::qr
