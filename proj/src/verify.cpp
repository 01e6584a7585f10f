#include "nlform/verify.hpp"

#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>

#include "nlform/forms.hpp"
#include "nlform/hilbert.hpp"
#include "nlform/process.hpp"
#include "nlform/qr_check.hpp"
#include "nlform/quadrature.hpp"

namespace nlform::verify {

namespace {

using forms::CylinderFunction;
using forms::FormPair;
using forms::FormSpec;

/// Deterministic fixtures shared between criteria (no randomness inside).
struct Fixtures {
  hilb::GridSpec grid{1, 10.0, 256};
  hilb::EigenSystem eig;
  Eigen::MatrixXd cov;  // 128 x 128 free-field covariance in the eigenbasis

  Fixtures() {
    hilb::HInverse op(grid);
    eig = hilb::eigensystem(op, 128);
    cov = hilb::free_field_covariance(grid, 1.0, eig, 128);
  }
};

const Fixtures& fixtures() {
  static const Fixtures f;
  return f;
}

Record base_record(int id, std::uint64_t seed) {
  Record r;
  r.add("command", "verify").add("version", "nlform-0.1.0").add("criterion", id).add("seed", seed);
  return r;
}

// --- 1: lattice propagator closed form ------------------------------------

CriterionResult c1_propagator(std::uint64_t seed) {
  CriterionResult res{1, "propagator-closed-form", true, "", {}};
  for (double m0sq : {1.0, 100.0}) {
    const double x0 = 0.0;
    const double got = hilb::lattice_propagator(1, 1.0, m0sq, std::span<const double>(&x0, 1));
    const double want = 1.0 / (std::sqrt(m0sq) * std::sqrt(m0sq + 4.0));
    const double err = std::fabs(got - want);
    if (!(err < 1e-7)) res.pass = false;
    Record r = base_record(1, seed);
    r.add("m0_sq", m0sq).add("propagator", got).add("closed_form", want).add("abs_error", err);
    res.records.push_back(std::move(r));
  }
  res.detail = "d=1, m0^2 in {1,100}, |D(0) - closed form| < 1e-7";
  return res;
}

// --- 2: Gaussian moment law -----------------------------------------------

CriterionResult c2_moment_law(std::uint64_t seed) {
  const auto& fx = fixtures();
  const Eigen::LLT<Eigen::MatrixXd> llt(fx.cov);
  const Eigen::MatrixXd L = llt.matrixL();
  RngStream rng = RngStream::root(seed).substream(2);
  Eigen::VectorXd psi(fx.cov.rows());
  for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] = rng.normal();
  const Eigen::VectorXd sig = L.transpose() * psi;  // z = sig . g ~ N(0, psi^T C psi)

  const long n = 100000;
  BatchTable table(2, 100);
  for (long s = 0; s < n; ++s) {
    double z = 0.0;
    for (Eigen::Index i = 0; i < sig.size(); ++i) z += sig[i] * rng.normal();
    const double z2 = z * z;
    const double vals[2] = {z2, z2 * z2};
    table.add(vals);
  }
  const auto m = table.mean();
  const double diff = m[1] - 3.0 * m[0] * m[0];
  const double grad[2] = {-6.0 * m[0], 1.0};
  const double se = table.stderr_linear(grad);

  CriterionResult res{2, "gaussian-moment-law", std::fabs(diff) <= 3.0 * se, "", {}};
  Record r = base_record(2, seed);
  r.add("nsamples", n)
      .add("moment2", m[0])
      .add("moment4", m[1])
      .add("difference", diff)
      .add("stderr", se);
  res.records.push_back(std::move(r));
  res.detail = "E z^4 = 3 (E z^2)^2 within 3 stderr at 1e5 samples";
  return res;
}

// --- 3: Wick orthogonality -------------------------------------------------

CriterionResult c3_wick(std::uint64_t seed) {
  CriterionResult res{3, "wick4-orthogonality", true, "", {}};
  RngStream rng = RngStream::root(seed).substream(3);
  for (double a : {0.5, 1.0, 2.0}) {
    const long n = 100000;
    RunningStat stat;
    const double sd = std::sqrt(a);
    for (long s = 0; s < n; ++s) stat.add(hilb::wick4(rng.normal(0.0, sd), a));
    const bool ok = std::fabs(stat.mean()) <= 3.0 * stat.stderr_mean();
    if (!ok) res.pass = false;
    Record r = base_record(3, seed);
    r.add("variance", a).add("mean_wick4", stat.mean()).add("stderr", stat.stderr_mean()).add(
        "nsamples", n);
    res.records.push_back(std::move(r));
  }
  res.detail = "E :t^4: = 0 within 3 stderr for a in {0.5,1,2}";
  return res;
}

// --- 4: Gaussian inequality on the lattice field ----------------------------

CriterionResult c4_gaussian_inequality(std::uint64_t seed) {
  CriterionResult res{4, "gaussian-inequality", true, "", {}};
  RngStream site_rng = RngStream::root(seed).substream(4);
  const int n_quads = 20;
  std::vector<std::array<int, 4>> quads(n_quads);
  for (auto& q : quads)
    for (auto& s : q) s = static_cast<int>(site_rng.next_u64() % 8);

  for (double lambda : {0.0, 0.1}) {
    meas::Phi4Params params;
    params.d = 1;
    params.L = 8;
    params.eps_lat = 1.0;
    params.m0_sq = 1.0;
    params.lambda = lambda;
    params.burnin_sweeps = 1000;
    params.thinning = 4;
    const meas::LatticePhi4 model(params);
    auto sampler = model.sampler(RngStream::root(seed).substream(40 + (lambda > 0.0)));

    const long n = 20000;
    std::vector<BatchTable> tables(static_cast<std::size_t>(n_quads), BatchTable(7, 50));
    for (long s = 0; s < n; ++s) {
      const meas::Point x = sampler->draw();
      for (int q = 0; q < n_quads; ++q) {
        const auto& Q = quads[static_cast<std::size_t>(q)];
        const double p1 = x[static_cast<std::size_t>(Q[0])], p2 = x[static_cast<std::size_t>(Q[1])],
                     p3 = x[static_cast<std::size_t>(Q[2])], p4 = x[static_cast<std::size_t>(Q[3])];
        const double v[7] = {p1 * p2 * p3 * p4, p1 * p2, p3 * p4, p1 * p3,
                             p2 * p4,           p1 * p4, p2 * p3};
        tables[static_cast<std::size_t>(q)].add(v);
      }
    }
    double worst_margin = 1e300;
    double worst_equal = 0.0;
    for (int q = 0; q < n_quads; ++q) {
      const auto m = tables[static_cast<std::size_t>(q)].mean();
      const double pair_sum = m[1] * m[2] + m[3] * m[4] + m[5] * m[6];
      const double diff = pair_sum - m[0];  // must be >= 0 up to noise
      const double grad[7] = {-1.0, m[2], m[1], m[4], m[3], m[6], m[5]};
      const double se = tables[static_cast<std::size_t>(q)].stderr_linear(grad);
      if (!(diff >= -3.0 * se)) res.pass = false;
      worst_margin = std::min(worst_margin, diff + 3.0 * se);
      if (lambda == 0.0) {
        if (!(std::fabs(diff) <= 3.0 * se)) res.pass = false;
        worst_equal = std::max(worst_equal, se > 0 ? std::fabs(diff) / se : 0.0);
      }
    }
    Record r = base_record(4, seed);
    r.add("lambda", lambda)
        .add("quadruples", n_quads)
        .add("nsamples", n)
        .add("worst_margin", worst_margin)
        .add("worst_equality_sigma", worst_equal);
    res.records.push_back(std::move(r));
  }
  res.detail = "S4 <= sum of pairings + 3 stderr; equality at lambda=0";
  return res;
}

// --- 5: reversibility oracle ------------------------------------------------

meas::DiscreteMeasure make_discrete_test(std::uint64_t seed) {
  RngStream rng = RngStream::root(seed).substream(5);
  const std::vector<double> atoms = {-1.0, 0.0, 1.0};
  std::vector<double> weights(27);
  for (auto& w : weights) w = std::exp(rng.uniform(-1.0, 1.0));
  return meas::DiscreteMeasure({atoms, atoms, atoms}, std::move(weights));
}

CriterionResult c5_reversibility(std::uint64_t seed) {
  const meas::DiscreteMeasure model = make_discrete_test(seed);
  const auto rep = proc::reversibility_oracle(model, 1.0, 0.5, 20, seed ^ 0x5050u);
  CriterionResult res{5, "reversibility-oracle", true, "", {}};
  res.pass = rep.max_balance_violation < 1e-12 && rep.max_identity_rel_error < 1e-10 &&
             rep.max_rate_row_error < 1e-12;
  Record r = base_record(5, seed);
  r.add("states", rep.states)
      .add("max_balance_violation", rep.max_balance_violation)
      .add("max_identity_rel_error", rep.max_identity_rel_error)
      .add("max_rate_row_error", rep.max_rate_row_error);
  res.records.push_back(std::move(r));
  res.detail = "detailed balance < 1e-12; -<Qu,u> = E/2 to 1e-10 on 20 u";
  return res;
}

// --- 6: invariance of mu under the jump chain -------------------------------

CriterionResult c6_invariance(std::uint64_t seed) {
  const meas::ProductMeasure model = meas::ProductMeasure::standard_normal(2);
  const CylinderFunction u = CylinderFunction::bump(0, 0.0, 1.0);
  proc::JumpChainConfig cfg;
  cfg.alpha = 1.0;
  cfg.delta = 0.1;
  cfg.horizon = 5.0;
  cfg.jump_grid = 1024;
  const auto rep = proc::invariance_test(model, u, cfg, 10000, seed ^ 0x60606u);
  CriterionResult res{6, "chain-invariance", rep.pass(3.0), "", {}};
  Record r = base_record(6, seed);
  r.add("chains", rep.chains)
      .add("mean_at_horizon", rep.mean_horizon)
      .add("mean_fresh", rep.mean_fresh)
      .add("difference", rep.difference())
      .add("pooled_stderr", rep.pooled_se());
  res.records.push_back(std::move(r));
  res.detail = "|E u(X_T) - E_mu u| <= 3 pooled stderr, T=5, 1e4 chains";
  return res;
}

// --- 7: Markov contraction ---------------------------------------------------

CylinderFunction random_cylinder(RngStream& rng) {
  // Bounded smooth cylinder in two coordinates with range well outside
  // [0,1] so both clamps of phi_eps engage.
  const double a0 = rng.uniform(-2.0, 2.0);
  const double a1 = rng.uniform(-2.0, 2.0);
  const double c = rng.uniform(-0.5, 0.5);
  const double c0 = rng.uniform(-1.0, 1.0), s0 = rng.uniform(0.5, 2.0);
  const double c1 = rng.uniform(-1.0, 1.0), s1 = rng.uniform(0.5, 2.0);
  CylinderFunction f = CylinderFunction::sum(
      CylinderFunction::scaled(a0, CylinderFunction::bump(0, c0, s0)),
      CylinderFunction::sum(CylinderFunction::scaled(a1, CylinderFunction::bump(1, c1, s1)),
                            CylinderFunction::constant(c)));
  return f;
}

CriterionResult c7_contraction(std::uint64_t seed) {
  const meas::ProductMeasure model = meas::ProductMeasure::standard_normal(2);
  CriterionResult res{7, "markov-contraction", true, "", {}};
  RngStream rng = RngStream::root(seed).substream(7);
  const double deltas[1] = {0.1};
  double worst = 1e300;
  for (int k = 0; k < 10; ++k) {
    const CylinderFunction u = random_cylinder(rng);
    const CylinderFunction pu1 = forms::apply_contraction(forms::ContractionProfile(0.1), u);
    const CylinderFunction pu2 = forms::apply_contraction(forms::ContractionProfile(0.5), u);
    const FormPair pairs[3] = {{&u, &u}, {&pu1, &pu1}, {&pu2, &pu2}};
    const auto table =
        forms::form_crn(model, pairs, deltas, 1.0, {}, 4000, seed ^ (0x700u + static_cast<unsigned>(k)));
    const double eu = table[0][0].value;
    const double e1 = table[1][0].value;
    const double e2 = table[2][0].value;
    if (!(e1 <= eu && e2 <= eu)) res.pass = false;
    worst = std::min({worst, eu - e1, eu - e2});
    Record r = base_record(7, seed);
    r.add("function", k).add("form_u", eu).add("form_phi01_u", e1).add("form_phi05_u", e2);
    res.records.push_back(std::move(r));
  }
  res.detail = "E(phi_eps(u)) <= E(u) exactly under common random numbers";
  std::ostringstream os;
  os << res.detail << " (min margin " << worst << ")";
  res.detail = os.str();
  return res;
}

// --- 8: truncation monotonicity ----------------------------------------------

CriterionResult c8_monotonicity(std::uint64_t seed) {
  const meas::ProductMeasure model = meas::ProductMeasure::standard_normal(1);
  const CylinderFunction u = CylinderFunction::bump(0, 0.0, 1.0);
  const double deltas[4] = {0.4, 0.2, 0.1, 0.05};
  const auto rep =
      forms::truncation_monotonicity_check(model, u, deltas, 1.0, {}, 20000, seed ^ 0x8080u);
  CriterionResult res{8, "truncation-monotonicity", rep.nondecreasing, "", {}};
  Record r = base_record(8, seed);
  r.add("deltas", std::vector<double>(rep.deltas)).add("values", std::vector<double>(rep.values));
  res.records.push_back(std::move(r));
  res.detail = "delta ladder 0.4/0.2/0.1/0.05 gives nondecreasing estimates, exactly";
  return res;
}

// --- 9: Monte Carlo against exact and quadrature oracles ----------------------

CriterionResult c9_oracles(std::uint64_t seed) {
  CriterionResult res{9, "mc-vs-oracle", true, "", {}};

  // Three-atom single coordinate; exact enumerated value 2/3.
  const meas::DiscreteMeasure atoms =
      meas::DiscreteMeasure::product({{-1.0, 0.0, 1.0}}, {{1.0, 1.0, 1.0}});
  const CylinderFunction id = CylinderFunction::coordinate(0);
  FormSpec spec;
  spec.alpha = 1.0;
  spec.delta = 0.5;
  spec.samples_per_coord = 100000;
  const double exact = forms::form_exact_small(atoms, id, id, spec);
  const auto est = forms::form_i_estimate(atoms, id, id, 0, spec, seed ^ 0x9001u);
  const bool ok_atoms = std::fabs(exact - 2.0 / 3.0) < 1e-12 &&
                        std::fabs(est.value - exact) <= 3.0 * est.stderr_;
  if (!ok_atoms) res.pass = false;
  Record r1 = base_record(9, seed);
  r1.add("case", "discrete-atoms")
      .add("exact", exact)
      .add("estimate", est.value)
      .add("stderr", est.stderr_)
      .add("nsamples", est.nsamples);
  res.records.push_back(std::move(r1));

  // Standard normal, u = eta(x_1): 2-d quadrature oracle.
  const meas::ProductMeasure normal = meas::ProductMeasure::standard_normal(1);
  const CylinderFunction eta = CylinderFunction::bump(0, 0.0, 1.0);
  spec.delta = 0.1;
  const auto mc = forms::form_i_estimate(normal, eta, eta, 0, spec, seed ^ 0x9002u);
  const double delta = spec.delta;
  auto gauss = [](double t) { return std::exp(-0.5 * t * t) / 2.5066282746310005024; };
  seq::CutoffProfile prof;
  auto outer = [&](double y) {
    auto inner = [&](double yp) {
      const double d = y - yp;
      const double de = prof(y) - prof(yp);
      return de * de / (d * d) * gauss(yp);
    };
    double acc = 0.0;
    const double L = 8.0;
    if (y - delta > -L) acc += integrate(inner, -L, y - delta, 1e-10).value;
    if (y + delta < L) acc += integrate(inner, y + delta, L, 1e-10).value;
    return acc * gauss(y);
  };
  const double oracle = integrate(outer, -8.0, 8.0, 1e-8).value;
  const bool ok_quad = std::fabs(mc.value - oracle) <= 3.0 * mc.stderr_;
  if (!ok_quad) res.pass = false;
  Record r2 = base_record(9, seed);
  r2.add("case", "gaussian-cutoff")
      .add("oracle", oracle)
      .add("estimate", mc.value)
      .add("stderr", mc.stderr_)
      .add("nsamples", mc.nsamples);
  res.records.push_back(std::move(r2));
  res.detail = "2/3 exact value and 2-d quadrature both matched within 3 stderr";
  return res;
}

// --- 10: scale isometry -------------------------------------------------------

CriterionResult c10_isometry(std::uint64_t seed) {
  const auto& fx = fixtures();
  CriterionResult res{10, "tau-isometry", true, "", {}};
  RngStream rng = RngStream::root(seed).substream(10);
  for (int m : {-3, -2, 0, 2}) {
    const hilb::ScaleMap tau = hilb::scale_map(fx.eig, m);
    double worst_norm = 0.0, worst_round = 0.0;
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd a(fx.eig.count());
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.normal();
      const Eigen::VectorXd x = tau.to_weighted(a);
      worst_norm = std::max(worst_norm,
                            std::fabs(hilb::ScaleMap::level_norm(a) - tau.weighted_norm(x)));
      const Eigen::VectorXd back = tau.from_weighted(x);
      worst_round = std::max(worst_round, (back - a).cwiseAbs().maxCoeff());
    }
    if (!(worst_norm < 1e-10 && worst_round <= 1e-12)) res.pass = false;
    Record r = base_record(10, seed);
    r.add("level", m).add("worst_norm_discrepancy", worst_norm).add("worst_round_trip", worst_round);
    res.records.push_back(std::move(r));
  }
  res.detail = "norms agree to 1e-10, round trip to 1e-12, m in {-3,-2,0,2}";
  return res;
}

// --- 11: free-field quasi-regularity scheme ------------------------------------

CriterionResult c11_qr_scheme(std::uint64_t seed) {
  const auto& fx = fixtures();
  const meas::CorrelatedGaussian model(fx.cov);
  const qr::WeightScheme scheme = qr::free_field_scheme(fx.eig, -2, 1.0, 1.0);
  const auto rep = qr::check_condition(model, scheme, "4.3", fx.eig.count(), 1, seed ^ 0xb001u,
                                       1e-6);
  CriterionResult res{11, "free-field-qr", true, "", {}};
  // Termwise bound by the eigen table partial sums of lambda^2.
  bool bounded = true;
  for (int i = 0; i < fx.eig.count(); ++i) {
    const double lam2 = fx.eig.lambda[i] * fx.eig.lambda[i];
    if (rep.terms[static_cast<std::size_t>(i)] > lam2 * (1.0 + 1e-12)) bounded = false;
  }
  const bool verdict_ok = rep.verdict == qr::Verdict::ConsistentWithFinite;
  res.pass = bounded && verdict_ok;
  Record r = base_record(11, seed);
  r.add("terms", static_cast<long>(rep.terms.size()))
      .add("total", rep.partial_sums.back())
      .add("lambda_sq_total", fx.eig.lambda_sq_partial.back())
      .add("termwise_bounded", bounded)
      .add("verdict", qr::verdict_name(rep.verdict));
  res.records.push_back(std::move(r));
  res.detail = "condition-4.3 sums bounded by sum lambda^2 termwise; verdict consistent";
  return res;
}

// --- 12: Bochner-Minlos diagnostics ---------------------------------------------

CriterionResult c12_bochner_minlos(std::uint64_t seed) {
  const auto& fx = fixtures();
  const int K = 16;
  const Eigen::MatrixXd C = fx.cov.topLeftCorner(K, K);
  const hilb::GaussianCharacteristic gauss(C);
  hilb::CharFunctional cf = [&gauss](std::span<const double> v) { return gauss(v); };

  RngStream rng = RngStream::root(seed).substream(12);
  std::vector<Eigen::VectorXd> tests(20, Eigen::VectorXd(K));
  for (auto& t : tests)
    for (int i = 0; i < K; ++i) t[i] = 0.7 * rng.normal();
  const double min_eig = hilb::pd_gram_min_eig(cf, tests);

  // Remark-6 continuity inequality on random pairs.
  bool remark6 = true;
  double worst_slack = 1e300;
  for (int p = 0; p < 1000; ++p) {
    Eigen::VectorXd phi(K), psi(K);
    for (int i = 0; i < K; ++i) {
      phi[i] = 0.5 * rng.normal();
      psi[i] = 0.5 * rng.normal();
    }
    const Eigen::VectorXd sum = psi + phi;
    const double lhs = std::norm(cf(std::span<const double>(sum.data(), static_cast<std::size_t>(K))) -
                                 cf(std::span<const double>(psi.data(), static_cast<std::size_t>(K))));
    const double rhs =
        2.0 * std::abs(cf(std::span<const double>(phi.data(), static_cast<std::size_t>(K))) - 1.0);
    if (lhs > rhs + 1e-12) remark6 = false;
    worst_slack = std::min(worst_slack, rhs - lhs);
  }

  // Negative control: a corrupted functional must fail the Gram check.
  hilb::CharFunctional bad = [&gauss](std::span<const double> v) {
    double nn = 0.0;
    for (double x : v) nn += x * x;
    return gauss(v) * (1.0 + 0.5 * std::sin(std::sqrt(nn)));
  };
  const double bad_eig = hilb::pd_gram_min_eig(bad, tests);

  CriterionResult res{12, "bochner-minlos", true, "", {}};
  res.pass = min_eig >= -1e-10 && remark6 && bad_eig < -1e-10;
  Record r = base_record(12, seed);
  r.add("gram_min_eig", min_eig)
      .add("remark6_holds", remark6)
      .add("remark6_min_slack", worst_slack)
      .add("corrupted_min_eig", bad_eig);
  res.records.push_back(std::move(r));
  res.detail = "Gram PSD to -1e-10; Remark-6 inequality; corrupted control fails";
  return res;
}

using CriterionFn = CriterionResult (*)(std::uint64_t);

const std::vector<std::pair<int, CriterionFn>>& criterion_table() {
  static const std::vector<std::pair<int, CriterionFn>> t = {
      {1, c1_propagator},   {2, c2_moment_law}, {3, c3_wick},
      {4, c4_gaussian_inequality}, {5, c5_reversibility}, {6, c6_invariance},
      {7, c7_contraction},  {8, c8_monotonicity}, {9, c9_oracles},
      {10, c10_isometry},   {11, c11_qr_scheme},  {12, c12_bochner_minlos},
  };
  return t;
}

std::string records_blob(const CriterionResult& r) {
  std::string s;
  for (const auto& rec : r.records) {
    s += rec.to_json_line();
    s += '\n';
  }
  return s;
}

}  // namespace

bool SuiteResult::all_pass() const {
  for (const auto& c : criteria)
    if (!c.pass) return false;
  return true;
}

SuiteResult run_acceptance(std::uint64_t seed) {
  SuiteResult suite;
  for (const auto& [id, fn] : criterion_table()) suite.criteria.push_back(fn(seed));

  // 13: determinism.  Re-run every criterion with the same seed and demand
  // byte-identical records.
  CriterionResult det{13, "determinism-replay", true, "", {}};
  for (std::size_t k = 0; k < criterion_table().size(); ++k) {
    const CriterionResult again = criterion_table()[k].second(seed);
    const bool same = records_blob(again) == records_blob(suite.criteria[k]);
    if (!same) det.pass = false;
    Record r = base_record(13, seed);
    r.add("criterion_checked", again.id).add("byte_identical", same);
    det.records.push_back(std::move(r));
  }
  det.detail = "criteria 1-12 replayed with the same seed, records byte-identical";
  suite.criteria.push_back(std::move(det));
  return suite;
}

void print_table(const SuiteResult& suite, std::ostream& out) {
  for (const auto& c : suite.criteria) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << std::left
        << std::setw(26) << c.name << std::right << "  " << c.detail << '\n';
  }
  out << (suite.all_pass() ? "acceptance: all criteria passed"
                           : "acceptance: FAILURES present")
      << '\n';
}

}  // namespace nlform::verify
