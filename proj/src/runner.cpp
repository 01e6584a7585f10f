#include "nlform/runner.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nlform/forms.hpp"
#include "nlform/hilbert.hpp"
#include "nlform/process.hpp"
#include "nlform/qr_check.hpp"
#include "nlform/records.hpp"
#include "nlform/verify.hpp"

namespace nlform::cli {

namespace {

constexpr const char* kVersion = "nlform-0.1.0";

std::uint64_t block_seed(std::uint64_t seed, int block) {
  return seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(block + 1));
}

template <class Fn>
void parallel_blocks(int blocks, int threads, Fn fn) {
  if (threads <= 1 || blocks <= 1) {
    for (int b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int nw = std::min(threads, blocks);
  workers.reserve(static_cast<std::size_t>(nw));
  for (int t = 0; t < nw; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const int b = next.fetch_add(1);
        if (b >= blocks) return;
        fn(b);
      }
    });
  }
  for (auto& w : workers) w.join();
}

std::vector<double> load_lambda_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open eigen table: " + path);
  std::vector<std::pair<long, double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("lambda")) continue;
    rows.emplace_back(j.value("index", static_cast<long>(rows.size() + 1)),
                      j["lambda"].get<double>());
  }
  if (rows.empty()) throw InvalidInput("eigen table has no eigenvalue records: " + path);
  std::sort(rows.begin(), rows.end());
  std::vector<double> lambda;
  lambda.reserve(rows.size());
  for (const auto& [idx, lam] : rows) lambda.push_back(lam);
  return lambda;
}

std::vector<double> materialize_weights(const std::string& text, int n, const std::string& what) {
  const auto [name, args] = parse_call(text, what);
  std::vector<double> out(static_cast<std::size_t>(n));
  if (name == "constant") {
    if (args.size() != 1) throw InvalidInput(what + ": constant(c) takes one argument");
    const double c = std::stod(args[0]);
    for (auto& v : out) v = c;
    return out;
  }
  if (name == "power") {
    if (args.size() != 1) throw InvalidInput(what + ": power(a) takes one argument");
    const double a = std::stod(args[0]);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::pow(i + 1, -a);
    return out;
  }
  if (name == "eigen") {
    if (args.size() != 2) throw InvalidInput(what + ": eigen(path,m) takes two arguments");
    const auto lambda = load_lambda_table(args[0]);
    if (static_cast<int>(lambda.size()) < n)
      throw InvalidInput(what + ": eigen table shorter than requested length");
    const double m = std::stod(args[1]);
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = std::pow(lambda[static_cast<std::size_t>(i)], -2.0 * m);
    return out;
  }
  throw InvalidInput(what + ": unknown weight generator '" + name + "'");
}

hilb::GridSpec grid_from(const ExperimentConfig& cfg) {
  hilb::GridSpec g;
  g.d = static_cast<int>(cfg.get_long("grid", "d", 1));
  g.half_extent = cfg.get_double("grid", "extent", 10.0);
  g.n = static_cast<int>(cfg.get_long("grid", "n", 64));
  g.validate();
  return g;
}

}  // namespace

std::unique_ptr<meas::Measure> build_model(const ExperimentConfig& cfg) {
  const std::string kind = cfg.require("model", "kind");
  if (kind == "product-1d") {
    const int dim = static_cast<int>(cfg.get_long("model", "dim"));
    const auto [name, args] = parse_call(cfg.get_string("model", "marginal", "gaussian(0,1)"),
                                         "model.marginal");
    meas::ProductMeasure::Marginal m;
    if (name == "gaussian") {
      if (args.size() != 2) throw InvalidInput("model.marginal: gaussian(mean,var)");
      m = meas::ProductMeasure::GaussianMarginal{std::stod(args[0]), std::stod(args[1])};
    } else if (name == "uniform") {
      if (args.size() != 2) throw InvalidInput("model.marginal: uniform(lo,hi)");
      m = meas::ProductMeasure::UniformMarginal{std::stod(args[0]), std::stod(args[1])};
    } else {
      throw InvalidInput("model.marginal: unknown marginal '" + name + "'");
    }
    return std::make_unique<meas::ProductMeasure>(
        std::vector<meas::ProductMeasure::Marginal>(static_cast<std::size_t>(dim), m));
  }
  if (kind == "correlated-gaussian") {
    const int dim = static_cast<int>(cfg.get_long("model", "dim"));
    const double rho = cfg.get_double("model", "rho");
    Eigen::MatrixXd cov(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) cov(i, j) = std::pow(rho, std::abs(i - j));
    return std::make_unique<meas::CorrelatedGaussian>(cov);
  }
  if (kind == "free-field") {
    const hilb::GridSpec grid = grid_from(cfg);
    const int K = static_cast<int>(cfg.get_long("grid", "K", 32));
    const double m0sq = cfg.get_double("model", "m0sq", 1.0);
    const hilb::HInverse op(grid);
    const auto eig = hilb::eigensystem(op, K);
    return std::make_unique<meas::CorrelatedGaussian>(
        hilb::free_field_covariance(grid, m0sq, eig, K));
  }
  if (kind == "lattice-phi4") {
    meas::Phi4Params p;
    p.d = static_cast<int>(cfg.get_long("model", "d", 1));
    p.L = static_cast<int>(cfg.get_long("model", "L", 8));
    p.eps_lat = cfg.get_double("model", "eps", 1.0);
    p.m0_sq = cfg.get_double("model", "m0sq", 1.0);
    p.lambda = cfg.get_double("model", "lambda", 0.0);
    if (cfg.has("model", "a_eps")) p.a_eps = cfg.get_double("model", "a_eps");
    p.burnin_sweeps = static_cast<int>(cfg.get_long("model", "burnin", 500));
    p.thinning = static_cast<int>(cfg.get_long("model", "thinning", 4));
    p.cond_grid = static_cast<int>(cfg.get_long("model", "cond_grid", 512));
    return std::make_unique<meas::LatticePhi4>(p);
  }
  if (kind == "discrete-test") {
    const int dim = static_cast<int>(cfg.get_long("model", "dim", 1));
    const auto atoms = parse_double_list(cfg.require("model", "atoms"), "model.atoms");
    std::vector<std::vector<double>> locs(static_cast<std::size_t>(dim), atoms);
    if (cfg.has("model", "weights")) {
      auto joint = parse_double_list(cfg.require("model", "weights"), "model.weights");
      return std::make_unique<meas::DiscreteMeasure>(std::move(locs), std::move(joint));
    }
    std::vector<double> masses(atoms.size(), 1.0);
    if (cfg.has("model", "masses"))
      masses = parse_double_list(cfg.require("model", "masses"), "model.masses");
    if (masses.size() != atoms.size())
      throw InvalidInput("model.masses must match model.atoms in length");
    return std::make_unique<meas::DiscreteMeasure>(meas::DiscreteMeasure::product(
        std::move(locs), std::vector<std::vector<double>>(static_cast<std::size_t>(dim), masses)));
  }
  throw InvalidInput("model.kind: unknown model kind '" + kind + "'");
}

namespace {

seq::BoxSpec box_from_space(const ExperimentConfig& cfg) {
  const std::string kind = cfg.get_string("space", "kind", "lp");
  const int dim = static_cast<int>(cfg.get_long("space", "dim"));
  auto beta = materialize_weights(cfg.get_string("space", "beta", "constant(1)"), dim, "space.beta");
  auto gamma =
      materialize_weights(cfg.get_string("space", "gamma", "constant(1)"), dim, "space.gamma");
  seq::SpaceSpec space;
  if (kind == "lp")
    space = seq::SpaceSpec::lp(cfg.get_double("space", "p", 2.0), std::move(beta));
  else if (kind == "linf")
    space = seq::SpaceSpec::linf(std::move(beta));
  else if (kind == "rn")
    space = seq::SpaceSpec::product_rn(dim);
  else
    throw InvalidInput("space.kind must be lp, linf or rn");
  return seq::BoxSpec::make(space, cfg.get_double("space", "M", 1.0), std::move(gamma));
}

}  // namespace

seq::CylinderFunction build_function(const ExperimentConfig& cfg) {
  const std::string kind = cfg.require("function", "kind");
  if (kind == "box-cutoffs") {
    // prod_{i<=k} eta_{M,i}(x_i) with the plateau radii of the configured box.
    const seq::BoxSpec box = box_from_space(cfg);
    const int k = static_cast<int>(cfg.get_long("function", "k", box.dim()));
    if (k < 1 || k > box.dim()) throw InvalidInput("function.k out of range for the space");
    std::vector<double> scales(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) scales[static_cast<std::size_t>(i)] = box.radius(i);
    return seq::CylinderFunction::product_of_bumps(scales);
  }
  if (kind == "coordinate")
    return seq::CylinderFunction::coordinate(static_cast<int>(cfg.get_long("function", "coord")) - 1);
  if (kind == "cutoff")
    return seq::CylinderFunction::bump(static_cast<int>(cfg.get_long("function", "coord")) - 1,
                                       cfg.get_double("function", "center", 0.0),
                                       cfg.get_double("function", "scale", 1.0));
  if (kind == "product-of-cutoffs") {
    const auto scales = parse_double_list(cfg.require("function", "scales"), "function.scales");
    return seq::CylinderFunction::product_of_bumps(scales);
  }
  if (kind == "polynomial") {
    const auto coeffs = parse_double_list(cfg.require("function", "coeffs"), "function.coeffs");
    return seq::CylinderFunction::polynomial(static_cast<int>(cfg.get_long("function", "coord")) - 1,
                                             coeffs);
  }
  if (kind == "constant")
    return seq::CylinderFunction::constant(cfg.get_double("function", "scale", 1.0));
  throw InvalidInput("function.kind: unknown test function '" + kind + "'");
}

namespace {

qr::WeightScheme build_scheme(const ExperimentConfig& cfg, int n_terms) {
  if (cfg.has("scheme", "m")) {
    // Free-field scheme straight from an eigen table.
    const int m = static_cast<int>(cfg.get_long("scheme", "m"));
    const auto lambda = load_lambda_table(cfg.require("scheme", "eig"));
    if (static_cast<int>(lambda.size()) < n_terms)
      throw InvalidInput("scheme: eigen table shorter than qr.terms");
    qr::WeightScheme s;
    s.space = qr::SpaceTag::Lp;
    s.p = 2.0;
    s.m0 = cfg.get_double("scheme", "M0", 1.0);
    s.alpha = cfg.get_double("scheme", "alpha", 1.0);
    s.source = m == -2 ? "free-field-m(-2)" : "free-field-m(-3)";
    if (m != -2 && m != -3) throw InvalidInput("scheme.m must be -2 or -3");
    s.beta.resize(static_cast<std::size_t>(n_terms));
    s.gamma.resize(static_cast<std::size_t>(n_terms));
    s.gamma_inv_partial.resize(static_cast<std::size_t>(n_terms));
    double acc = 0.0;
    for (int i = 0; i < n_terms; ++i) {
      const double lam = lambda[static_cast<std::size_t>(i)];
      s.beta[static_cast<std::size_t>(i)] = std::pow(lam, -2.0 * m);
      s.gamma[static_cast<std::size_t>(i)] = 1.0 / (lam * lam);
      acc += lam * lam;
      s.gamma_inv_partial[static_cast<std::size_t>(i)] = acc;
    }
    s.validate();
    return s;
  }
  const std::string space = cfg.get_string("scheme", "space", "lp");
  qr::SpaceTag tag;
  if (space == "lp")
    tag = qr::SpaceTag::Lp;
  else if (space == "linf")
    tag = qr::SpaceTag::Linf;
  else if (space == "rn")
    tag = qr::SpaceTag::RN;
  else
    throw InvalidInput("scheme.space must be lp, linf or rn");
  return qr::manual_scheme(
      tag, cfg.get_double("scheme", "p", 2.0),
      materialize_weights(cfg.get_string("scheme", "beta", "constant(1)"), n_terms, "scheme.beta"),
      materialize_weights(cfg.get_string("scheme", "gamma", "constant(1)"), n_terms, "scheme.gamma"),
      cfg.get_double("scheme", "M0", 1.0), cfg.get_double("scheme", "alpha", 1.0));
}

Record base_record(const std::string& command, std::uint64_t seed) {
  Record r;
  r.add("command", command).add("version", kVersion).add("seed", seed);
  return r;
}

int cmd_eigen(const ExperimentConfig& cfg, RecordWriter& out, std::ostream& summary) {
  const hilb::GridSpec grid = grid_from(cfg);
  const int K = static_cast<int>(cfg.get_long("grid", "K", 32));
  const hilb::HInverse op(grid);
  const auto eig = hilb::eigensystem(op, K);
  for (int i = 0; i < eig.count(); ++i) {
    Record r = base_record("eigen", 0);
    r.add("index", i + 1)
        .add("lambda", eig.lambda[i])
        .add("residual", eig.residuals[i])
        .add("lambda_sq_partial", eig.lambda_sq_partial[static_cast<std::size_t>(i)]);
    out.write(r);
  }
  summary << "eigen: d=" << grid.d << " n=" << grid.n << " K=" << eig.count()
          << " lambda_1=" << eig.lambda[0]
          << " sum lambda^2=" << eig.lambda_sq_partial.back()
          << " normalization=" << eig.normalization << '\n';
  return kOk;
}

int cmd_propagator(const ExperimentConfig& cfg, RecordWriter& out, std::ostream& summary) {
  const int d = static_cast<int>(cfg.get_long("propagator", "d", 1));
  const double eps = cfg.get_double("propagator", "eps", 1.0);
  const double m0sq = cfg.get_double("propagator", "m0sq", 1.0);
  const std::string pts = cfg.get_string("propagator", "points", "0");
  std::istringstream in(pts);
  std::string tok;
  int count = 0;
  while (std::getline(in, tok, ';')) {
    std::istringstream ptok(tok);
    std::vector<double> x;
    double v;
    while (ptok >> v) x.push_back(v);
    if (static_cast<int>(x.size()) != d)
      throw InvalidInput("propagator.points: point '" + tok + "' has wrong dimension");
    const double val = hilb::lattice_propagator(d, eps, m0sq, x);
    Record r = base_record("propagator", 0);
    r.add("d", d).add("eps", eps).add("m0sq", m0sq).add("x", x).add("value", val);
    out.write(r);
    ++count;
  }
  summary << "propagator: " << count << " points evaluated\n";
  return kOk;
}

int cmd_sample(const ExperimentConfig& cfg, const RunOverrides& ov, std::uint64_t seed,
               RecordWriter& out, std::ostream& summary) {
  const auto model = build_model(cfg);
  const long count = cfg.get_long("sample", "count", 100);
  const int blocks = static_cast<int>(cfg.get_long("", "blocks", 1));
  const long per = (count + blocks - 1) / blocks;
  std::vector<std::vector<meas::Point>> got(static_cast<std::size_t>(blocks));
  parallel_blocks(blocks, ov.threads, [&](int b) {
    auto sampler = model->sampler(RngStream::root(block_seed(seed, b)));
    const long n = std::min(per, count - static_cast<long>(b) * per);
    auto& dst = got[static_cast<std::size_t>(b)];
    for (long s = 0; s < n; ++s) dst.push_back(sampler->draw());
  });
  long idx = 0;
  for (const auto& block : got) {
    for (const auto& x : block) {
      Record r = base_record("sample", seed);
      r.add("index", ++idx).add("coords", x);
      out.write(r);
    }
  }
  summary << "sample: " << idx << " draws from " << cfg.require("model", "kind") << '\n';
  return kOk;
}

int cmd_form(const ExperimentConfig& cfg, const RunOverrides& ov, std::uint64_t seed,
             RecordWriter& out, std::ostream& summary) {
  const auto model = build_model(cfg);
  const seq::CylinderFunction u = build_function(cfg);
  forms::FormSpec spec;
  spec.alpha = cfg.get_double("form", "alpha");
  spec.delta = cfg.get_double("form", "delta");
  spec.samples_per_coord = cfg.get_long("form", "samples", 10000);
  if (cfg.has("form", "coords"))
    spec.coords = parse_index_list(cfg.require("form", "coords"), model->dim(), "form.coords");
  spec.validate();

  const int blocks = static_cast<int>(cfg.get_long("", "blocks", 1));
  forms::FormSpec bspec = spec;
  bspec.samples_per_coord = (spec.samples_per_coord + blocks - 1) / blocks;
  std::vector<forms::FormEstimate> parts(static_cast<std::size_t>(blocks));
  parallel_blocks(blocks, ov.threads, [&](int b) {
    parts[static_cast<std::size_t>(b)] =
        forms::form_estimate(*model, u, u, bspec, block_seed(seed, b));
  });
  // Merge block estimates per coordinate (sample-weighted mean, pooled var).
  forms::FormEstimate total;
  const auto& first = parts.front();
  for (std::size_t c = 0; c < first.per_coord.size(); ++c) {
    forms::CoordEstimate merged = first.per_coord[c];
    if (!merged.exact_zero) {
      double num = 0.0, var = 0.0;
      long n = 0;
      for (const auto& p : parts) {
        const auto& ce = p.per_coord[c];
        num += ce.value * static_cast<double>(ce.n);
        var += ce.stderr_ * ce.stderr_ * static_cast<double>(ce.n) * static_cast<double>(ce.n);
        n += ce.n;
      }
      merged.value = num / static_cast<double>(n);
      merged.stderr_ = std::sqrt(var) / static_cast<double>(n);
      merged.n = n;
    }
    total.per_coord.push_back(merged);
    total.value += merged.value;
    total.stderr_ = std::hypot(total.stderr_, merged.stderr_);
    total.nsamples += merged.n;
  }

  std::vector<double> per_coord_values;
  summary << "form: alpha=" << spec.alpha << " delta=" << spec.delta << '\n';
  summary << "  coord       value         stderr       n\n";
  for (const auto& ce : total.per_coord) {
    Record r = base_record("form", seed);
    r.add("alpha", spec.alpha)
        .add("delta", spec.delta)
        .add("coord", ce.coord + 1)
        .add("value", ce.value)
        .add("stderr", ce.stderr_)
        .add("nsamples", ce.n)
        .add("exact_zero", ce.exact_zero);
    out.write(r);
    per_coord_values.push_back(ce.value);
    summary << "  " << std::setw(5) << ce.coord + 1 << "  " << std::setw(12) << ce.value << "  "
            << std::setw(12) << ce.stderr_ << "  " << std::setw(8) << ce.n
            << (ce.exact_zero ? "  (exact zero)" : "") << '\n';
  }
  Record r = base_record("form", seed);
  r.add("alpha", spec.alpha)
      .add("delta", spec.delta)
      .add("value", total.value)
      .add("stderr", total.stderr_)
      .add("nsamples", total.nsamples)
      .add("per_coordinate", per_coord_values);
  out.write(r);
  summary << "  total  " << total.value << " +- " << total.stderr_ << '\n';
  return kOk;
}

int cmd_chain(const ExperimentConfig& cfg, std::uint64_t seed, RecordWriter& out,
              std::ostream& summary) {
  const auto model = build_model(cfg);
  proc::JumpChainConfig jc;
  jc.alpha = cfg.get_double("chain", "alpha");
  jc.delta = cfg.get_double("chain", "delta");
  jc.horizon = cfg.get_double("chain", "horizon", 1.0);
  jc.max_events = cfg.get_long("chain", "events", 1000000);
  jc.jump_grid = static_cast<int>(cfg.get_long("chain", "jump_grid", 1024));
  jc.validate();
  const long chains = cfg.get_long("chain", "chains", 1);
  const std::string dump = cfg.get_string("chain", "dump", "none");

  RngStream root = RngStream::root(seed);
  auto start_sampler = model->sampler(root.substream(0));
  auto fresh_sampler = model->sampler(root.substream(1));
  RngStream chain_streams = root.substream(2);

  const bool has_function = cfg.sections.count("function") > 0;
  seq::CylinderFunction u;
  if (has_function) u = build_function(cfg);
  RunningStat at_horizon, fresh;
  long total_events = 0;
  for (long c = 0; c < chains; ++c) {
    const meas::Point x0 = start_sampler->draw();
    const proc::Trajectory traj =
        proc::simulate(*model, x0, jc, chain_streams.substream(static_cast<std::uint64_t>(c)));
    total_events += traj.events();
    Record r = base_record("chain", seed);
    r.add("chain", c)
        .add("events", traj.events())
        .add("stop", traj.stop == proc::StopReason::Horizon ? "horizon" : "budget")
        .add("absorbed", traj.absorbed)
        .add("final", traj.final_state());
    out.write(r);
    if (dump == "full") {
      for (long e = 0; e < traj.events(); ++e) {
        Record ev = base_record("chain-event", seed);
        ev.add("chain", c)
            .add("time", traj.times[static_cast<std::size_t>(e) + 1])
            .add("coord", traj.coords[static_cast<std::size_t>(e)] + 1)
            .add("value", traj.values[static_cast<std::size_t>(e)]);
        out.write(ev);
      }
    }
    if (has_function) {
      at_horizon.add(u(traj.final_state()));
      fresh.add(u(fresh_sampler->draw()));
    }
  }
  summary << "chain: " << chains << " chains, horizon " << jc.horizon << ", total events "
          << total_events << '\n';
  if (has_function) {
    const double diff = at_horizon.mean() - fresh.mean();
    const double pooled =
        std::hypot(at_horizon.stderr_mean(), fresh.stderr_mean());
    Record r = base_record("invariance", seed);
    r.add("alpha", jc.alpha)
        .add("delta", jc.delta)
        .add("horizon", jc.horizon)
        .add("chains", chains)
        .add("mean_at_horizon", at_horizon.mean())
        .add("mean_fresh", fresh.mean())
        .add("difference", diff)
        .add("pooled_stderr", pooled)
        .add("pass_3sigma", std::fabs(diff) <= 3.0 * pooled);
    out.write(r);
    summary << "  invariance: diff " << diff << " vs pooled stderr " << pooled << '\n';
  }
  return kOk;
}

int cmd_qr(const ExperimentConfig& cfg, std::uint64_t seed, RecordWriter& out,
           std::ostream& summary) {
  const auto model = build_model(cfg);
  const int n_terms = static_cast<int>(cfg.get_long("qr", "terms", model->dim()));
  const long samples = cfg.get_long("qr", "samples", 1000);
  const double threshold = cfg.get_double("qr", "threshold", 1e-6);
  const long lsamples = cfg.get_long("qr", "lsamples", 32);
  const qr::WeightScheme scheme = build_scheme(cfg, n_terms);
  std::vector<double> m_grid;
  if (cfg.has("qr", "m0grid"))
    m_grid = parse_double_list(cfg.require("qr", "m0grid"), "qr.m0grid");

  std::istringstream in(cfg.get_string("qr", "conditions", "4.3"));
  std::string cond;
  summary << "qr-report: scheme " << scheme.source << ", terms " << n_terms << '\n';
  while (std::getline(in, cond, ',')) {
    if (cond.empty()) continue;
    if (cond == "4.4" || cond == "4.6") {
      const auto grid = m_grid.empty() ? std::vector<double>{scheme.m0} : m_grid;
      const auto table = qr::support_estimate(*model, scheme, grid, samples, seed);
      for (std::size_t g = 0; g < table.m_values.size(); ++g) {
        Record r = base_record("qr-report", seed);
        r.add("condition", cond)
            .add("M", table.m_values[g])
            .add("probability", table.probability[g])
            .add("stderr", table.stderr_[g]);
        out.write(r);
        summary << "  (" << cond << ") M=" << table.m_values[g]
                << " mass=" << table.probability[g] << " +- " << table.stderr_[g] << '\n';
      }
      continue;
    }
    qr::QRReport rep;
    if (cond == "4.8" || cond == "4.9")
      rep = qr::chebyshev_sufficient(*model, scheme, n_terms, samples, seed, threshold);
    else
      rep = qr::check_condition(*model, scheme, cond, n_terms, samples, seed, threshold, m_grid,
                                lsamples);
    Record r = base_record("qr-report", seed);
    r.add("condition", rep.condition)
        .add("terms", static_cast<long>(rep.terms.size()))
        .add("total", rep.partial_sums.empty() ? 0.0 : rep.partial_sums.back())
        .add("verdict", qr::verdict_name(rep.verdict))
        .add("M_used", rep.m_used)
        .add("increment_threshold", rep.increment_threshold)
        .add("partial_sums", rep.partial_sums);
    out.write(r);
    summary << "  (" << rep.condition << ") total "
            << (rep.partial_sums.empty() ? 0.0 : rep.partial_sums.back()) << " verdict "
            << qr::verdict_name(rep.verdict) << " at M0=" << rep.m_used << '\n';
  }
  return kOk;
}

int cmd_verify(std::uint64_t seed, RecordWriter& out, std::ostream& summary) {
  const verify::SuiteResult suite = verify::run_acceptance(seed);
  for (const auto& c : suite.criteria)
    for (const auto& r : c.records) out.write(r);
  verify::print_table(suite, summary);
  return suite.all_pass() ? kOk : kFailure;
}

}  // namespace

int run(const ExperimentConfig& config, const RunOverrides& overrides, std::ostream& summary) {
  std::ofstream file_out;
  std::ostream* records_to = &std::cout;
  const std::string out_path = overrides.out.value_or(config.get_string("", "out", "-"));
  if (out_path != "-") {
    file_out.open(out_path, std::ios::trunc);
    if (!file_out) {
      summary << "error: cannot open output path: " << out_path << '\n';
      return kIo;
    }
    records_to = &file_out;
  }
  RecordWriter writer(*records_to);

  std::uint64_t seed = 0;
  if (overrides.seed)
    seed = *overrides.seed;
  else if (auto s = config.seed())
    seed = *s;

  const std::string cmd = config.command();
  try {
    if (cmd == "eigen") return cmd_eigen(config, writer, summary);
    if (cmd == "propagator") return cmd_propagator(config, writer, summary);
    if (cmd == "sample") return cmd_sample(config, overrides, seed, writer, summary);
    if (cmd == "form") return cmd_form(config, overrides, seed, writer, summary);
    if (cmd == "chain") return cmd_chain(config, seed, writer, summary);
    if (cmd == "qr-report") return cmd_qr(config, seed, writer, summary);
    if (cmd == "verify") return cmd_verify(seed, writer, summary);
    summary << "error: unknown command '" << cmd << "'\n";
    return kInvalidInput;
  } catch (const InvalidInput& e) {
    records_to->flush();
    summary << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const PreconditionError& e) {
    records_to->flush();
    summary << "precondition failed: " << e.what() << '\n';
    return kPrecondition;
  } catch (const ResourceLimit& e) {
    records_to->flush();
    summary << "resource limit: " << e.what() << '\n';
    return kResourceLimit;
  } catch (const NumericalError& e) {
    records_to->flush();
    summary << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Unsupported& e) {
    records_to->flush();
    summary << "unsupported: " << e.what() << '\n';
    return kUnsupported;
  } catch (const IoError& e) {
    summary << "io error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace nlform::cli
