#pragma once

// Verification suites. Each suite returns its CSV artifacts (as strings, so
// callers can write or compare them) and a list of pass/fail criteria.
// CSV contents depend only on the config and seed, never on thread count or
// timing; timings go to the JSON summary only.

#include "supercon/config.hpp"
#include "supercon/linsup.hpp"
#include "supercon/projder.hpp"

#include <chrono>
#include <sstream>

namespace supercon {

/// Master seed when neither a flag, a config nor SUPERCON_SEED gives one.
inline constexpr std::uint64_t kDefaultSeed = 20240917;

struct Criterion {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteContext {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::optional<std::uint64_t> trials;
  std::optional<std::int64_t> dim;
};

struct SuiteResult {
  std::string suite;
  json config;
  std::vector<Criterion> criteria;
  /// (file name, contents) in a fixed order.
  std::vector<std::pair<std::string, std::string>> files;
  json summary = json::object();

  bool passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.passed; });
  }
};

namespace suite_detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class CsvBuilder {
 public:
  explicit CsvBuilder(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double x) { return csv_number(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I i) { return std::to_string(i); }

  std::ostringstream out_;
};

/// Independent seed for one named part of a suite.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return splitmix64(seed ^ splitmix64(experiment_key(label)));
}

inline MatrixSampling resolve_sampling(const std::string& s, std::int64_t n) {
  if (s == "dense") return MatrixSampling::dense;
  if (s == "implicit") return MatrixSampling::implicit;
  return n <= 128 ? MatrixSampling::dense : MatrixSampling::implicit;
}

inline const char* sampling_name(MatrixSampling s) { return s == MatrixSampling::dense ? "dense" : "implicit"; }

inline Vector uniform_spectrum(Eigen::Index n, double hi, std::uint64_t seed, std::uint64_t index) {
  Rng rng(RngStream{seed, index});
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = hi * rng.uniform();
  return s;
}

inline void add_prediction_row(CsvBuilder& csv, const PredictionReport& r) {
  csv.row(r.conclusion_id, static_cast<std::int64_t>(r.N), r.M, r.trials, r.predicted, r.empirical_mean,
          r.empirical_std, r.relative_error, r.seed, r.discarded);
}

inline CsvBuilder prediction_csv() {
  return CsvBuilder({"conclusion_id", "N", "M", "trials", "predicted", "mean", "std", "rel_err", "seed", "discarded"});
}

inline json report_json(const PredictionReport& r) {
  return {{"conclusion_id", r.conclusion_id}, {"N", r.N},       {"M", r.M},
          {"trials", r.trials},               {"predicted", r.predicted}, {"mean", r.empirical_mean},
          {"std", r.empirical_std},           {"rel_err", r.relative_error}, {"discarded", r.discarded}};
}

}  // namespace suite_detail

// ---------------------------------------------------------------------------
// supmatrix-trace

inline SuiteResult run_supmatrix_trace(SupmatrixTraceConfig c, const SuiteContext& ctx) {
  using namespace suite_detail;
  if (ctx.trials) c.instances = *ctx.trials, c.equivalence_instances = std::min(c.equivalence_instances, *ctx.trials);
  if (ctx.dim) c.N = *ctx.dim;
  c.validate();
  SuiteResult res;
  res.suite = "supmatrix-trace";
  res.config = block_to_json(c);

  const PerturbationSchedule schedule(c.beta0, c.decay);
  struct Instance {
    std::vector<double> tele_residual, tele_phi;
    bool tele_ok = true;
    std::vector<double> neighbor_max;  // per s: max_n |M(n,s+1) - M(n,s)|
    std::vector<ColumnLimit> limits;
    std::vector<double> limit_residual;
    double build_seconds = 0.0, tele_seconds = 0.0;
  };
  const MonteCarloOptions opts{ctx.seed, c.instances, ctx.threads};
  auto instances = run_trials<Instance>(experiment_key("supmatrix.instances"), opts, [&](Rng& rng) {
    Instance out;
    const LinSupProblem p = gen_problem(c.N, c.I, c.margin, rng);
    const OperatorSequence seq = p.operators();
    const TargetFunction phi = p.target();
    const DirectionRule direction = steepest_nonascent(phi);
    const Vector x0 = Vector::Zero(c.N);
    Stopwatch build_clock;
    const SupMatrix m = SupMatrix::build(seq, x0, schedule, direction, c.n_max);
    out.build_seconds = build_clock.seconds();
    Stopwatch tele_clock;
    for (std::uint64_t n = 0; n <= c.n_max; ++n) {
      const double r = telescoping_check(m, n, phi);
      const double phi_xn = phi(m.entry(n, 0));
      out.tele_residual.push_back(r);
      out.tele_phi.push_back(phi_xn);
      out.tele_ok = out.tele_ok && telescoping_ok(r, phi_xn);
    }
    out.tele_seconds = tele_clock.seconds();
    out.neighbor_max.assign(c.n_max + 1, 0.0);
    for (std::uint64_t n = 1; n <= c.n_max; ++n)
      for (std::uint64_t s = 0; s < n; ++s)
        out.neighbor_max[s] = std::max(out.neighbor_max[s], (m.entry(n, s + 1) - m.entry(n, s)).norm());
    for (std::uint64_t k = 0; k <= c.n_max + 1; ++k) {
      out.limits.push_back(column_limit(m, k, c.column_tol, c.max_extra_sweeps));
      out.limit_residual.push_back(residual(seq, out.limits.back().point));
    }
    return out;
  });

  // Equivalence with the drivers, on the first instances, rebuilt from the same streams.
  struct Equivalence { bool column0 = false, diagonal = false; };
  const MonteCarloOptions eq_opts{ctx.seed, std::max<std::uint64_t>(c.equivalence_instances, 1), ctx.threads};
  std::vector<Equivalence> equivalence;
  if (c.equivalence_instances > 0) {
    equivalence = run_trials<Equivalence>(experiment_key("supmatrix.instances"), eq_opts, [&](Rng& rng) {
      const LinSupProblem p = gen_problem(c.N, c.I, c.margin, rng);
      const OperatorSequence seq = p.operators();
      const DirectionRule direction = steepest_nonascent(p.target());
      const Vector x0 = Vector::Zero(c.N);
      const SupMatrix m = SupMatrix::build(seq, x0, schedule, direction, c.n_max);
      StoppingRule stop;
      stop.tol = 0.0;
      stop.max_iterations = c.n_max;
      stop.max_sweeps = std::numeric_limits<std::uint64_t>::max();
      stop.record_trajectory = true;
      const RunResult basic = run_basic(seq, x0, stop);
      const RunResult sup = run_superiorized(seq, x0, schedule, direction, stop);
      Equivalence e;
      e.column0 = basic.trajectory.size() == c.n_max + 1;
      e.diagonal = sup.trajectory.size() == c.n_max + 1;
      for (std::uint64_t n = 0; n <= c.n_max && e.column0; ++n)
        e.column0 = (basic.trajectory[n].array() == m.entry(n, 0).array()).all();
      for (std::uint64_t n = 0; n <= c.n_max && e.diagonal; ++n)
        e.diagonal = (sup.trajectory[n].array() == m.entry(n, n).array()).all();
      return e;
    });
  }

  // Instance 0 dumps: all entries, and the drift table.
  {
    Rng rng(RngStream{ctx.seed, stream_hash(experiment_key("supmatrix.instances"), 0)});
    const LinSupProblem p = gen_problem(c.N, c.I, c.margin, rng);
    const TargetFunction phi = p.target();
    const SupMatrix m = SupMatrix::build(p.operators(), Vector::Zero(c.N), schedule, steepest_nonascent(phi), c.n_max);
    std::ostringstream entries;
    write_entries_csv(entries, m, phi);
    res.files.emplace_back("entries.csv", entries.str());
    CsvBuilder drift({"i", "n", "angle", "increment_norm"});
    for (std::uint64_t i = 0; i < c.n_max; ++i)
      for (std::uint64_t n = i; n <= c.n_max; ++n) {
        const double norm = n == i ? m.beta(i) * m.direction(i).norm() : increment(m, n, i).delta.norm();
        const double angle = norm > 0.0 ? angle_drift(m, i, n) : std::numeric_limits<double>::quiet_NaN();
        drift.row(i, n, angle, norm);
      }
    res.files.emplace_back("drift.csv", drift.str());
  }

  CsvBuilder tele({"instance", "n", "residual", "phi_xn"});
  CsvBuilder eq({"instance", "column0_bitwise", "diagonal_bitwise"});
  CsvBuilder neighbors({"instance", "s", "max_distance", "beta"});
  CsvBuilder limits({"instance", "k", "settled", "depth", "last_change", "step_to_next", "beta", "residual"});
  bool tele_ok = true, eq_ok = !equivalence.empty(), neighbor_ok = true, limit_ok = true;
  double worst_tele = 0.0, worst_neighbor = -1e300, worst_limit = -1e300, max_limit_residual = 0.0;
  std::size_t settled = 0, total_limits = 0;
  double build_seconds = 0.0, tele_seconds = 0.0;
  for (std::size_t t = 0; t < instances.size(); ++t) {
    const auto& inst = instances[t];
    build_seconds += inst.build_seconds;
    tele_seconds += inst.tele_seconds;
    tele_ok = tele_ok && inst.tele_ok;
    for (std::size_t n = 0; n < inst.tele_residual.size(); ++n) {
      tele.row(t, n, inst.tele_residual[n], inst.tele_phi[n]);
      worst_tele = std::max(worst_tele, inst.tele_residual[n] / (1.0 + std::abs(inst.tele_phi[n])));
    }
    for (std::uint64_t s = 0; s < c.n_max; ++s) {
      const double beta = schedule.beta(s);
      neighbors.row(t, s, inst.neighbor_max[s], beta);
      neighbor_ok = neighbor_ok && inst.neighbor_max[s] <= beta + 1e-12;
      worst_neighbor = std::max(worst_neighbor, inst.neighbor_max[s] - beta);
    }
    for (std::size_t k = 0; k < inst.limits.size(); ++k) {
      const auto& l = inst.limits[k];
      ++total_limits;
      if (l.settled) ++settled;
      max_limit_residual = std::max(max_limit_residual, inst.limit_residual[k]);
      double step = std::numeric_limits<double>::quiet_NaN();
      if (k + 1 < inst.limits.size()) {
        step = (inst.limits[k + 1].point - l.point).norm();
        if (l.settled && inst.limits[k + 1].settled) {
          const double beta = schedule.beta(k);
          limit_ok = limit_ok && step <= beta + 1e-9;
          worst_limit = std::max(worst_limit, step - beta);
        }
      }
      limits.row(t, k, l.settled, l.depth, l.last_change, step, schedule.beta(k), inst.limit_residual[k]);
    }
  }
  for (std::size_t t = 0; t < equivalence.size(); ++t) {
    eq.row(t, equivalence[t].column0, equivalence[t].diagonal);
    eq_ok = eq_ok && equivalence[t].column0 && equivalence[t].diagonal;
  }
  res.files.emplace_back("telescoping.csv", tele.str());
  res.files.emplace_back("equivalence.csv", eq.str());
  res.files.emplace_back("neighbors.csv", neighbors.str());
  res.files.emplace_back("column_limits.csv", limits.str());

  const double tele_wall = (build_seconds + tele_seconds);
  res.criteria.push_back({"telescoping_identity", tele_ok && tele_wall < 10.0,
                          std::to_string(instances.size()) + " matrices, N=" + std::to_string(c.N) +
                              ", n_max=" + std::to_string(c.n_max) + ", max residual/(1+|phi|)=" + num(worst_tele) +
                              " (bound 1e-9), build+check " + num(tele_wall) + " s (budget 10 s)",
                          tele_wall});
  res.criteria.push_back({"supmatrix_equivalence", eq_ok,
                          std::to_string(equivalence.size()) +
                              " instances: column 0 vs run_basic and diagonal vs run_superiorized, bitwise"});
  const bool enough_settled = settled > 0;
  res.criteria.push_back({"nonexpansive_bounds", neighbor_ok && limit_ok && enough_settled,
                          "max(|M(n,s+1)-M(n,s)| - beta_s)=" + num(worst_neighbor) + " (bound 1e-12); " +
                              "max(|x_inf,s+1 - x_inf,s| - beta_s)=" + num(worst_limit) + " (bound 1e-9); settled " +
                              std::to_string(settled) + "/" + std::to_string(total_limits) +
                              " columns; max limit residual " + num(max_limit_residual)});
  res.summary = {{"instances", instances.size()},
                 {"max_scaled_telescoping_residual", worst_tele},
                 {"max_neighbor_excess", worst_neighbor},
                 {"max_limit_excess", worst_limit},
                 {"settled_columns", settled},
                 {"columns", total_limits},
                 {"max_limit_residual", max_limit_residual}};
  return res;
}

// ---------------------------------------------------------------------------
// com-verify

inline SuiteResult run_com_verify(ComVerifyConfig c, const SuiteContext& ctx) {
  using namespace suite_detail;
  if (ctx.trials)
    c.sum_trials = c.chain_trials = c.action_trials = c.rank1_trials = c.product_trials = *ctx.trials;
  if (ctx.dim) c.sum_N = c.chain_N = c.action_N = c.rank1_N = c.product_N = *ctx.dim;
  c.validate();
  SuiteResult res;
  res.suite = "com-verify";
  res.config = block_to_json(c);
  auto opts = [&](std::uint64_t trials, std::string_view label) {
    return MonteCarloOptions{derive_seed(ctx.seed, label), trials, ctx.threads};
  };
  CsvBuilder pred = prediction_csv();
  CsvBuilder extra({"quantity", "N", "value", "reference"});

  // Sums of vectors of known norms.
  {
    Stopwatch clock;
    const auto r = mc_sum_norm(c.sum_d, c.sum_N, opts(c.sum_trials, "com.sum"));
    const double secs = clock.seconds();
    add_prediction_row(pred, r.report);
    extra.row("pair_inner_mean", c.sum_N, r.pair_inner_mean, 0.0);
    extra.row("pair_inner_std", c.sum_N, r.pair_inner_std, c.sum_d.size() >= 2 ? c.sum_d[0] * c.sum_d[1] / std::sqrt(double(c.sum_N)) : 0.0);
    const double rel_std = r.report.empirical_std / r.report.empirical_mean;
    res.criteria.push_back({"sum_of_vectors", r.report.relative_error < 0.01 && rel_std < 0.05 && secs < 30.0,
                            "mean " + num(r.report.empirical_mean) + " vs " + num(r.report.predicted) +
                                ", rel_err " + num(r.report.relative_error) + " (< 0.01), rel std " + num(rel_std) +
                                " (< 0.05), " + num(secs) + " s (budget 30 s)",
                            secs});
    res.summary["sum_norm"] = report_json(r.report);
  }

  // Sphere Markov chain.
  {
    Stopwatch clock;
    const std::vector<double> d(c.chain_steps, c.chain_step);
    const auto r = mc_sphere_displacement(d, c.chain_N, opts(c.chain_trials, "com.chain"));
    const auto single = mc_sphere_displacement({c.chain_step}, c.chain_N, opts(c.chain_trials, "com.chain1"));
    const double secs = clock.seconds();
    add_prediction_row(pred, r);
    add_prediction_row(pred, single);
    const double d2 = c.chain_step * c.chain_step;
    const bool exact = std::abs(single.empirical_mean - d2) <= 1e-12 && single.empirical_std <= 1e-12;
    res.criteria.push_back({"sphere_chain", r.relative_error < 0.02 && exact && secs < 60.0,
                            "M=" + std::to_string(c.chain_steps) + " mean " + num(r.empirical_mean) + " vs " +
                                num(r.predicted) + ", rel_err " + num(r.relative_error) +
                                " (< 0.02); M=1 mean-d^2 " + num(single.empirical_mean - d2) + ", std " +
                                num(single.empirical_std) + " (both <= 1e-12), " + num(secs) + " s (budget 60 s)",
                            secs});
    res.summary["sphere_chain"] = report_json(r);
  }

  // Action of a matrix with given singular values.
  {
    Stopwatch clock;
    const MatrixSampling sampling = resolve_sampling(c.sampling, c.action_N);
    bool ok = true;
    std::string detail;
    for (std::uint64_t sp = 0; sp < c.action_spectra; ++sp) {
      const SingularSpectrum s(uniform_spectrum(c.action_N, 2.0, derive_seed(ctx.seed, "com.action.spectrum"), sp));
      const auto r = mc_action_norm(s, opts(c.action_trials, "com.action." + std::to_string(sp)), sampling);
      add_prediction_row(pred, r.norm);
      extra.row("distortion_mean_sq", c.action_N, r.distortion_mean_sq, r.distortion_predicted);
      const double bound = 3.0 * r.norm.empirical_std / r.norm.empirical_mean;
      ok = ok && r.norm.relative_error < bound;
      detail += "spectrum " + std::to_string(sp) + ": rel_err " + num(r.norm.relative_error) + " < " + num(bound) + "; ";
    }
    // all-ones spectrum: T orthogonal, |Tv| = 1 on every draw (formed densely)
    const SingularSpectrum ones(Vector::Ones(c.action_N));
    const Eigen::Index n = c.action_N;
    auto devs = run_trials<double>(experiment_key("com.action.ones"), opts(c.action_exact_trials, "com.action.ones"),
                                   [&](Rng& rng) {
                                     const Matrix t = matrix_with_singular_values(ones, rng);
                                     return std::abs((t * uniform_sphere(n, rng)).norm() - 1.0);
                                   });
    const double max_dev = *std::max_element(devs.begin(), devs.end());
    extra.row("ones_max_abs_deviation", c.action_N, max_dev, 0.0);
    ok = ok && max_dev <= 1e-10;
    res.criteria.push_back({"action_norm", ok,
                            detail + "all-ones max | |Tv|-1 | " + num(max_dev) + " (<= 1e-10), sampling " +
                                sampling_name(sampling),
                            clock.seconds()});
  }

  // Rotation by symmetric operators.
  {
    Stopwatch clock;
    Vector e1 = Vector::Zero(c.rank1_N);
    e1[0] = 1.0;
    const std::vector<SingularSpectrum> rank1 = {SingularSpectrum(e1)};
    const auto r1 = mc_rotation_product(rank1, opts(c.rank1_trials, "com.rank1"), resolve_sampling(c.sampling, c.rank1_N));
    add_prediction_row(pred, r1);
    const SingularSpectrum s(uniform_spectrum(c.product_N, 2.0, derive_seed(ctx.seed, "com.product.spectrum"), 0));
    const std::vector<SingularSpectrum> chain(c.product_M, s);
    const auto rp = mc_rotation_product(chain, opts(c.product_trials, "com.product"), resolve_sampling(c.sampling, c.product_N));
    add_prediction_row(pred, rp);
    const double chain_bound = 3.0 * std::sqrt(double(c.product_M)) / std::sqrt(double(c.product_N));

    // Remark check: PSD predictions never exceed 2.
    auto maxima = run_trials<double>(experiment_key("com.psd"), opts(c.psd_checks, "com.psd"), [&](Rng& rng) {
      const auto m = 1 + static_cast<std::size_t>(rng.uniform() * 5.0);
      const auto n = 2 + static_cast<Eigen::Index>(rng.uniform() * 49.0);
      std::vector<Vector> eigs;
      for (std::size_t i = 0; i < m; ++i) {
        Vector v(n);
        for (Eigen::Index j = 0; j < n; ++j) v[j] = rng.uniform() < 0.3 ? 0.0 : 2.0 * rng.uniform();
        if (v.maxCoeff() == 0.0) v[0] = 1.0;
        eigs.push_back(v);
      }
      return predict_rotation(eigs, true);
    });
    double max_pred = std::max(r1.predicted, rp.predicted);
    for (double x : maxima) max_pred = std::max(max_pred, x);
    extra.row("max_psd_prediction", 0, max_pred, 2.0);
    const bool ok = r1.relative_error < 0.05 && rp.relative_error < chain_bound && max_pred <= 2.0;
    res.criteria.push_back({"rotation", ok,
                            "rank-1 N=" + std::to_string(c.rank1_N) + " mean " + num(r1.empirical_mean) + " vs " +
                                num(r1.predicted) + " rel_err " + num(r1.relative_error) + " (< 0.05); M=" +
                                std::to_string(c.product_M) + " chain N=" + std::to_string(c.product_N) + " mean " +
                                num(rp.empirical_mean) + " vs " + num(rp.predicted) + " rel_err " +
                                num(rp.relative_error) + " (< " + num(chain_bound) + "); max PSD prediction " +
                                num(max_pred) + " (<= 2)",
                            clock.seconds()});
    res.summary["rotation_rank1"] = report_json(r1);
    res.summary["rotation_chain"] = report_json(rp);
  }

  // Gram matrix concentration: measured and reported, not asserted.
  for (auto n : c.gram_N) {
    const auto g = mc_gram_identity(n, opts(c.gram_trials, "com.gram." + std::to_string(n)));
    add_prediction_row(pred, g.diagonal);
    extra.row("gram_offdiag_mean", n, g.offdiag_mean, 0.0);
    extra.row("gram_offdiag_std", n, g.offdiag_std, 1.0 / std::sqrt(double(n)));
    extra.row("gram_max_abs_dev", n, g.max_abs_dev, std::numeric_limits<double>::quiet_NaN());
    extra.row("gram_rms_dev", n, g.rms_dev, std::numeric_limits<double>::quiet_NaN());
    extra.row("gram_quadform_rms", n, g.quadform_rms, std::sqrt(2.0 / double(n)));
  }

  res.files.emplace_back("predictions.csv", pred.str());
  res.files.emplace_back("measurements.csv", extra.str());
  return res;
}

// ---------------------------------------------------------------------------
// scaling

inline SuiteResult run_scaling(ScalingConfig c, const SuiteContext& ctx) {
  using namespace suite_detail;
  if (ctx.trials) c.action_trials = c.chain_trials = *ctx.trials;
  if (ctx.dim) throw ConfigError("scaling: --dim does not apply (set scaling.dims instead)");
  c.validate();
  SuiteResult res;
  res.suite = "scaling";
  res.config = block_to_json(c);
  Stopwatch clock;
  CsvBuilder points({"estimator", "N", "deviation", "used"});
  CsvBuilder fits({"estimator", "slope", "intercept", "asserted"});
  std::vector<Eigen::Index> dims(c.dims.begin(), c.dims.end());
  auto opts = [&](std::uint64_t trials, const std::string& label) {
    return MonteCarloOptions{derive_seed(ctx.seed, label), trials, ctx.threads};
  };
  auto record = [&](const std::string& name, const ScalingFit& f, bool asserted) {
    for (std::size_t i = 0; i < f.dims.size(); ++i)
      points.row(name, static_cast<std::int64_t>(f.dims[i]), f.deviations[i], bool(f.used[i]));
    fits.row(name, f.slope, f.intercept, asserted);
  };

  const ScalingFit action = fit_scaling(dims, [&](Eigen::Index n) {
    const SingularSpectrum s(uniform_spectrum(n, 2.0, derive_seed(ctx.seed, "scaling.action.spectrum"), std::uint64_t(n)));
    return relative_deviation(
        mc_action_norm(s, opts(c.action_trials, "scaling.action." + std::to_string(n)), resolve_sampling(c.sampling, n)).norm);
  });
  record("action_norm_relative_std", action, true);
  const std::vector<double> d(c.chain_steps, c.chain_step);
  const ScalingFit chain = fit_scaling(dims, [&](Eigen::Index n) {
    return mc_sphere_displacement(d, n, opts(c.chain_trials, "scaling.chain." + std::to_string(n))).empirical_std;
  });
  record("sphere_chain_std", chain, true);

  std::vector<Eigen::Index> gdims(c.gram_dims.begin(), c.gram_dims.end());
  std::map<Eigen::Index, GramReport> grams;
  for (auto n : gdims) grams[n] = mc_gram_identity(n, opts(c.gram_trials, "scaling.gram." + std::to_string(n)));
  record("gram_offdiag_std", fit_scaling(gdims, [&](Eigen::Index n) { return grams[n].offdiag_std; }), false);
  record("gram_quadform_rms", fit_scaling(gdims, [&](Eigen::Index n) { return grams[n].quadform_rms; }), false);
  record("gram_max_abs_dev", fit_scaling(gdims, [&](Eigen::Index n) { return grams[n].max_abs_dev; }), false);

  res.files.emplace_back("scaling.csv", points.str());
  res.files.emplace_back("fits.csv", fits.str());
  const double secs = clock.seconds();
  auto in_band = [](double s) { return s >= -0.65 && s <= -0.35; };
  res.criteria.push_back({"scaling_laws", in_band(action.slope) && in_band(chain.slope) && secs < 300.0,
                          "action relative std slope " + num(action.slope) + ", sphere chain std slope " +
                              num(chain.slope) + " (band [-0.65, -0.35]), " + num(secs) + " s (budget 300 s)",
                          secs});
  res.summary = {{"action_slope", action.slope}, {"chain_slope", chain.slope}};
  return res;
}

// ---------------------------------------------------------------------------
// projder-check

namespace suite_detail {

/// Random Ball or Ellipsoid in E^n (index parity picks the kind).
inline ConvexBody random_smooth_body(Eigen::Index n, bool ellipsoid, Rng& rng) {
  const Vector center = 0.5 * gaussian_vector(n, rng);
  if (!ellipsoid) return Ball(center, 0.5 + 1.5 * rng.uniform());
  Vector axes(n);
  for (Eigen::Index i = 0; i < n; ++i) axes[i] = 0.5 + 2.5 * rng.uniform();
  return Ellipsoid(center, axes);
}

inline Vector random_outside_point(const ConvexBody& body, double dist, Rng& rng) {
  const Vector y = detail::boundary_point_along(body, uniform_sphere(dim(body), rng));
  return y + dist * outward_normal(body, y);
}

}  // namespace suite_detail

inline SuiteResult run_projder_check(ProjderCheckConfig c, const SuiteContext& ctx) {
  using namespace suite_detail;
  if (ctx.trials) c.cascade_trials = *ctx.trials;
  if (ctx.dim) c.cascade_N = *ctx.dim;
  c.validate();
  SuiteResult res;
  res.suite = "projder-check";
  res.config = block_to_json(c);
  auto opts = [&](std::uint64_t trials, std::string_view label) {
    return MonteCarloOptions{derive_seed(ctx.seed, label), trials, ctx.threads};
  };

  // Finite differences, radial annihilation, contraction.
  {
    Stopwatch clock;
    struct Fd {
      std::string kind;
      std::int64_t n = 0;
      double dist = 0, rel = 0, contraction = 0, radial = 0, symmetry = 0, spec_lo = 0, spec_hi = 0;
    };
    auto samples = run_trials<Fd>(experiment_key("projder.fd"), opts(c.fd_samples, "projder.fd"), [&](Rng& rng) {
      Fd f;
      f.n = 2 + static_cast<std::int64_t>(rng.uniform() * double(c.fd_max_N - 1));
      const bool ellipsoid = rng.uniform() < 0.5;
      const ConvexBody body = random_smooth_body(f.n, ellipsoid, rng);
      f.kind = kind_name(body);
      f.dist = 0.05 + 1.95 * rng.uniform();
      const Vector x = random_outside_point(body, f.dist, rng);
      const ProjectionDerivative pd = projection_derivative(body, x);
      const Vector w = uniform_sphere(f.n, rng);
      const Vector w2 = uniform_sphere(f.n, rng);
      const Vector dp = pd.apply(w);
      const Vector fd = (project(Vector(x + c.fd_h * w), body) - project(Vector(x - c.fd_h * w), body)) / (2.0 * c.fd_h);
      f.rel = (fd - dp).norm() / dp.norm();
      f.contraction = dp.norm() / w.norm();
      f.radial = pd.apply(pd.radial_dir()).norm();
      f.symmetry = std::abs(dp.dot(w2) - w.dot(pd.apply(w2)));
      const Vector spec = pd.tangent_spectrum();
      f.spec_lo = spec.minCoeff();
      f.spec_hi = spec.maxCoeff();
      return f;
    });
    CsvBuilder csv({"sample", "kind", "N", "dist", "rel_error", "contraction", "radial_norm", "symmetry_error",
                    "spectrum_min", "spectrum_max"});
    double worst_rel = 0, worst_contraction = 0, worst_radial = 0, worst_sym = 0, lo = 1, hi = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& f = samples[i];
      csv.row(i, f.kind, f.n, f.dist, f.rel, f.contraction, f.radial, f.symmetry, f.spec_lo, f.spec_hi);
      worst_rel = std::max(worst_rel, f.rel);
      worst_contraction = std::max(worst_contraction, f.contraction);
      worst_radial = std::max(worst_radial, f.radial);
      worst_sym = std::max(worst_sym, f.symmetry);
      lo = std::min(lo, f.spec_lo);
      hi = std::max(hi, f.spec_hi);
    }
    res.files.emplace_back("fd_check.csv", csv.str());
    const bool ok = worst_rel <= 1e-5 && worst_radial == 0.0 && worst_contraction <= 1.0 + 1e-12 && lo >= 0.0 &&
                    hi <= 1.0 + 1e-12;
    res.criteria.push_back({"projection_derivative", ok,
                            std::to_string(samples.size()) + " triples: max FD rel error " + num(worst_rel) +
                                " (<= 1e-5), max |DP n| " + num(worst_radial) + " (== 0), max |DP w|/|w| " +
                                num(worst_contraction) + " (<= 1), tangent spectrum in [" + num(lo) + ", " + num(hi) +
                                "], max symmetry error " + num(worst_sym),
                            clock.seconds()});
  }

  // Mean-value identity.
  {
    Stopwatch clock;
    struct Mv {
      std::string kind;
      std::int64_t n = 0;
      double w_norm = 0, residual = 0;
    };
    auto samples = run_trials<Mv>(experiment_key("projder.mv"), opts(c.mv_segments, "projder.mv"), [&](Rng& rng) {
      Mv m;
      m.n = 2 + static_cast<std::int64_t>(rng.uniform() * double(c.fd_max_N - 1));
      const ConvexBody body = random_smooth_body(m.n, rng.uniform() < 0.5, rng);
      m.kind = kind_name(body);
      for (;;) {
        const Vector x0 = random_outside_point(body, 0.2 + 1.8 * rng.uniform(), rng);
        const Vector w = (0.1 + 1.9 * rng.uniform()) * uniform_sphere(m.n, rng);
        if (!(min_gauge_sq_on_segment(body, x0, w) > 1.0)) continue;
        m.w_norm = w.norm();
        m.residual = mean_value_check(body, x0, x0 + w, static_cast<unsigned>(c.mv_nodes));
        return m;
      }
    });
    CsvBuilder csv({"segment", "kind", "N", "w_norm", "residual"});
    double worst = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      csv.row(i, samples[i].kind, samples[i].n, samples[i].w_norm, samples[i].residual);
      worst = std::max(worst, samples[i].residual / samples[i].w_norm);
    }
    res.files.emplace_back("mean_value.csv", csv.str());
    res.criteria.push_back({"mean_value_identity", worst < 1e-8,
                            std::to_string(samples.size()) + " segments, " + std::to_string(c.mv_nodes) +
                                " nodes: max residual/|w| " + num(worst) + " (< 1e-8)",
                            clock.seconds()});
  }

  // Balancing effect and the rotation bound.
  {
    Stopwatch clock;
    CsvBuilder csv({"N", "samples", "violations", "min_lower_gap", "min_upper_gap"});
    bool ok = true;
    std::string detail;
    for (auto n : c.ratio_N) {
      struct R { bool bad = false; double lower_gap = 0, upper_gap = 0; };
      const std::string label = "projder.ratio." + std::to_string(n);
      auto rs = run_trials<R>(experiment_key(label), opts(c.ratio_samples, label), [&](Rng& rng) {
        // entries 1 - U raised to a random power, so that spreads from near
        // constant to heavily skewed all occur
        const double power = std::exp(std::log(20.0) * (2.0 * rng.uniform() - 1.0));
        Vector v(n - 1);
        for (Eigen::Index i = 0; i < n - 1; ++i) v[i] = std::pow(1.0 - rng.uniform(), power);
        const double l1 = prob_lp_norm(v, 1.0);
        const double l2 = prob_lp_norm(v, 2.0);
        R r;
        r.lower_gap = l1 - l2 * l2;
        r.upper_gap = 0.5 * (l2 * l2 + 1.0) - l1;
        r.bad = r.lower_gap < -1e-15 || r.upper_gap < -1e-15;
        return r;
      });
      std::size_t bad = 0;
      double lg = 1e300, ug = 1e300;
      for (const auto& r : rs) {
        bad += r.bad;
        lg = std::min(lg, r.lower_gap);
        ug = std::min(ug, r.upper_gap);
      }
      csv.row(n, rs.size(), bad, lg, ug);
      ok = ok && bad == 0;
      detail += "N=" + std::to_string(n) + ": " + std::to_string(bad) + " violations; ";
    }
    auto rots = run_trials<double>(experiment_key("projder.paths"), opts(c.paths, "projder.paths"), [&](Rng& rng) {
      const auto m = 1 + static_cast<std::size_t>(rng.uniform() * 6.0);
      const auto n1 = 1 + static_cast<Eigen::Index>(rng.uniform() * 20.0);
      std::vector<CascadeStep> steps;
      for (std::size_t k = 0; k < m; ++k) {
        Vector kappa(n1);
        for (Eigen::Index l = 0; l < n1; ++l) kappa[l] = rng.uniform() < 0.2 ? 0.0 : std::exp(6.0 * rng.uniform() - 3.0);
        steps.push_back({rng.uniform() < 0.1 ? 0.0 : 5.0 * rng.uniform(), kappa});
      }
      return cascade_rotation_prediction(CascadePath(std::move(steps)));
    });
    const double max_rot = *std::max_element(rots.begin(), rots.end());
    csv.row(std::string("paths"), rots.size(), std::size_t(max_rot > std::sqrt(2.0)), std::sqrt(2.0) - max_rot, 0.0);
    ok = ok && max_rot <= std::sqrt(2.0);
    res.files.emplace_back("norm_ratio.csv", csv.str());
    res.criteria.push_back({"norm_ratio_balancing", ok,
                            detail + std::to_string(rots.size()) + " paths: max rotation prediction " + num(max_rot) +
                                " (<= sqrt 2)",
                            clock.seconds()});
  }

  // Cascade Monte Carlo.
  {
    Stopwatch clock;
    std::vector<CascadeLink> chain;
    if (!c.cascade_chain.is_null()) {
      for (auto& l : c.chain()) chain.push_back({l.body, l.distance});
    } else {
      for (std::uint64_t k = 0; k < c.cascade_M; ++k)
        chain.push_back({Ball(Vector::Zero(c.cascade_N), c.cascade_radius), c.cascade_distance});
    }
    const Eigen::Index n = dim(chain.front().body);
    Vector w0 = Vector::Zero(n);
    w0[0] = 1.0;
    const CascadeReport r = mc_cascade(chain, w0, opts(c.cascade_trials, "projder.cascade"));
    CsvBuilder csv = prediction_csv();
    add_prediction_row(csv, r.norm);
    add_prediction_row(csv, r.rotation_sq);
    res.files.emplace_back("cascade.csv", csv.str());
    const double m = double(chain.size());
    const double bound = 5.0 * std::sqrt(m) / std::sqrt(double(n));
    const bool ok = r.norm.relative_error < bound && r.rotation_sq.empirical_mean < 0.05 &&
                    std::abs(r.rotation_sq.predicted) < 0.05;
    res.criteria.push_back({"cascade_monte_carlo", ok,
                            "M=" + std::to_string(chain.size()) + ", N=" + std::to_string(n) + ": norm ratio " +
                                num(r.norm.empirical_mean) + " vs " + num(r.norm.predicted) + " rel_err " +
                                num(r.norm.relative_error) + " (< " + num(bound) + "); squared direction shift " +
                                num(r.rotation_sq.empirical_mean) + " vs prediction " + num(r.rotation_sq.predicted) +
                                " (< 0.05); unsquared shift " + num(r.rotation_mean),
                            clock.seconds()});
    res.summary["cascade_norm"] = report_json(r.norm);
    res.summary["cascade_rotation_sq"] = report_json(r.rotation_sq);
    res.summary["cascade_rotation_mean"] = r.rotation_mean;
  }
  return res;
}

// ---------------------------------------------------------------------------
// linsup

inline SuiteResult run_linsup(LinSupSuiteConfig c, const SuiteContext& ctx) {
  using namespace suite_detail;
  if (ctx.trials) c.trials = *ctx.trials;
  if (ctx.dim) c.N = *ctx.dim;
  c.validate();
  SuiteResult res;
  res.suite = "linsup";
  res.config = block_to_json(c);

  LinSupConfig lc;
  lc.N = c.N;
  lc.I = c.I;
  lc.trials = c.trials;
  lc.seed = ctx.seed;
  lc.margin = c.margin;
  lc.beta0 = c.beta0;
  lc.decay = c.decay;
  lc.tol = c.tol;
  lc.max_sweeps = c.max_sweeps;
  lc.threads = ctx.threads;
  lc.drift.N = c.drift_N;
  lc.drift.I = c.drift_I;
  lc.drift.trials = c.drift_trials;
  lc.drift.rows = c.drift_rows;
  lc.drift.steps = c.drift_steps;

  Stopwatch clock;
  lc.drift.trials = 0;
  LinSupSummary s = batch_experiment(lc);
  const double pair_secs = clock.seconds();
  lc.drift.trials = c.drift_trials;

  CsvBuilder out({"trial", "phi_basic", "phi_sup", "gap", "residual_basic", "residual_sup", "iterations_basic",
                  "iterations_sup", "valid", "success"});
  double worst_residual = 0.0;
  for (std::size_t t = 0; t < s.outcomes.size(); ++t) {
    const auto& o = s.outcomes[t];
    out.row(t, o.phi_basic, o.phi_sup, o.gap, o.residual_basic, o.residual_sup, o.iterations_basic, o.iterations_sup,
            o.valid, o.success());
    worst_residual = std::max({worst_residual, o.residual_basic, o.residual_sup});
  }
  res.files.emplace_back("outcomes.csv", out.str());
  const bool all_valid = s.valid == s.outcomes.size();
  res.criteria.push_back({"linsup_guarantee",
                          all_valid && worst_residual < 1e-6 && s.success_rate >= 0.95 && s.mean_gap > 0.0 &&
                              pair_secs < 300.0,
                          std::to_string(s.outcomes.size()) + " problems N=" + std::to_string(c.N) +
                              " I=" + std::to_string(c.I) + ": valid " + std::to_string(s.valid) +
                              ", max residual " + num(worst_residual) + " (< 1e-6), success rate " +
                              num(s.success_rate) + " (>= 0.95), mean gap " + num(s.mean_gap) + " (> 0), " +
                              num(pair_secs) + " s (budget 300 s)",
                          pair_secs});
  res.summary = {{"success_rate", s.success_rate}, {"mean_gap", s.mean_gap}, {"valid", s.valid},
                 {"max_residual", worst_residual}};

  if (c.drift_trials > 0) {
    Stopwatch drift_clock;
    s.drift_samples = drift_samples(lc);
    s.drift = drift_table(s.drift_samples, lc.drift.steps, c.beta0, c.decay);
    std::vector<double> ks, rms;
    CsvBuilder samples({"trial", "i", "n", "angle", "increment_norm"});
    for (const auto& d : s.drift_samples) samples.row(d.trial, d.i, d.n, d.angle, d.increment_norm);
    CsvBuilder table({"steps", "rms_angle", "stderr", "mean_increment_ratio", "samples", "sqrt_k_over_N"});
    for (const auto& r : s.drift) {
      table.row(r.steps, r.rms_angle, r.stderr_angle, r.mean_increment_ratio, r.samples,
                std::sqrt(double(r.steps) / double(c.drift_N)));
      ks.push_back(double(r.steps));
      rms.push_back(r.rms_angle);
    }
    s.drift_slope = loglog_slope(ks, rms);
    res.files.emplace_back("drift_samples.csv", samples.str());
    res.files.emplace_back("drift_table.csv", table.str());
    res.criteria.push_back({"drift_slope", s.drift_slope >= 0.35 && s.drift_slope <= 0.65,
                            "N=" + std::to_string(c.drift_N) + ", k in {" + [&] {
                              std::string k;
                              for (auto x : c.drift_steps) k += (k.empty() ? "" : ",") + std::to_string(x);
                              return k;
                            }() + "}: log-log slope " + num(s.drift_slope) + " (band [0.35, 0.65])",
                            drift_clock.seconds()});
    res.summary["drift_slope"] = s.drift_slope;
  }
  return res;
}

// ---------------------------------------------------------------------------

/// Parses `block` (may be null for defaults) for the named suite and runs it.
inline SuiteResult run_suite(const std::string& name, const json& block, const SuiteContext& ctx) {
  const json b = block.is_null() ? json::object() : block;
  if (name == "supmatrix-trace") return run_supmatrix_trace(parse_block<SupmatrixTraceConfig>(b, name), ctx);
  if (name == "com-verify") return run_com_verify(parse_block<ComVerifyConfig>(b, name), ctx);
  if (name == "scaling") return run_scaling(parse_block<ScalingConfig>(b, name), ctx);
  if (name == "projder-check") return run_projder_check(parse_block<ProjderCheckConfig>(b, name), ctx);
  if (name == "linsup") return run_linsup(parse_block<LinSupSuiteConfig>(b, name), ctx);
  throw ConfigError("unknown suite '" + name + "'");
}

}  // namespace supercon
