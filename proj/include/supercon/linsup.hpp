#pragma once

// Random consistent half-space systems with a linear target, and paired
// basic / superiorized runs from a shared start.

#include "supercon/concentration.hpp"
#include "supercon/supermatrix.hpp"

namespace supercon {

struct LinSupProblem {
  std::vector<HalfSpace> halfspaces;
  Vector target_c;
  double target_a = 0.0;
  /// Satisfies every half-space with slack >= margin.
  Vector witness;
  double margin = 0.0;

  Eigen::Index N() const { return witness.size(); }
  TargetFunction target() const { return TargetFunction::linear(target_c, target_a); }
  OperatorSequence operators(double relaxation = 1.0) const {
    return OperatorSequence(SweepMode::cyclic, std::vector<ConvexBody>(halfspaces.begin(), halfspaces.end()), {},
                            relaxation);
  }
};

/// Witness uniform in the unit ball; normals uniform on the sphere; offsets
/// <u, witness> + slack with slack uniform in [margin, 2 margin]; c uniform on
/// the sphere.
inline LinSupProblem gen_problem(Eigen::Index n, std::size_t count, double margin, Rng& rng) {
  if (n < 2) throw std::invalid_argument("gen_problem: N must be >= 2");
  if (count < 1) throw std::invalid_argument("gen_problem: I must be >= 1");
  if (!(margin > 0.0) || !std::isfinite(margin)) throw std::invalid_argument("gen_problem: margin must be > 0");
  LinSupProblem p;
  p.margin = margin;
  p.witness = uniform_ball(n, 1.0, rng);
  p.halfspaces.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector u = uniform_sphere(n, rng);
    const double slack = margin * (1.0 + rng.uniform());
    const double b = u.dot(p.witness) + slack;
    p.halfspaces.emplace_back(std::move(u), b);
  }
  p.target_c = uniform_sphere(n, rng);
  return p;
}

struct PairedOutcome {
  double phi_basic = 0.0;
  double phi_sup = 0.0;
  double gap = 0.0;  // phi_basic - phi_sup
  double residual_basic = 0.0;
  double residual_sup = 0.0;
  std::uint64_t iterations_basic = 0;
  std::uint64_t iterations_sup = 0;
  bool valid = false;

  double tol_phi() const { return 1e-9 * (1.0 + std::abs(phi_basic)); }
  bool success() const { return gap >= -tol_phi(); }
};

/// Both runs start at x0 (origin when empty); only the superiorized one is
/// perturbed, along -c/|c|.
inline PairedOutcome run_pair(const LinSupProblem& p, const PerturbationSchedule& schedule,
                              const StoppingRule& stop = {}, const Vector& x0 = Vector()) {
  const Vector start = x0.size() == 0 ? Vector::Zero(p.N()) : x0;
  const OperatorSequence seq = p.operators();
  const TargetFunction phi = p.target();
  const RunResult basic = run_basic(seq, start, stop);
  const RunResult sup = run_superiorized(seq, start, schedule, steepest_nonascent(phi), stop);
  PairedOutcome o;
  o.phi_basic = phi(basic.final_point);
  o.phi_sup = phi(sup.final_point);
  o.gap = o.phi_basic - o.phi_sup;
  o.residual_basic = basic.final_residual;
  o.residual_sup = sup.final_residual;
  o.iterations_basic = basic.iterations;
  o.iterations_sup = sup.iterations;
  o.valid = basic.converged && sup.converged;
  return o;
}

// ---------------------------------------------------------------------------
// Batch experiment

struct DriftConfig {
  Eigen::Index N = 500;
  std::size_t I = 500;
  std::size_t trials = 20;
  /// Rows i at which a perturbation is followed; each i contributes n = i + k.
  std::vector<std::uint64_t> rows = {200, 400, 600};
  std::vector<std::uint64_t> steps = {4, 16, 64};
};

struct LinSupConfig {
  Eigen::Index N = 200;
  std::size_t I = 100;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double margin = 0.1;
  double beta0 = 1.0;
  double decay = 0.995;
  double tol = 1e-8;
  std::uint64_t max_sweeps = 100000;
  unsigned threads = 1;
  /// Drift statistics are skipped when drift.trials is 0.
  DriftConfig drift;
};

struct DriftRow {
  std::uint64_t steps = 0;  // k = n - i
  double rms_angle = 0.0;
  double stderr_angle = 0.0;  // standard error of the mean squared angle, mapped through sqrt
  double mean_increment_ratio = 0.0;  // |Delta_{n,i}| / beta_i
  std::size_t samples = 0;
};

struct DriftSample {
  std::size_t trial = 0;
  std::uint64_t i = 0;
  std::uint64_t n = 0;
  double angle = 0.0;
  double increment_norm = 0.0;
};

struct LinSupSummary {
  std::vector<PairedOutcome> outcomes;
  std::size_t valid = 0;
  double success_rate = 0.0;
  double mean_gap = 0.0;
  std::vector<DriftSample> drift_samples;
  std::vector<DriftRow> drift;
  /// Least-squares slope of log RMS angle against log k (NaN if unavailable).
  double drift_slope = std::numeric_limits<double>::quiet_NaN();
};

inline void validate(const LinSupConfig& c) {
  if (c.N < 2) throw std::invalid_argument("linsup: N must be >= 2");
  if (c.I < 1) throw std::invalid_argument("linsup: I must be >= 1");
  if (c.trials < 1) throw std::invalid_argument("linsup: trials must be >= 1");
  if (!(c.margin > 0.0)) throw std::invalid_argument("linsup: margin must be > 0");
  PerturbationSchedule(c.beta0, c.decay);
  if (!(c.tol > 0.0)) throw std::invalid_argument("linsup: tol must be > 0");
  if (c.max_sweeps < 1) throw std::invalid_argument("linsup: max_sweeps must be >= 1");
  if (c.drift.trials > 0) {
    if (c.drift.N < 2 || c.drift.I < 1) throw std::invalid_argument("linsup.drift: bad N or I");
    if (c.drift.rows.empty() || c.drift.steps.empty()) throw std::invalid_argument("linsup.drift: rows and steps required");
    for (auto k : c.drift.steps)
      if (k < 1) throw std::invalid_argument("linsup.drift: steps must be >= 1");
  }
}

/// Angles between Delta_{i+k,i} and v_i for the configured rows i and steps k,
/// from streamed superiorization matrices of fresh problems.
inline std::vector<DriftSample> drift_samples(const LinSupConfig& c) {
  const auto& d = c.drift;
  const PerturbationSchedule schedule(c.beta0, c.decay);
  std::uint64_t n_max = 0;
  std::vector<std::uint64_t> columns;
  for (auto i : d.rows) {
    columns.push_back(i);
    columns.push_back(i + 1);
    for (auto k : d.steps) n_max = std::max(n_max, i + k);
  }
  const MonteCarloOptions opts{c.seed, d.trials, c.threads};
  auto per_trial = run_trials<std::vector<DriftSample>>(experiment_key("linsup.drift"), opts, [&](Rng& rng) {
    const LinSupProblem p = gen_problem(d.N, d.I, c.margin, rng);
    const ColumnTrace trace = trace_columns(p.operators(), Vector::Zero(d.N), schedule,
                                            steepest_nonascent(p.target()), n_max, columns);
    std::vector<DriftSample> out;
    for (auto i : d.rows)
      for (auto k : d.steps) {
        DriftSample s;
        s.i = i;
        s.n = i + k;
        s.increment_norm = trace.increment_norm(i, i + k);
        s.angle = s.increment_norm > 0.0 ? trace.angle_drift(i, i + k) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(s);
      }
    return out;
  });
  std::vector<DriftSample> all;
  for (std::size_t t = 0; t < per_trial.size(); ++t)
    for (auto s : per_trial[t]) {
      s.trial = t;
      all.push_back(s);
    }
  return all;
}

inline std::vector<DriftRow> drift_table(const std::vector<DriftSample>& samples, const std::vector<std::uint64_t>& steps,
                                         double beta0, double decay) {
  const PerturbationSchedule schedule(beta0, decay);
  std::vector<DriftRow> rows;
  for (auto k : steps) {
    std::vector<double> sq;
    CompensatedSum ratio;
    for (const auto& s : samples) {
      if (s.n - s.i != k || std::isnan(s.angle)) continue;
      sq.push_back(s.angle * s.angle);
      ratio.add(s.increment_norm / schedule.beta(s.i));
    }
    DriftRow r;
    r.steps = k;
    r.samples = sq.size();
    if (!sq.empty()) {
      const auto m = moments(sq);
      r.rms_angle = std::sqrt(m.mean);
      const double se = m.std / std::sqrt(static_cast<double>(m.count));
      r.stderr_angle = r.rms_angle > 0.0 ? se / (2.0 * r.rms_angle) : 0.0;
      r.mean_increment_ratio = ratio.value() / static_cast<double>(sq.size());
    }
    rows.push_back(r);
  }
  return rows;
}

/// Slope of log y against log x by least squares over positive pairs.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return fit_line(lx, ly).slope;
}

inline LinSupSummary batch_experiment(const LinSupConfig& c) {
  validate(c);
  const PerturbationSchedule schedule(c.beta0, c.decay);
  StoppingRule stop;
  stop.tol = c.tol;
  stop.max_sweeps = c.max_sweeps;
  const MonteCarloOptions opts{c.seed, c.trials, c.threads};
  LinSupSummary s;
  s.outcomes = run_trials<PairedOutcome>(experiment_key("linsup.pairs"), opts, [&](Rng& rng) {
    return run_pair(gen_problem(c.N, c.I, c.margin, rng), schedule, stop);
  });
  std::size_t wins = 0;
  CompensatedSum gaps;
  for (const auto& o : s.outcomes) {
    if (!o.valid) continue;
    ++s.valid;
    if (o.success()) ++wins;
    gaps.add(o.gap);
  }
  if (s.valid == 0) throw std::runtime_error("batch_experiment: no valid trial");
  s.success_rate = static_cast<double>(wins) / static_cast<double>(s.valid);
  s.mean_gap = gaps.value() / static_cast<double>(s.valid);

  if (c.drift.trials > 0) {
    s.drift_samples = drift_samples(c);
    s.drift = drift_table(s.drift_samples, c.drift.steps, c.beta0, c.decay);
    std::vector<double> ks, rms;
    for (const auto& r : s.drift) {
      ks.push_back(static_cast<double>(r.steps));
      rms.push_back(r.rms_angle);
    }
    s.drift_slope = loglog_slope(ks, rms);
  }
  return s;
}

}  // namespace supercon
