#pragma once

// Feasibility-seeking iterations x_{n+1} = A_{n+1}(x_n) and their superiorized
// version x'_{n+1} = A_{n+1}(x'_n + beta_n v_n).
//
// Operator indexing: apply_operator(seq, t, x) is A_{t+1}, i.e. t counts
// operator applications from zero. Cyclic mode uses constraint t mod I.

#include "supercon/geometry.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

namespace supercon {

enum class SweepMode { cyclic, simultaneous };

class OperatorSequence {
 public:
  OperatorSequence(SweepMode mode, std::vector<ConvexBody> constraints,
                   std::vector<double> weights = {}, double relaxation = 1.0)
      : mode_(mode), constraints_(std::move(constraints)), weights_(std::move(weights)),
        relaxation_(relaxation) {
    if (constraints_.empty()) throw std::invalid_argument("OperatorSequence: no constraints");
    for (const auto& c : constraints_) require_same_dim(supercon::dim(c), dim(), "OperatorSequence");
    if (!(relaxation_ > 0.0 && relaxation_ <= 2.0))
      throw std::invalid_argument("OperatorSequence: relaxation must lie in (0, 2]");
    if (mode_ == SweepMode::simultaneous) {
      if (weights_.empty())
        weights_.assign(constraints_.size(), 1.0 / static_cast<double>(constraints_.size()));
      if (weights_.size() != constraints_.size())
        throw std::invalid_argument("OperatorSequence: one weight per constraint required");
      double total = 0.0;
      for (double w : weights_) {
        if (!(w >= 0.0)) throw std::invalid_argument("OperatorSequence: weights must be nonnegative");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("OperatorSequence: weights must sum to 1");
    } else if (!weights_.empty()) {
      throw std::invalid_argument("OperatorSequence: weights only apply to simultaneous mode");
    }
  }

  SweepMode mode() const { return mode_; }
  const std::vector<ConvexBody>& constraints() const { return constraints_; }
  const std::vector<double>& weights() const { return weights_; }
  double relaxation() const { return relaxation_; }
  Eigen::Index dim() const { return supercon::dim(constraints_.front()); }
  /// Operator applications per sweep.
  std::uint64_t sweep_length() const {
    return mode_ == SweepMode::cyclic ? constraints_.size() : 1;
  }

 private:
  SweepMode mode_;
  std::vector<ConvexBody> constraints_;
  std::vector<double> weights_;
  double relaxation_;
};

inline Vector apply_operator(const OperatorSequence& seq, std::uint64_t t, const Vector& x) {
  require_same_dim(seq.dim(), x.size(), "apply_operator");
  const double lambda = seq.relaxation();
  if (seq.mode() == SweepMode::cyclic) {
    const auto& body = seq.constraints()[t % seq.constraints().size()];
    Vector p = project(x, body);
    if (lambda == 1.0) return p;
    return x + lambda * (p - x);
  }
  Vector avg = Vector::Zero(x.size());
  for (std::size_t i = 0; i < seq.constraints().size(); ++i)
    if (seq.weights()[i] != 0.0) avg += seq.weights()[i] * project(x, seq.constraints()[i]);
  if (lambda == 1.0) return avg;
  return x + lambda * (avg - x);
}

/// max_i distance(x, C_i).
inline double residual(const OperatorSequence& seq, const Vector& x) {
  double r = 0.0;
  for (const auto& c : seq.constraints()) r = std::max(r, distance(x, c));
  return r;
}

/// beta_n = beta0 * decay^n.
class PerturbationSchedule {
 public:
  PerturbationSchedule(double beta0 = 1.0, double decay = 0.995) : beta0_(beta0), decay_(decay) {
    if (!(beta0_ >= 0.0) || !std::isfinite(beta0_))
      throw std::invalid_argument("PerturbationSchedule: beta0 must be finite and >= 0");
    if (!(decay_ > 0.0 && decay_ < 1.0))
      throw std::invalid_argument("PerturbationSchedule: decay must lie in (0, 1)");
  }
  double beta0() const { return beta0_; }
  double decay() const { return decay_; }
  double beta(std::uint64_t n) const {
    return beta0_ == 0.0 ? 0.0 : beta0_ * std::pow(decay_, static_cast<double>(n));
  }
  /// sum_{n >= 0} beta_n
  double total() const { return beta0_ / (1.0 - decay_); }
  /// sum_{n >= k} beta_n
  double tail(std::uint64_t k) const { return beta(k) / (1.0 - decay_); }

 private:
  double beta0_;
  double decay_;
};

struct StoppingRule {
  double tol = 1e-8;
  std::uint64_t max_sweeps = 100000;
  /// Hard cap on operator applications; 0 means no cap.
  std::uint64_t max_iterations = 0;
  bool record_trajectory = false;
};

struct TargetFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;

  double operator()(const Vector& x) const { return value(x); }

  /// phi(x) = <c, x> + a
  static TargetFunction linear(Vector c, double a = 0.0) {
    return {[c, a](const Vector& x) { return c.dot(x) + a; },
            [c](const Vector&) { return c; }};
  }
  /// phi(x) = |x|^2
  static TargetFunction squared_norm() {
    return {[](const Vector& x) { return x.squaredNorm(); },
            [](const Vector& x) -> Vector { return 2.0 * x; }};
  }
};

/// Returns a direction v with |v| <= 1 given the current iterate.
using DirectionRule = std::function<Vector(const Vector&)>;

/// -grad phi / |grad phi|, or zero when the gradient vanishes.
inline Vector nonascent_direction(const TargetFunction& phi, const Vector& x) {
  const Vector g = phi.gradient(x);
  const double len = g.norm();
  if (!(len >= 1e-14)) return Vector::Zero(x.size());
  return -g / len;
}

inline DirectionRule steepest_nonascent(TargetFunction phi) {
  return [phi = std::move(phi)](const Vector& x) { return nonascent_direction(phi, x); };
}

/// x + beta v, returning x untouched when beta is zero.
inline Vector perturbed(const Vector& x, double beta, const Vector& v) {
  if (beta == 0.0) return x;
  return x + beta * v;
}

inline Vector checked_direction(const DirectionRule& direction, const Vector& x) {
  Vector v = direction(x);
  require_same_dim(x.size(), v.size(), "direction");
  if (!(v.norm() <= 1.0 + 1e-12)) throw std::invalid_argument("direction: |v| must not exceed 1");
  return v;
}

struct RunResult {
  Vector final_point;
  std::uint64_t iterations = 0;
  std::uint64_t sweeps = 0;
  bool converged = false;
  double final_residual = 0.0;
  /// Sampled at the start and after each completed sweep.
  std::vector<std::uint64_t> history_iterations;
  std::vector<double> residual_history;
  std::vector<double> phi_history;
  /// Every iterate x_0, x_1, ... when StoppingRule::record_trajectory is set.
  std::vector<Vector> trajectory;
};

namespace detail {

template <class Step>
RunResult drive(const OperatorSequence& seq, const Vector& x0, const StoppingRule& stop,
                const TargetFunction* phi, Step&& step) {
  require_same_dim(seq.dim(), x0.size(), "run");
  if (!(stop.tol >= 0.0)) throw std::invalid_argument("StoppingRule: tol must be >= 0");
  RunResult out;
  Vector x = x0;
  auto sample = [&](double r) {
    out.history_iterations.push_back(out.iterations);
    out.residual_history.push_back(r);
    if (phi) out.phi_history.push_back((*phi)(x));
  };
  if (stop.record_trajectory) out.trajectory.push_back(x);
  double r = residual(seq, x);
  sample(r);
  const std::uint64_t sweep = seq.sweep_length();
  while (!(r < stop.tol) && out.sweeps < stop.max_sweeps) {
    bool capped = false;
    for (std::uint64_t j = 0; j < sweep; ++j) {
      x = step(out.iterations, x);
      ++out.iterations;
      if (stop.record_trajectory) out.trajectory.push_back(x);
      if (stop.max_iterations != 0 && out.iterations >= stop.max_iterations) {
        capped = true;
        break;
      }
    }
    r = residual(seq, x);
    if (!capped) ++out.sweeps;
    sample(r);
    if (capped) break;
  }
  out.converged = r < stop.tol;
  out.final_residual = r;
  out.final_point = std::move(x);
  return out;
}

}  // namespace detail

inline RunResult run_basic(const OperatorSequence& seq, const Vector& x0, const StoppingRule& stop = {},
                           const TargetFunction* phi = nullptr) {
  return detail::drive(seq, x0, stop, phi, [&](std::uint64_t n, const Vector& x) {
    return apply_operator(seq, n, x);
  });
}

inline RunResult run_superiorized(const OperatorSequence& seq, const Vector& x0,
                                  const PerturbationSchedule& schedule, const DirectionRule& direction,
                                  const StoppingRule& stop = {}, const TargetFunction* phi = nullptr) {
  return detail::drive(seq, x0, stop, phi, [&](std::uint64_t n, const Vector& x) {
    const double beta = schedule.beta(n);
    if (beta == 0.0) return apply_operator(seq, n, x);
    return apply_operator(seq, n, perturbed(x, beta, checked_direction(direction, x)));
  });
}

}  // namespace supercon
