#pragma once

// Lower-triangular superiorization matrix M(n, k):
//   M(0, 0)     = x0
//   M(n, k)     = A_n(M(n-1, k))          for k <= n
//   M(n, n + 1) = M(n, n) + beta_n v_n
// Column 0 is the basic trajectory, the diagonal the superiorized one.

#include "supercon/csv.hpp"
#include "supercon/feasibility.hpp"

#include <map>
#include <ostream>

namespace supercon {

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class DegenerateIncrement : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SupMatrixOptions {
  std::size_t memory_budget_bytes = std::size_t{2} << 30;
};

/// Number of stored vectors for rows 0..n_max (row n holds n + 2 entries).
inline std::uint64_t supmatrix_entry_count(std::uint64_t n_max) {
  return (n_max + 1) * (n_max + 4) / 2;
}

class SupMatrix {
 public:
  static SupMatrix build(const OperatorSequence& seq, const Vector& x0, const PerturbationSchedule& schedule,
                         const DirectionRule& direction, std::uint64_t n_max,
                         const SupMatrixOptions& options = {}) {
    require_same_dim(seq.dim(), x0.size(), "SupMatrix::build");
    const long double bytes = static_cast<long double>(supmatrix_entry_count(n_max)) *
                              static_cast<long double>(x0.size()) * sizeof(double);
    if (bytes > static_cast<long double>(options.memory_budget_bytes))
      throw CapacityError("SupMatrix::build: " + std::to_string(supmatrix_entry_count(n_max)) +
                          " vectors of dimension " + std::to_string(x0.size()) +
                          " exceed the memory budget of " + std::to_string(options.memory_budget_bytes) +
                          " bytes");
    SupMatrix m(seq, schedule);
    m.rows_.reserve(n_max + 1);
    for (std::uint64_t n = 0; n <= n_max; ++n) {
      std::vector<Vector> row;
      row.reserve(n + 2);
      if (n == 0) {
        row.push_back(x0);
      } else {
        const auto& above = m.rows_.back();
        for (std::uint64_t k = 0; k <= n; ++k) row.push_back(apply_operator(seq, n - 1, above[k]));
      }
      const double beta = schedule.beta(n);
      Vector v = beta == 0.0 ? Vector::Zero(x0.size()) : checked_direction(direction, row[n]);
      row.push_back(perturbed(row[n], beta, v));
      m.betas_.push_back(beta);
      m.directions_.push_back(std::move(v));
      m.rows_.push_back(std::move(row));
    }
    return m;
  }

  std::uint64_t n_max() const { return rows_.size() - 1; }
  Eigen::Index dim() const { return rows_.front().front().size(); }
  const OperatorSequence& operators() const { return seq_; }
  const PerturbationSchedule& schedule() const { return schedule_; }
  double beta(std::uint64_t n) const { return betas_.at(n); }
  const Vector& direction(std::uint64_t n) const { return directions_.at(n); }

  bool has(std::uint64_t n, std::uint64_t k) const { return n <= n_max() && k <= n + 1; }

  const Vector& entry(std::uint64_t n, std::uint64_t k) const {
    if (!has(n, k))
      throw std::out_of_range("SupMatrix::entry(" + std::to_string(n) + ", " + std::to_string(k) + ")");
    return rows_[n][k];
  }
  const std::vector<Vector>& row(std::uint64_t n) const { return rows_.at(n); }

  /// First row in which column k exists.
  static std::uint64_t first_row(std::uint64_t k) { return k == 0 ? 0 : k - 1; }

 private:
  SupMatrix(const OperatorSequence& seq, const PerturbationSchedule& schedule) : seq_(seq), schedule_(schedule) {}

  OperatorSequence seq_;
  PerturbationSchedule schedule_;
  std::vector<std::vector<Vector>> rows_;
  std::vector<double> betas_;
  std::vector<Vector> directions_;
};

/// |phi(M(n,0)) - phi(M(n,n)) - sum_{k=1..n} [phi(M(n,k-1)) - phi(M(n,k))]|
inline double telescoping_check(const SupMatrix& m, std::uint64_t n, const TargetFunction& phi) {
  if (n > m.n_max()) throw std::out_of_range("telescoping_check: row beyond n_max");
  const auto& row = m.row(n);
  std::vector<double> values;
  values.reserve(n + 1);
  for (std::uint64_t k = 0; k <= n; ++k) values.push_back(phi(row[k]));
  double sum = 0.0;
  for (std::uint64_t k = 1; k <= n; ++k) sum += values[k - 1] - values[k];
  return std::abs(values[0] - values[n] - sum);
}

/// Whether a telescoping residual is within the accepted round-off budget.
inline bool telescoping_ok(double residual, double phi_xn) {
  return residual <= 1e-9 * (1.0 + std::abs(phi_xn));
}

struct ColumnLimit {
  Vector point;
  bool settled = false;
  /// Row index of `point` (beyond n_max when the column was extended).
  std::uint64_t depth = 0;
  /// Relative change over the last sweep.
  double last_change = 0.0;
};

/// Estimate of lim_n M(n, k). Looks at the change over the last sweep of the
/// materialized column; when `max_extra_sweeps` > 0 keeps applying the
/// operators A_{n_max+1}, ... until the per-sweep change drops below
/// tol * (1 + |x|).
inline ColumnLimit column_limit(const SupMatrix& m, std::uint64_t k, double tol = 1e-10,
                                std::uint64_t max_extra_sweeps = 0) {
  if (k > m.n_max() + 1) throw std::out_of_range("column_limit: column beyond n_max + 1");
  const auto& seq = m.operators();
  const std::uint64_t sweep = seq.sweep_length();
  const std::uint64_t top = SupMatrix::first_row(k);
  ColumnLimit out;
  out.depth = m.n_max();
  out.point = m.entry(out.depth, k);
  auto rel_change = [](const Vector& a, const Vector& b) { return (a - b).norm() / (1.0 + a.norm()); };

  if (out.depth >= top + sweep) {
    out.last_change = rel_change(out.point, m.entry(out.depth - sweep, k));
    out.settled = out.last_change < tol;
  } else {
    out.last_change = std::numeric_limits<double>::infinity();
  }
  for (std::uint64_t s = 0; s < max_extra_sweeps && !out.settled; ++s) {
    Vector x = out.point;
    for (std::uint64_t j = 0; j < sweep; ++j) {
      // A_{depth+1} is apply_operator(seq, depth, .)
      x = apply_operator(seq, out.depth, x);
      ++out.depth;
    }
    out.last_change = rel_change(x, out.point);
    out.point = std::move(x);
    out.settled = out.last_change < tol;
  }
  return out;
}

struct Increment {
  std::uint64_t row = 0;
  std::uint64_t col = 0;
  Vector delta;
};

/// Delta_{k,i} = M(k, i+1) - M(k, i). On the diagonal (k == i) this is the
/// recorded perturbation beta_i v_i.
inline Increment increment(const SupMatrix& m, std::uint64_t k, std::uint64_t i) {
  if (k < i || !m.has(k, i + 1))
    throw std::out_of_range("increment(" + std::to_string(k) + ", " + std::to_string(i) + ")");
  if (k == i) return {k, i, m.beta(i) * m.direction(i)};
  return {k, i, m.entry(k, i + 1) - m.entry(k, i)};
}

/// Angle in [0, pi] between a and b, computed as atan2(|a_perp|, <a, b_hat>).
inline double angle_between(const Vector& a, const Vector& b) {
  const double lb = b.norm();
  if (a.norm() == 0.0 || lb == 0.0) throw DegenerateIncrement("angle_between: zero vector");
  const Vector b_hat = b / lb;
  const double along = a.dot(b_hat);
  return std::atan2((a - along * b_hat).norm(), along);
}

/// Angle between Delta_{n,i} and v_i.
inline double angle_drift(const SupMatrix& m, std::uint64_t i, std::uint64_t n) {
  if (n == i) {
    if (m.beta(i) == 0.0 || m.direction(i).norm() == 0.0)
      throw DegenerateIncrement("angle_drift: zero increment");
    return 0.0;
  }
  const Increment inc = increment(m, n, i);
  if (inc.delta.norm() == 0.0) throw DegenerateIncrement("angle_drift: zero increment");
  return angle_between(inc.delta, m.direction(i));
}

// ---------------------------------------------------------------------------
// Streaming construction: keeps two rows and the requested columns only.

class ColumnTrace {
 public:
  /// Entry M(n, k) for a traced column k.
  const Vector& entry(std::uint64_t n, std::uint64_t k) const {
    const auto& col = columns_.at(k);
    const std::uint64_t top = SupMatrix::first_row(k);
    if (n < top || n - top >= col.size()) throw std::out_of_range("ColumnTrace::entry");
    return col[n - top];
  }
  bool has(std::uint64_t n, std::uint64_t k) const {
    const auto it = columns_.find(k);
    if (it == columns_.end()) return false;
    const std::uint64_t top = SupMatrix::first_row(k);
    return n >= top && n - top < it->second.size();
  }
  double beta(std::uint64_t n) const { return betas_.at(n); }
  const Vector& direction(std::uint64_t n) const { return directions_.at(n); }
  std::uint64_t n_max() const { return betas_.size() - 1; }

  /// Angle between Delta_{n,i} and v_i; columns i and i+1 must be traced.
  double angle_drift(std::uint64_t i, std::uint64_t n) const {
    if (n == i) {
      if (beta(i) == 0.0 || direction(i).norm() == 0.0) throw DegenerateIncrement("angle_drift: zero increment");
      return 0.0;
    }
    const Vector delta = entry(n, i + 1) - entry(n, i);
    if (delta.norm() == 0.0) throw DegenerateIncrement("angle_drift: zero increment");
    return angle_between(delta, direction(i));
  }
  double increment_norm(std::uint64_t i, std::uint64_t n) const {
    if (n == i) return beta(i) * direction(i).norm();
    return (entry(n, i + 1) - entry(n, i)).norm();
  }

 private:
  friend ColumnTrace trace_columns(const OperatorSequence&, const Vector&, const PerturbationSchedule&,
                                   const DirectionRule&, std::uint64_t, const std::vector<std::uint64_t>&);
  std::map<std::uint64_t, std::vector<Vector>> columns_;
  std::vector<double> betas_;
  std::vector<Vector> directions_;
};

/// Builds rows 0..n_max holding only rows n-1 and n in memory, recording the
/// requested columns. Produces entries bitwise equal to SupMatrix::build.
inline ColumnTrace trace_columns(const OperatorSequence& seq, const Vector& x0, const PerturbationSchedule& schedule,
                                 const DirectionRule& direction, std::uint64_t n_max,
                                 const std::vector<std::uint64_t>& columns) {
  require_same_dim(seq.dim(), x0.size(), "trace_columns");
  ColumnTrace trace;
  for (auto k : columns) trace.columns_[k];
  std::vector<Vector> prev;
  for (std::uint64_t n = 0; n <= n_max; ++n) {
    std::vector<Vector> row;
    row.reserve(n + 2);
    if (n == 0) {
      row.push_back(x0);
    } else {
      for (std::uint64_t k = 0; k <= n; ++k) row.push_back(apply_operator(seq, n - 1, prev[k]));
    }
    const double beta = schedule.beta(n);
    Vector v = beta == 0.0 ? Vector::Zero(x0.size()) : checked_direction(direction, row[n]);
    row.push_back(perturbed(row[n], beta, v));
    trace.betas_.push_back(beta);
    trace.directions_.push_back(std::move(v));
    for (auto& [k, col] : trace.columns_)
      if (k <= n + 1) col.push_back(row[k]);
    prev = std::move(row);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// CSV dumps

/// Rows (n, k, norm, phi) for every stored entry.
inline void write_entries_csv(std::ostream& os, const SupMatrix& m, const TargetFunction& phi) {
  os << "n,k,norm,phi\n";
  for (std::uint64_t n = 0; n <= m.n_max(); ++n)
    for (std::uint64_t k = 0; k <= n + 1; ++k) {
      const Vector& e = m.entry(n, k);
      os << n << ',' << k << ',' << csv_number(e.norm()) << ',' << csv_number(phi(e)) << '\n';
    }
}

}  // namespace supercon
