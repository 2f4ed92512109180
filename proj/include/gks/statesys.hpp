#pragma once

// The 2^k-state hitting-time system of the lower-bound instance.
//
// State S is the set of metrics where the algorithm and the adversary
// differ, encoded as a k-bit mask over canonical ranks (bit r <-> the
// metric with the (r+1)-th largest probability). For S != {} with
// m = min(S):
//
//   p_m (h(S) - h(S \ m)) = 1 + sum_{j not in S} p_j (h(S + j) - h(S)),
//
// and h({}) = 0.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gks/policy.hpp"
#include "gks/rational.hpp"

namespace gks {

using SubsetMask = std::uint32_t;

inline constexpr unsigned kMaxExactK = 12;
inline constexpr unsigned kMaxIterativeK = 24;

/// One row of the system as a linear form: sum coef * h(mask) = rhs.
struct SubsetEquation {
  SubsetMask subset = 0;
  std::vector<std::pair<SubsetMask, Rational>> terms;
  Rational rhs;
};

struct SubsetSystem {
  unsigned k = 0;
  std::vector<Rational> probs;           // canonical order
  std::vector<SubsetEquation> equations;  // equations[mask], mask 0 is h({}) = 0
};

/// Sparse form of the system, each row touching at most k + 2 unknowns.
SubsetSystem build_system(const MemorylessPolicy& policy);

enum class SolveMode { exact, iterative };

std::string to_string(SolveMode mode);

struct SolveOptions {
  SolveMode mode = SolveMode::exact;
  double tolerance = 1e-12;
  std::size_t max_sweeps = 200000;
};

/// Raised when the iterative solver runs out of sweeps or the exact
/// elimination meets a zero pivot.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

class SubsetSolution {
 public:
  /// Wraps externally supplied exact values (e.g. read back from CSV).
  static SubsetSolution from_exact(const MemorylessPolicy& policy, std::vector<Rational> h);
  static SubsetSolution from_approx(const MemorylessPolicy& policy, std::vector<long double> h, double tolerance);

  unsigned k() const { return k_; }
  SubsetMask full() const { return (SubsetMask{1} << k_) - 1; }
  SolveMode mode() const { return mode_; }
  double tolerance() const { return tolerance_; }
  std::size_t iterations() const { return iterations_; }
  /// Max |lhs - rhs| over all rows.
  double residual() const { return residual_; }
  const std::vector<Rational>& canonical_probs() const { return probs_; }
  const std::vector<std::size_t>& order() const { return order_; }

  bool exact() const { return mode_ == SolveMode::exact; }
  /// Exact value; throws std::logic_error in iterative mode.
  const Rational& h(SubsetMask s) const;
  const std::vector<Rational>& exact_values() const;
  /// Floating value, available in both modes.
  long double approx(SubsetMask s) const;

  /// h({k}), the state right after the adversary's move at a phase start.
  long double h_last_approx() const { return approx(SubsetMask{1} << (k_ - 1)); }

 private:
  friend SubsetSolution solve_system(const MemorylessPolicy&, const SolveOptions&);
  SubsetSolution() = default;

  unsigned k_ = 0;
  std::vector<Rational> probs_;
  std::vector<std::size_t> order_;
  SolveMode mode_ = SolveMode::exact;
  double tolerance_ = 0.0;
  std::size_t iterations_ = 0;
  double residual_ = 0.0;
  std::vector<Rational> exact_;
  std::vector<long double> approx_;
};

/// Exact mode: block elimination over rationals (k <= 12), certified by
/// substituting back into every row. Iterative mode: Gauss-Seidel sweeps in
/// order of increasing |S| until the row residual drops below tolerance
/// (k <= 24).
SubsetSolution solve_system(const MemorylessPolicy& policy, const SolveOptions& options = {});

/// Exact residual of every row; all zero for a valid exact solution.
Rational max_abs_residual(const SubsetSystem& system, const std::vector<Rational>& h);

/// alpha_k / p_k with p_k the smallest probability.
Rational lower_bound_hk(const MemorylessPolicy& policy);

struct SubsetViolation {
  SubsetMask subset = 0;
  unsigned i = 0;  // canonical ranks, 0-based
  unsigned j = 0;
  std::string lhs;
  std::string rhs;
};

/// For every S and i < j in S: p_i (h(S) - h(S - i)) <= p_j (h(S) - h(S - j)).
std::vector<SubsetViolation> check_monotonicity(const SubsetSolution& sol);

/// For every S != {} and i in S: p_i (h(S) - h(S - i)) >= alpha_{k-|S|+1}.
std::vector<SubsetViolation> check_subset_alpha_bound(const SubsetSolution& sol);

struct PhiResult {
  std::vector<Rational> phi;              // exact mode
  std::vector<long double> phi_approx;    // both modes
  std::optional<std::string> violation;   // first transformed row that fails
  bool ok() const { return !violation.has_value(); }
};

/// phi(S) = h([k]) - h([k] \ S), checked against the transformed system
/// p_m (phi(T + m) - phi(T)) = 1 + sum_{j in T} p_j (phi(T) - phi(T - j)),
/// m = min([k] \ T), for every T != [k].
PhiResult phi_transform(const SubsetSolution& sol);

/// h({k}) - k alpha_k from an exact solve.
Rational competitive_gap(const MemorylessPolicy& policy);
Rational competitive_gap(const SubsetSolution& sol);

/// Rows (subset_mask, subset_size, h_num, h_den). Exact mode only.
void write_solution_csv(std::ostream& os, const SubsetSolution& sol);

/// {policy, h_k, lower_bound, gap, residual, mode, iterations}.
nlohmann::json solution_summary(const MemorylessPolicy& policy, const SubsetSolution& sol);

}  // namespace gks
