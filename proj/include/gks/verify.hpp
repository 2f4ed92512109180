#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "gks/engine.hpp"
#include "gks/policy.hpp"
#include "gks/rational.hpp"

namespace gks {

/// h(0..k) of the harmonic chain plus alpha_1..alpha_k.
struct PotentialContext {
  unsigned k = 0;
  std::vector<BigNat> h;
  std::vector<BigNat> alpha;  // index 0 unused

  explicit PotentialContext(unsigned k);
  BigNat k_alpha_k() const { return BigNat(k) * alpha[k]; }
};

BigNat potential(const Configuration& a, const Configuration& b, const PotentialContext& ctx);

/// h(ell_prime) - h(ell) via k * sum alpha_{k-i}, i in [ell, ell_prime).
BigNat delta_h(unsigned ell, unsigned ell_prime, const PotentialContext& ctx);

/// (C-1) alpha_{k-ell+1} + 1. Pure arithmetic, no feasibility check.
Rational drift_formula(unsigned k, unsigned ell, unsigned c);

/// Exact E[phi(q,adv) - phi(q',adv)] over the k possible moves.
Rational expected_drift(const Configuration& q, const Configuration& adv, const Request& r,
                        const MemorylessPolicy& policy, const PotentialContext& ctx);

struct DriftSweep {
  unsigned k = 0;
  std::uint64_t cases = 0;
  std::uint64_t below_one = 0;        // expected drift < 1
  std::uint64_t formula_mismatch = 0;  // enumeration != drift_formula
  std::vector<std::pair<unsigned, unsigned>> covered;  // (ell, C) pairs seen
  Rational min_drift;
  bool ok() const { return cases > 0 && below_one == 0 && formula_mismatch == 0; }
};

/// Every (q = 0, adv, r) over three points per metric satisfying the
/// preconditions, uniform policy.
DriftSweep exhaustive_drift_check(unsigned k);

struct Violation {
  std::uint64_t t = 0;
  std::string kind;
  std::string detail;
};

struct VerifyReport {
  unsigned k = 0;
  std::uint64_t steps = 0;
  std::uint64_t alg_cost = 0;
  std::uint64_t adv_cost = 0;
  std::uint64_t drift_steps = 0;
  std::vector<Violation> violations;
  BigNat phi_start, phi_end;
  Rational expected_sum, realized_sum, adversary_increase;
  Rational residual;  // sum of (expected - realized) algorithm drift
  double residual_step_variance = 0.0;
  Rational min_expected_drift;
  Rational bound_rhs;  // k alpha_k ADV + phi_start - phi_end + residual
  bool bound_holds = false;
  bool identity_holds = false;
  bool uniform_policy = true;

  bool ok() const { return violations.empty() && bound_holds && identity_holds; }
};

/// Uses the uniform policy for expectations unless the trace names another.
VerifyReport verify_trace(const Trace& trace, const PotentialContext& ctx);

nlohmann::json report_json(const VerifyReport& report, std::size_t max_violations = 50);

}  // namespace gks
