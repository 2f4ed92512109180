#include "gks/verify.hpp"

#include <cmath>
#include <stdexcept>

#include "gks/chains.hpp"
#include "gks/harmonic.hpp"

namespace gks {

PotentialContext::PotentialContext(unsigned k_) : k(k_) {
  if (k == 0 || k > kMaxAlphaIndex) {
    throw std::invalid_argument("potential context: k must be in 1.." + std::to_string(kMaxAlphaIndex));
  }
  h = harmonic_eet_table(k);
  alpha = alpha_table(k);
}

BigNat potential(const Configuration& a, const Configuration& b, const PotentialContext& ctx) {
  if (a.size() != ctx.k) throw std::invalid_argument("potential: configuration length differs from k");
  return ctx.h[hamming(a, b)];
}

BigNat delta_h(unsigned ell, unsigned ell_prime, const PotentialContext& ctx) {
  if (ell >= ell_prime || ell_prime > ctx.k) {
    throw std::invalid_argument("delta_h: need 0 <= ell < ell' <= k");
  }
  BigNat s;
  for (unsigned i = ell; i < ell_prime; ++i) s += ctx.alpha[ctx.k - i];
  return BigNat(ctx.k) * s;
}

Rational drift_formula(unsigned k, unsigned ell, unsigned c) {
  if (ell == 0 || ell > k || c == 0) throw std::invalid_argument("drift_formula: need 1 <= ell <= k and C >= 1");
  return Rational(alpha(k - ell + 1)) * Rational(static_cast<long>(c) - 1) + Rational(1);
}

Rational expected_drift(const Configuration& q, const Configuration& adv, const Request& r,
                        const MemorylessPolicy& policy, const PotentialContext& ctx) {
  if (q.size() != ctx.k || adv.size() != ctx.k || r.size() != ctx.k || policy.k() != ctx.k) {
    throw std::invalid_argument("expected_drift: length mismatch");
  }
  if (serves(q, r)) throw std::invalid_argument("expected_drift: q already serves the request");
  if (!serves(adv, r)) throw std::invalid_argument("expected_drift: adversary does not serve the request");
  const unsigned ell = hamming(q, adv);
  const Rational before(ctx.h[ell]);
  Rational e;
  for (std::size_t j = 0; j < ctx.k; ++j) {
    // only coordinate j changes, so the distance moves by at most one
    unsigned after = ell;
    if (q[j] == adv[j]) ++after;
    else if (r[j] == adv[j]) --after;
    e.add_mul(policy.prob(j), before - Rational(ctx.h[after]));
  }
  return e;
}

DriftSweep exhaustive_drift_check(unsigned k) {
  if (k == 0 || k > 8) throw std::invalid_argument("exhaustive_drift_check: k must be in 1..8");
  const PotentialContext ctx(k);
  const auto policy = MemorylessPolicy::uniform(k);
  DriftSweep out;
  out.k = k;
  std::vector<std::vector<char>> seen(k + 1, std::vector<char>(k + 1, 0));
  std::uint64_t total = 1;
  for (unsigned i = 0; i < 2 * k; ++i) total *= 3;
  const Configuration q(std::vector<std::uint32_t>(k, 0));
  Configuration adv(std::vector<std::uint32_t>(k, 0));
  Request r(std::vector<std::uint32_t>(k, 0));
  bool first = true;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    for (unsigned i = 0; i < k; ++i, c /= 3) adv[i] = static_cast<std::uint32_t>(c % 3);
    for (unsigned i = 0; i < k; ++i, c /= 3) r[i] = static_cast<std::uint32_t>(c % 3);
    if (serves(q, r) || !serves(adv, r)) continue;
    const Rational d = expected_drift(q, adv, r, policy, ctx);
    const unsigned ell = hamming(q, adv);
    unsigned matches = 0;
    for (unsigned i = 0; i < k; ++i) matches += adv[i] == r[i];
    ++out.cases;
    seen[ell][matches] = 1;
    if (d < Rational(1)) ++out.below_one;
    if (d != drift_formula(k, ell, matches)) ++out.formula_mismatch;
    if (first || d < out.min_drift) out.min_drift = d;
    first = false;
  }
  for (unsigned ell = 0; ell <= k; ++ell) {
    for (unsigned m = 0; m <= k; ++m) {
      if (seen[ell][m]) out.covered.emplace_back(ell, m);
    }
  }
  return out;
}

VerifyReport verify_trace(const Trace& trace, const PotentialContext& ctx) {
  if (trace.k != ctx.k) throw std::invalid_argument("verify: trace k differs from context k");
  if (trace.steps.empty()) throw std::invalid_argument("verify: empty trace");
  const MemorylessPolicy policy =
      trace.policy.empty() ? MemorylessPolicy::uniform(ctx.k) : MemorylessPolicy::parse(trace.policy);
  if (policy.k() != ctx.k) throw std::invalid_argument("verify: trace policy has the wrong length");

  VerifyReport rep;
  rep.k = ctx.k;
  rep.uniform_policy = policy.is_uniform();
  rep.steps = trace.steps.size();
  const Rational bound_per_move(ctx.k_alpha_k());
  auto flag = [&](std::uint64_t t, const char* kind, std::string detail) {
    rep.violations.push_back({t, kind, std::move(detail)});
  };

  Configuration q = trace.alg0, adv = trace.adv0;
  rep.phi_start = potential(q, adv, ctx);
  double mean = 0.0, m2 = 0.0;
  bool have_min = false;
  for (const auto& st : trace.steps) {
    const unsigned d_alg = hamming(q, st.alg), d_adv = hamming(adv, st.adv);
    if (d_alg != st.alg_cost) {
      flag(st.t, "alg_cost_mismatch", "recorded " + std::to_string(st.alg_cost) + ", moved " + std::to_string(d_alg));
    }
    if (d_adv != st.adv_cost) {
      flag(st.t, "adv_cost_mismatch", "recorded " + std::to_string(st.adv_cost) + ", moved " + std::to_string(d_adv));
    }
    if (st.state != state_mask(st.alg, st.adv, trace.rank)) flag(st.t, "state_mismatch", "state mask inconsistent");
    if (!serves(st.adv, st.request)) flag(st.t, "adversary_not_serving", "adversary misses the request");

    // adversary half-step
    const BigNat phi0 = potential(q, adv, ctx);
    const BigNat phi1 = potential(q, st.adv, ctx);
    const Rational rise = Rational(phi1) - Rational(phi0);
    rep.adversary_increase += rise;
    if (rise > bound_per_move * Rational(static_cast<long>(st.adv_cost))) {
      flag(st.t, "adversary_jump", "potential rose by " + rise.to_display() + " > " +
                               (bound_per_move * Rational(static_cast<long>(st.adv_cost))).to_display());
    }

    // algorithm half-step
    const bool in_place = serves(q, st.request);
    if (in_place) {
      if (d_alg != 0) flag(st.t, "unneeded_move", "request already served but algorithm moved");
    } else {
      if (d_alg != 1) {
        flag(st.t, "bad_move", "algorithm moved " + std::to_string(d_alg) + " servers");
      } else {
        std::size_t j = 0;
        while (q[j] == st.alg[j]) ++j;
        if (st.alg[j] != st.request[j]) flag(st.t, "bad_move", "algorithm moved off the request");
      }
      if (serves(st.adv, st.request)) {
        const BigNat phi2 = potential(st.alg, st.adv, ctx);
        const Rational realized = Rational(phi1) - Rational(phi2);
        const Rational expected = expected_drift(q, st.adv, st.request, policy, ctx);
        ++rep.drift_steps;
        rep.expected_sum += expected;
        rep.realized_sum += realized;
        const Rational diff = expected - realized;
        rep.residual += diff;
        const double x = static_cast<double>(diff.to_long_double());
        const double dm = x - mean;
        mean += dm / static_cast<double>(rep.drift_steps);
        m2 += dm * (x - mean);
        if (!have_min || expected < rep.min_expected_drift) rep.min_expected_drift = expected;
        have_min = true;
        if (rep.uniform_policy && expected < Rational(1)) {
          flag(st.t, "drift_below_one", "expected drift " + expected.to_display() + " < 1");
        }
      }
    }
    rep.alg_cost += st.alg_cost;
    rep.adv_cost += st.adv_cost;
    q = st.alg;
    adv = st.adv;
  }
  rep.phi_end = potential(q, adv, ctx);
  rep.residual_step_variance = rep.drift_steps > 1 ? m2 / static_cast<double>(rep.drift_steps - 1) : 0.0;

  const Rational phi_drop = Rational(rep.phi_start) - Rational(rep.phi_end);
  rep.identity_holds = rep.realized_sum - rep.adversary_increase == phi_drop;
  rep.bound_rhs = bound_per_move * Rational(static_cast<long>(rep.adv_cost)) + phi_drop + rep.residual;
  rep.bound_holds = Rational(static_cast<long>(rep.alg_cost)) <= rep.bound_rhs;
  return rep;
}

nlohmann::json report_json(const VerifyReport& rep, std::size_t max_violations) {
  nlohmann::json v = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.violations.size() && i < max_violations; ++i) {
    const auto& x = rep.violations[i];
    v.push_back({{"t", x.t}, {"kind", x.kind}, {"detail", x.detail}});
  }
  const double var = rep.residual_step_variance;
  return {
      {"k", rep.k},
      {"steps", rep.steps},
      {"ok", rep.ok()},
      {"violation_count", rep.violations.size()},
      {"violations", v},
      {"alg_cost", rep.alg_cost},
      {"adv_cost", rep.adv_cost},
      {"k_alpha_k", rep.k == 0 ? std::string("0") : (BigNat(rep.k) * alpha(rep.k)).to_string()},
      {"phi_start", rep.phi_start.to_string()},
      {"phi_end", rep.phi_end.to_string()},
      {"drift_steps", rep.drift_steps},
      {"min_expected_drift", rep.min_expected_drift.to_string()},
      {"residual", rep.residual.to_string()},
      {"residual_approx", static_cast<double>(rep.residual.to_long_double())},
      {"residual_stderr", std::sqrt(var * static_cast<double>(rep.drift_steps))},
      {"bound_rhs", rep.bound_rhs.to_string()},
      {"bound_holds", rep.bound_holds},
      {"identity_holds", rep.identity_holds},
      {"uniform_policy", rep.uniform_policy},
  };
}

}  // namespace gks
