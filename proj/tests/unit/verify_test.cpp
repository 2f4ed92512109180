#include "doctest.h"

#include <sstream>

#include "gks/chains.hpp"
#include "gks/harmonic.hpp"
#include "gks/verify.hpp"

using namespace gks;

namespace {

Trace lower_bound_trace(unsigned k, std::uint64_t phases, std::uint64_t seed) {
  ExperimentConfig c;
  c.policy = MemorylessPolicy::uniform(k);
  c.spec = MetricSpec::uniform(k, 3);
  c.phases = phases;
  c.seed = seed;
  c.emit_trace = true;
  return *run(c).trace;
}

bool has_kind(const VerifyReport& r, const std::string& kind) {
  for (const auto& v : r.violations)
    if (v.kind == kind) return true;
  return false;
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("potential table") {
    for (unsigned k = 1; k <= 20; ++k) {
      const PotentialContext ctx(k);
      CHECK(ctx.h[0] == BigNat(0));
      for (unsigned l = 1; l <= k; ++l) CHECK(ctx.h[l] == harmonic_eet(k, l));
      for (unsigned a = 0; a <= k; ++a) {
        for (unsigned b = a + 1; b <= k; ++b) {
          const BigNat d = delta_h(a, b, ctx);
          CHECK(d == ctx.h[b] - ctx.h[a]);
          CHECK(d <= BigNat(b - a) * ctx.k_alpha_k());
        }
      }
    }
    CHECK_THROWS_AS(PotentialContext(0), std::invalid_argument);
  }

  TEST_CASE("potential and differences") {
    const PotentialContext c2(2), c3(3);
    CHECK(potential({0, 0}, {0, 0}, c2) == BigNat(0));
    CHECK(potential({0, 1}, {0, 0}, c2) == BigNat(4));
    CHECK(potential({1, 1, 1}, {0, 0, 0}, c3) == BigNat(24));
    CHECK(delta_h(0, 1, c3) == BigNat(15));
    CHECK(delta_h(2, 3, c3) == BigNat(3));
    CHECK(delta_h(0, 2, c2) == BigNat(6));
    CHECK_THROWS_AS(delta_h(2, 2, c3), std::invalid_argument);
    CHECK_THROWS_AS(delta_h(1, 4, c3), std::invalid_argument);
  }

  TEST_CASE("expected drift") {
    const PotentialContext c2(2), c3(3);
    const auto u2 = MemorylessPolicy::uniform(2), u3 = MemorylessPolicy::uniform(3);
    // C = 1
    CHECK(expected_drift({1, 0, 0}, {0, 0, 0}, {0, 1, 1}, u3, c3) == Rational(1));
    CHECK(expected_drift({1, 1, 0}, {0, 0, 0}, {0, 2, 1}, u3, c3) == Rational(1));
    // k = 2, ell = 2, C = 2
    CHECK(expected_drift({1, 1}, {0, 0}, {0, 0}, u2, c2) == Rational(2));
    CHECK(drift_formula(2, 2, 2) == Rational(2));
    // formula value quoted for k = 3, ell = 1, C = 2 (not a reachable state)
    CHECK(drift_formula(3, 1, 2) == Rational(6));
    CHECK(expected_drift({1, 1, 0}, {0, 0, 0}, {0, 0, 1}, u3, c3) == drift_formula(3, 2, 2));
    CHECK_THROWS_AS(expected_drift({0, 0}, {0, 0}, {0, 1}, u2, c2), std::invalid_argument);  // q serves r
    CHECK_THROWS_AS(expected_drift({1, 1}, {0, 0}, {2, 2}, u2, c2), std::invalid_argument);  // adv misses r
    // non-uniform policies are enumerated the same way
    const auto p = MemorylessPolicy::parse("2/3,1/3");
    CHECK(expected_drift({1, 0}, {0, 0}, {0, 1}, p, c2) == Rational(2, 3) * 4 - Rational(1, 3) * 2);
  }

  TEST_CASE("exhaustive drift check") {
    for (unsigned k = 1; k <= 5; ++k) {
      const auto s = exhaustive_drift_check(k);
      CHECK(s.ok());
      CHECK(s.min_drift == Rational(1));
      CHECK(s.covered.size() == k * (k + 1) / 2);  // 1 <= C <= ell <= k
    }
  }

  TEST_CASE("k = 1 traces are clean") {
    const auto rep = verify_trace(lower_bound_trace(1, 200, 1), PotentialContext(1));
    CHECK(rep.ok());
    CHECK(rep.residual == Rational(0));
  }

  TEST_CASE("k = 2 long trace has no violations") {
    const auto trace = lower_bound_trace(2, 10000, 2);
    const auto rep = verify_trace(trace, PotentialContext(2));
    CHECK(rep.violations.empty());
    CHECK(rep.identity_holds);
    CHECK(rep.bound_holds);
    CHECK(rep.alg_cost == trace.alg_total());
    CHECK(rep.adv_cost == 10000);
  }

  TEST_CASE("residual is centred") {
    const PotentialContext ctx(3);
    double sum = 0, sq = 0;
    const int n = 100;
    for (int seed = 1; seed <= n; ++seed) {
      const double x = verify_trace(lower_bound_trace(3, 50, seed), ctx).residual.to_double();
      sum += x;
      sq += x * x;
    }
    const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / (n - 1));
    CHECK(std::abs(mean) < 3 * se);
  }

  TEST_CASE("corrupted traces") {
    auto trace = lower_bound_trace(2, 5, 3);
    const PotentialContext ctx(2);
    // adversary jumps in both metrics but records no cost
    auto bad = trace;
    bad.steps[0].adv = Configuration{2, 2};
    bad.steps[0].request = Request{2, 1};
    bad.steps[0].adv_cost = 0;
    auto rep = verify_trace(bad, ctx);
    CHECK(has_kind(rep, "adversary_jump"));
    CHECK(has_kind(rep, "adv_cost_mismatch"));
    CHECK_FALSE(rep.ok());

    bad = trace;
    bad.steps[1].alg_cost = 0;
    CHECK(has_kind(verify_trace(bad, ctx), "alg_cost_mismatch"));

    bad = trace;
    bad.steps[0].state ^= 1;
    CHECK(has_kind(verify_trace(bad, ctx), "state_mismatch"));

    bad = trace;
    bad.steps.clear();
    CHECK_THROWS_AS(verify_trace(bad, ctx), std::invalid_argument);
    CHECK_THROWS_AS(verify_trace(trace, PotentialContext(3)), std::invalid_argument);
  }

  TEST_CASE("json report") {
    const auto rep = verify_trace(lower_bound_trace(2, 20, 4), PotentialContext(2));
    const auto j = report_json(rep);
    CHECK(j["ok"] == true);
    CHECK(j["violation_count"] == 0);
    CHECK(j["k_alpha_k"] == "4");
    CHECK(j.contains("residual"));
  }
}
