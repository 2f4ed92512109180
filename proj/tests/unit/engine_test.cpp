#include "doctest.h"

#include <set>
#include <sstream>

#include "gks/engine.hpp"
#include "gks/harmonic.hpp"

using namespace gks;

namespace {

ExperimentConfig config(const char* policy, unsigned n, AdversaryKind adv, std::uint64_t phases, std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.policy = MemorylessPolicy::parse(policy);
  c.spec = MetricSpec::uniform(c.policy.k(), n);
  c.adversary = adv;
  c.phases = phases;
  c.seed = seed;
  return c;
}

std::vector<std::size_t> identity(unsigned k) {
  std::vector<std::size_t> v(k);
  for (unsigned i = 0; i < k; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("hamming and serving") {
    CHECK(hamming(Configuration{0, 0}, Configuration{0, 0}) == 0);
    CHECK(hamming(Configuration{0, 0, 0, 0}, Configuration{1, 0, 0, 1}) == 2);
    CHECK(hamming(Configuration{0}, Configuration{1}) == 1);
    CHECK_THROWS_AS(hamming(Configuration{0}, Configuration{0, 1}), std::invalid_argument);
    CHECK(serves(Configuration{0, 0}, Request{0, 5}));
    CHECK_FALSE(serves(Configuration{0, 0}, Request{1, 1}));
    CHECK(state_mask(Configuration{1, 0, 0, 1}, Configuration{0, 0, 0, 0}, identity(4)) == 0b1001);
    CHECK(state_mask(Configuration{1, 0}, Configuration{0, 0}, {1, 0}) == 0b10);
  }

  TEST_CASE("metric spec validation") {
    const MetricSpec empty, tiny{{3, 1}};
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
    CHECK_THROWS_AS(tiny.validate(), std::invalid_argument);
    CHECK_NOTHROW(MetricSpec::uniform(3, 2).validate());
    CHECK_THROWS_AS(check_fits(MetricSpec::uniform(2, 3), {0, 3}, "q"), std::invalid_argument);
  }

  TEST_CASE("rng streams") {
    StreamRng a(9, 4), b(9, 4), c(9, 5);
    bool differ = false;
    for (int i = 0; i < 20; ++i) {
      const auto x = a.below(1000);
      CHECK(x == b.below(1000));
      differ = differ || x != c.below(1000);
      CHECK(x < 1000);
    }
    CHECK(differ);
    CHECK_THROWS(a.below(0));
  }

  TEST_CASE("sampler frequencies") {
    const DiscreteSampler s({Rational(1, 2), Rational(1, 3), Rational(1, 6)});
    StreamRng rng(1, 0);
    std::vector<int> hits(3);
    const int n = 60000;
    for (int i = 0; i < n; ++i) hits[s(rng)]++;
    const double p[] = {0.5, 1.0 / 3, 1.0 / 6};
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt(p[j] * (1 - p[j]) / n);
      CHECK(std::abs(hits[j] / double(n) - p[j]) < 4 * se);
    }
    CHECK_THROWS_AS(DiscreteSampler({Rational(1, 2)}), std::invalid_argument);
    const DiscreteSampler zero({Rational(0), Rational(1)});
    for (int i = 0; i < 50; ++i) CHECK(zero(rng) == 1);
  }

  TEST_CASE("memoryless step") {
    const auto uni = MemorylessPolicy::uniform(2);
    const DiscreteSampler s2(uni.probs());
    StreamRng rng(2, 0);
    CHECK(memoryless_step({0, 0}, {0, 5}, s2, rng) == Configuration{0, 0});
    std::set<std::vector<std::uint32_t>> seen;
    for (int i = 0; i < 200; ++i) {
      const auto q = memoryless_step({0, 0}, {1, 1}, s2, rng);
      CHECK((q == Configuration{1, 0} || q == Configuration{0, 1}));
      seen.insert(q.at);
    }
    CHECK(seen.size() == 2);

    // the k = 4 worked example: each single-coordinate move w.p. 1/4
    const DiscreteSampler s4(MemorylessPolicy::uniform(4).probs());
    std::map<std::vector<std::uint32_t>, int> counts;
    const int n = 40000;
    for (int i = 0; i < n; ++i) counts[memoryless_step({1, 0, 0, 1}, {0, 2, 2, 2}, s4, rng).at]++;
    CHECK(counts.size() == 4);
    for (auto q : {std::vector<std::uint32_t>{0, 0, 0, 1}, {1, 2, 0, 1}, {1, 0, 2, 1}, {1, 0, 0, 2}}) {
      CHECK(std::abs(counts[q] / double(n) - 0.25) < 4 * std::sqrt(0.25 * 0.75 / n));
    }
  }

  TEST_CASE("lower-bound adversary steps") {
    const auto spec4 = MetricSpec::uniform(4, 3);
    const Configuration zero4{0, 0, 0, 0};
    auto mv = lower_bound_adversary_step(spec4, zero4, zero4, zero4, identity(4));
    CHECK(mv.adv_next == Configuration{0, 0, 0, 1});
    CHECK(mv.request == Request{1, 1, 1, 1});

    mv = lower_bound_adversary_step(spec4, {1, 0, 0, 1}, zero4, zero4, identity(4));
    CHECK(mv.adv_next == zero4);
    // m = 1; the other coordinates only need to avoid both servers, and the
    // smallest such point is taken
    CHECK(mv.request[0] == 0);
    for (std::size_t j = 1; j < 4; ++j) CHECK((mv.request[j] != 0 && mv.request[j] != Configuration{1, 0, 0, 1}[j]));
    CHECK(mv.request == Request{0, 1, 1, 2});

    const auto spec2 = MetricSpec::uniform(2, 3);
    mv = lower_bound_adversary_step(spec2, {0, 1}, {0, 0}, {0, 0}, identity(2));
    CHECK(mv.request == Request{1, 0});

    // canonical order decides which metric is "last"
    mv = lower_bound_adversary_step(spec2, {0, 0}, {0, 0}, {0, 0}, {1, 0});
    CHECK(mv.adv_next == Configuration{1, 0});

    CHECK_THROWS_AS(lower_bound_adversary_step(MetricSpec::uniform(2, 2), {0, 0}, {0, 0}, {0, 0}, identity(2)),
                    std::invalid_argument);
  }

  TEST_CASE("n2 adversary steps") {
    const auto spec = MetricSpec::uniform(2, 2);
    auto mv = n2_adversary_step(spec, {0, 0}, {0, 0});
    CHECK(mv.adv_next == Configuration{0, 1});
    CHECK(mv.request == Request{1, 1});
    mv = n2_adversary_step(spec, {1, 0}, {0, 1});
    CHECK(mv.adv_next == Configuration{0, 1});
    CHECK(mv.request == Request{0, 1});
    mv = n2_adversary_step(spec, {1, 1}, {1, 1});
    CHECK(mv.adv_next == Configuration{1, 0});
    CHECK(mv.request == Request{0, 0});
    CHECK_THROWS_AS(n2_adversary_step(MetricSpec::uniform(2, 3), {0, 0}, {0, 0}), std::invalid_argument);
  }

  TEST_CASE("config validation") {
    auto c = config("1/2,1/2", 2, AdversaryKind::lower_bound, 10);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = config("1/2,1/2", 3, AdversaryKind::n2, 10);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = config("1/2,1/2", 3, AdversaryKind::lower_bound, 0);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = config("1/2,1/2", 3, AdversaryKind::lower_bound, 10);
    c.spec = MetricSpec::uniform(3, 3);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(parse_adversary("n2") == AdversaryKind::n2);
    CHECK_THROWS_AS(parse_adversary("oblivious"), std::invalid_argument);
  }

  TEST_CASE("k = 1 phases have length one") {
    const auto r = run(config("1", 3, AdversaryKind::lower_bound, 1000));
    CHECK(r.summary.phases == 1000);
    CHECK(r.summary.ratio == 1.0);
    CHECK(r.summary.max_phase_length == 1);
    CHECK(r.summary.phase_length_stderr == 0.0);
  }

  TEST_CASE("phase means match the subset system") {
    struct Case {
      const char* policy;
      double mean;
    };
    for (auto [p, mean] : {Case{"1/2,1/2", 4.0}, Case{"2/3,1/3", 6.0}, Case{"1/3,2/3", 6.0}}) {
      const auto r = run(config(p, 3, AdversaryKind::lower_bound, 100000, 11));
      CHECK(r.summary.adv_cost == r.summary.phases);
      CHECK(r.summary.alg_cost == r.summary.steps);
      CHECK(r.summary.phase_length_stderr > 0);
      CHECK(std::abs(r.summary.mean_phase_length - mean) < 3 * r.summary.phase_length_stderr);
    }
  }

  TEST_CASE("n2 phases follow the binary chain") {
    const auto est = estimate_ratio(config("1/3,1/3,1/3", 2, AdversaryKind::n2, 50000), 50000, 1);
    CHECK(est.stats.mean() >= 7 - 3 * est.stats.stderr_mean());
    CHECK(est.stats.mean() <= 40);
    CHECK(std::abs(est.stats.mean() - 7.0) < 3 * est.stats.stderr_mean());
  }

  TEST_CASE("parallel estimate reproduces the sequential run") {
    auto c = config("1/2,1/3,1/6", 4, AdversaryKind::lower_bound, 3000, 5);
    const auto seq = run(c).summary;
    for (unsigned jobs : {1U, 3U, 8U}) {
      const auto est = estimate_ratio(c, c.phases, jobs);
      CHECK(est.stats.alg_cost == seq.alg_cost);
      CHECK(est.stats.adv_cost == seq.adv_cost);
      CHECK(est.stats.mean() == seq.mean_phase_length);
      CHECK(est.stats.stderr_mean() == seq.phase_length_stderr);
    }
  }

  TEST_CASE("step budget") {
    auto c = config("1/3,1/3,1/3", 3, AdversaryKind::lower_bound, 1000);
    c.max_steps = 50;
    const auto r = run(c);
    CHECK(r.summary.budget_exhausted);
    CHECK(r.summary.steps == 50);
    CHECK(r.summary.phases < 1000);
    CHECK(estimate_ratio(c, c.phases, 2).budget_exhausted);
  }

  TEST_CASE("traces are deterministic and round trip") {
    auto c = config("1/2,1/2", 3, AdversaryKind::lower_bound, 40, 3);
    c.emit_trace = true;
    const auto a = run(c), b = run(c);
    std::ostringstream sa, sb;
    write_trace_csv(sa, *a.trace);
    write_trace_csv(sb, *b.trace);
    CHECK(sa.str() == sb.str());
    CHECK(a.trace->alg_total() == a.summary.alg_cost);
    CHECK(a.trace->adv_total() == a.summary.adv_cost);
    std::istringstream in(sa.str());
    const Trace t = read_trace_csv(in);
    std::ostringstream again;
    write_trace_csv(again, t);
    CHECK(again.str() == sa.str());
    CHECK(t.steps.size() == a.trace->steps.size());

    c.seed = 4;
    std::ostringstream sc;
    write_trace_csv(sc, *run(c).trace);
    CHECK(sc.str() != sa.str());
  }

  TEST_CASE("malformed traces") {
    auto parse = [](const std::string& s) {
      std::istringstream in(s);
      return read_trace_csv(in);
    };
    const std::string head = "t,r,q,adv,alg_cost,adv_cost,state_mask\n";
    CHECK_THROWS_AS(parse(""), std::invalid_argument);
    CHECK_THROWS_AS(parse(head), std::invalid_argument);
    CHECK_THROWS_AS(parse(head + "0,,0 0,0 0,0,0,0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse(head + "0,,0 0,0 0,0,0,0\n2,1 1,1 0,0 1,1,1,3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse(head + "0,,0 0,0 0,0,0,0\n1,1 1,1 0 0,0 1,1,1,3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse(head + "0,,0 0,0 0,0,0,0\n1,1 x,1 0,0 1,1,1,3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("a,b\n"), std::invalid_argument);
    CHECK_NOTHROW(parse(head + "0,,0 0,0 0,0,0,0\n1,1 1,1 0,0 1,1,1,3\n"));
  }

  TEST_CASE("state dynamics follow the three cases") {
    auto c = config("1/2,1/3,1/6", 3, AdversaryKind::lower_bound, 20000, 8);
    c.emit_trace = true;
    const auto trace = *run(c).trace;
    const auto trans = transition_counts(trace);
    std::map<SubsetMask, std::pair<std::uint64_t, std::uint64_t>> down;  // from S: (to S - m, total)
    for (const auto& [edge, n] : trans) {
      const auto [s, t] = edge;
      REQUIRE(s != 0);
      const SubsetMask m = s & (0 - s);
      const bool ok = t == (s & ~m) || t == s || ((t & s) == s && std::popcount(t ^ s) == 1);
      CHECK(ok);
      auto& d = down[s];
      d.second += n;
      if (t == (s & ~m)) d.first += n;
    }
    const auto& probs = c.policy.canonical_probs();
    for (const auto& [s, d] : down) {
      const double p = probs[std::countr_zero(s)].to_double();
      const double n = static_cast<double>(d.second);
      if (n < 200) continue;
      CHECK(std::abs(d.first / n - p) < 3.5 * std::sqrt(p * (1 - p) / n));
    }
    const auto hist = state_histogram(trace);
    CHECK(hist.count(0) == 1);

    auto c1 = config("1", 3, AdversaryKind::lower_bound, 50);
    c1.emit_trace = true;
    for (const auto& [s, n] : state_histogram(*run(c1).trace)) CHECK(s <= 1);
  }
}
