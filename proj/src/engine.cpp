#include "gks/engine.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gks {

namespace {

std::uint32_t smallest_point_avoiding(std::uint32_t a, std::uint32_t b) {
  std::uint32_t z = 0;
  while (z == a || z == b) ++z;
  return z;
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

void invariant(bool ok, const std::string& what) {
  if (!ok) throw std::logic_error("simulation invariant violated: " + what);
}

std::string join_tuple(const std::vector<std::uint32_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::uint32_t> split_tuple(const std::string& field) {
  std::vector<std::uint32_t> out;
  std::istringstream is(field);
  std::string tok;
  while (is >> tok) {
    if (tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9) {
      throw std::invalid_argument("trace: bad point index '" + tok + "'");
    }
    out.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
  }
  return out;
}

}  // namespace

void MetricSpec::validate() const {
  if (points.empty()) throw std::invalid_argument("metric spec: need k >= 1 metrics");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i] < 2) {
      throw std::invalid_argument("metric spec: metric " + std::to_string(i + 1) + " has " +
                                  std::to_string(points[i]) + " points, need at least 2");
    }
  }
}

void check_fits(const MetricSpec& spec, const std::vector<std::uint32_t>& tuple, const char* what) {
  require_same_length(tuple.size(), spec.k(), what);
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (tuple[i] >= spec.points[i]) {
      throw std::invalid_argument(std::string(what) + ": point " + std::to_string(tuple[i]) + " outside metric " +
                                  std::to_string(i + 1));
    }
  }
}

unsigned hamming(const Configuration& a, const Configuration& b) {
  require_same_length(a.size(), b.size(), "hamming");
  unsigned d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

bool serves(const Configuration& c, const Request& r) {
  require_same_length(c.size(), r.size(), "serves");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == r[i]) return true;
  }
  return false;
}

SubsetMask state_mask(const Configuration& q, const Configuration& adv, const std::vector<std::size_t>& rank) {
  require_same_length(q.size(), adv.size(), "state_mask");
  require_same_length(q.size(), rank.size(), "state_mask");
  SubsetMask s = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] != adv[i]) s |= SubsetMask{1} << rank[i];
  }
  return s;
}

StreamRng::StreamRng(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

std::uint64_t StreamRng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("StreamRng::below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
  std::uint64_t x = engine_();
  while (x < threshold) x = engine_();
  return x % bound;
}

DiscreteSampler::DiscreteSampler(const std::vector<Rational>& probs) {
  if (probs.empty()) throw std::invalid_argument("sampler: empty distribution");
  mpz_class lcm = 1;
  Rational total;
  for (const auto& p : probs) {
    if (p.sign() < 0) throw std::invalid_argument("sampler: negative probability");
    mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), p.den().get_mpz_t());
    total += p;
  }
  if (total != Rational(1)) throw std::invalid_argument("sampler: probabilities sum to " + total.to_display());
  if (!mpz_fits_ulong_p(lcm.get_mpz_t()) || sizeof(unsigned long) < sizeof(std::uint64_t)) {
    throw std::invalid_argument("sampler: common denominator " + lcm.get_str() + " does not fit in 64 bits");
  }
  denominator_ = lcm.get_ui();
  std::uint64_t acc = 0;
  for (const auto& p : probs) {
    const mpz_class scaled = p.num() * (lcm / p.den());
    acc += scaled.get_ui();
    cumulative_.push_back(acc);
  }
}

std::size_t DiscreteSampler::operator()(StreamRng& rng) const {
  const std::uint64_t x = rng.below(denominator_);
  return static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), x) - cumulative_.begin());
}

Configuration memoryless_step(const Configuration& q, const Request& r, const DiscreteSampler& sampler,
                              StreamRng& rng) {
  if (serves(q, r)) return q;
  Configuration next = q;
  const std::size_t j = sampler(rng);
  next[j] = r[j];
  return next;
}

AdversaryMove lower_bound_adversary_step(const MetricSpec& spec, const Configuration& q_prev,
                                         const Configuration& adv_prev, const Configuration& q0,
                                         const std::vector<std::size_t>& order) {
  const unsigned k = spec.k();
  for (std::size_t i = 0; i < k; ++i) {
    if (spec.points[i] < 3) {
      throw std::invalid_argument("lower-bound adversary needs at least 3 points in every metric; metric " +
                                  std::to_string(i + 1) + " has " + std::to_string(spec.points[i]));
    }
  }
  check_fits(spec, q_prev.at, "q_prev");
  check_fits(spec, adv_prev.at, "adv_prev");
  check_fits(spec, q0.at, "q0");
  require_same_length(order.size(), k, "order");

  AdversaryMove mv{adv_prev, Request(std::vector<std::uint32_t>(k))};
  if (q_prev == adv_prev) {
    const std::size_t last = order.back();
    mv.adv_next = q0;
    mv.adv_next[last] = smallest_point_avoiding(adv_prev[last], q_prev[last]);
  }
  std::size_t m = k;
  for (std::size_t r = 0; r < k; ++r) {
    if (q_prev[order[r]] != mv.adv_next[order[r]]) {
      m = order[r];
      break;
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    mv.request[j] = j == m ? mv.adv_next[j] : smallest_point_avoiding(mv.adv_next[j], q_prev[j]);
  }
  return mv;
}

AdversaryMove n2_adversary_step(const MetricSpec& spec, const Configuration& q_prev, const Configuration& adv_prev,
                                std::optional<std::size_t> flip_metric) {
  const unsigned k = spec.k();
  for (std::size_t i = 0; i < k; ++i) {
    if (spec.points[i] != 2) {
      throw std::invalid_argument("n2 adversary needs exactly 2 points in every metric; metric " +
                                  std::to_string(i + 1) + " has " + std::to_string(spec.points[i]));
    }
  }
  check_fits(spec, q_prev.at, "q_prev");
  check_fits(spec, adv_prev.at, "adv_prev");
  const std::size_t flip = flip_metric.value_or(k - 1);
  if (flip >= k) throw std::invalid_argument("n2 adversary: flip metric out of range");

  AdversaryMove mv{adv_prev, Request(std::vector<std::uint32_t>(k))};
  if (q_prev == adv_prev) mv.adv_next[flip] = 1 - adv_prev[flip];
  for (std::size_t j = 0; j < k; ++j) mv.request[j] = 1 - q_prev[j];
  return mv;
}

std::string to_string(AdversaryKind kind) { return kind == AdversaryKind::lower_bound ? "lower_bound" : "n2"; }

AdversaryKind parse_adversary(const std::string& text) {
  if (text == "lower_bound") return AdversaryKind::lower_bound;
  if (text == "n2") return AdversaryKind::n2;
  throw std::invalid_argument("unknown adversary '" + text + "' (expected lower_bound or n2)");
}

void ExperimentConfig::validate() const {
  spec.validate();
  if (policy.k() != spec.k()) {
    throw std::invalid_argument("config: policy has " + std::to_string(policy.k()) + " probabilities but k = " +
                                std::to_string(spec.k()));
  }
  if (adversary == AdversaryKind::lower_bound) {
    for (std::size_t i = 0; i < spec.k(); ++i) {
      if (spec.points[i] < 3) {
        throw std::invalid_argument("config: the lower_bound adversary needs n_i >= 3 in every metric (metric " +
                                    std::to_string(i + 1) + " has " + std::to_string(spec.points[i]) +
                                    "); use adversary n2 for two-point metrics");
      }
    }
  } else {
    for (std::size_t i = 0; i < spec.k(); ++i) {
      if (spec.points[i] != 2) {
        throw std::invalid_argument("config: the n2 adversary needs n_i = 2 in every metric (metric " +
                                    std::to_string(i + 1) + " has " + std::to_string(spec.points[i]) + ")");
      }
    }
  }
  if (phases == 0) throw std::invalid_argument("config: phases must be >= 1");
  if (max_steps == 0) throw std::invalid_argument("config: max_steps must be >= 1");
  DiscreteSampler probe(policy.probs());
  (void)probe;
}

std::uint64_t Trace::alg_total() const {
  std::uint64_t s = 0;
  for (const auto& st : steps) s += st.alg_cost;
  return s;
}

std::uint64_t Trace::adv_total() const {
  std::uint64_t s = 0;
  for (const auto& st : steps) s += st.adv_cost;
  return s;
}

void PhaseStats::add_phase(std::uint64_t length, std::uint64_t alg, std::uint64_t adv) {
  ++count;
  sum_length += length;
  sum_sq += static_cast<unsigned __int128>(length) * length;
  max_length = std::max(max_length, length);
  alg_cost += alg;
  adv_cost += adv;
}

void PhaseStats::merge(const PhaseStats& o) {
  count += o.count;
  sum_length += o.sum_length;
  sum_sq += o.sum_sq;
  max_length = std::max(max_length, o.max_length);
  alg_cost += o.alg_cost;
  adv_cost += o.adv_cost;
  steps += o.steps;
}

double PhaseStats::mean() const {
  return count ? static_cast<double>(static_cast<long double>(sum_length) / count) : 0.0;
}

double PhaseStats::variance() const {
  if (count < 2) return 0.0;
  // n * sum x^2 - (sum x)^2, exact
  const unsigned __int128 s = sum_length;
  const unsigned __int128 num = sum_sq * count - s * s;
  return static_cast<double>(static_cast<long double>(num) / (static_cast<long double>(count) * (count - 1)));
}

double PhaseStats::stderr_mean() const {
  return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

namespace {

struct PhaseRunner {
  const ExperimentConfig& config;
  DiscreteSampler sampler;
  Configuration q0;

  explicit PhaseRunner(const ExperimentConfig& c)
      : config(c), sampler(c.policy.probs()), q0(std::vector<std::uint32_t>(c.spec.k(), 0)) {}

  AdversaryMove adversary(const Configuration& q, const Configuration& adv) const {
    if (config.adversary == AdversaryKind::lower_bound) {
      return lower_bound_adversary_step(config.spec, q, adv, q0, config.policy.order());
    }
    return n2_adversary_step(config.spec, q, adv, config.policy.order().back());
  }

  /// Configuration shared by both players at the start of each phase.
  std::vector<Configuration> phase_starts(std::uint64_t count) const {
    std::vector<Configuration> out;
    out.reserve(count);
    Configuration c = q0;
    for (std::uint64_t i = 0; i < count; ++i) {
      out.push_back(c);
      c = adversary(c, c).adv_next;
    }
    return out;
  }

  /// Runs phases [first, first + count) from `start`, appending to `trace`
  /// when given. Returns false if the step budget ran out.
  bool run(std::uint64_t first, std::uint64_t count, Configuration start, std::uint64_t budget, PhaseStats& stats,
           Trace* trace) const {
    Configuration q = start, adv = start;
    const bool lb = config.adversary == AdversaryKind::lower_bound;
    for (std::uint64_t phase = first; phase < first + count; ++phase) {
      StreamRng rng(config.seed, phase);
      std::uint64_t length = 0, alg_cost = 0, adv_cost = 0;
      do {
        if (stats.steps >= budget) return false;
        AdversaryMove mv = adversary(q, adv);
        const unsigned adv_step = hamming(adv, mv.adv_next);
        invariant(serves(mv.adv_next, mv.request), "adversary configuration does not serve the request");
        if (lb) {
          unsigned matches = 0;
          for (std::size_t i = 0; i < q.size(); ++i) matches += mv.adv_next[i] == mv.request[i];
          invariant(matches == 1, "lower-bound request reveals more than one adversary server");
        }
        invariant(!serves(q, mv.request), "algorithm served a request in place");
        Configuration next = memoryless_step(q, mv.request, sampler, rng);
        const unsigned alg_step = hamming(q, next);
        invariant(alg_step == 1, "algorithm must move exactly one server");
        ++stats.steps;
        ++length;
        alg_cost += alg_step;
        adv_cost += adv_step;
        if (trace) {
          TraceStep st;
          st.t = trace->steps.size() + 1;
          st.request = mv.request;
          st.alg = next;
          st.adv = mv.adv_next;
          st.alg_cost = alg_step;
          st.adv_cost = adv_step;
          st.distance = hamming(next, mv.adv_next);
          st.state = state_mask(next, mv.adv_next, config.policy.rank());
          trace->steps.push_back(std::move(st));
        }
        q = std::move(next);
        adv = std::move(mv.adv_next);
      } while (q != adv);
      invariant(adv_cost == 1, "adversary cost per phase must be exactly 1");
      stats.add_phase(length, alg_cost, adv_cost);
    }
    return true;
  }
};

RunSummary summarize(const ExperimentConfig& config, const PhaseStats& stats, bool exhausted) {
  RunSummary s;
  s.alg_cost = stats.alg_cost;
  s.adv_cost = stats.adv_cost;
  s.ratio = stats.adv_cost > 0 ? static_cast<double>(stats.alg_cost) / static_cast<double>(stats.adv_cost) : 0.0;
  s.phases = stats.count;
  s.mean_phase_length = stats.mean();
  s.max_phase_length = stats.max_length;
  s.phase_length_stderr = stats.stderr_mean();
  s.steps = stats.steps;
  s.seed = config.seed;
  s.policy = config.policy.to_string();
  s.adversary = to_string(config.adversary);
  s.budget_exhausted = exhausted;
  return s;
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
  config.validate();
  PhaseRunner runner(config);
  RunResult out;
  Trace* trace = nullptr;
  if (config.emit_trace) {
    out.trace.emplace();
    trace = &*out.trace;
    trace->k = config.spec.k();
    trace->points = config.spec.points;
    trace->policy = config.policy.to_string();
    trace->rank = config.policy.rank();
    trace->adversary = to_string(config.adversary);
    trace->seed = config.seed;
    trace->alg0 = runner.q0;
    trace->adv0 = runner.q0;
  }
  PhaseStats stats;
  const bool finished = runner.run(0, config.phases, runner.q0, config.max_steps, stats, trace);
  out.summary = summarize(config, stats, !finished);
  return out;
}

RatioEstimate estimate_ratio(const ExperimentConfig& config, std::uint64_t phases, unsigned jobs) {
  config.validate();
  if (phases == 0) throw std::invalid_argument("estimate_ratio: phases must be >= 1");
  jobs = std::max(1U, static_cast<unsigned>(std::min<std::uint64_t>(jobs, phases)));
  PhaseRunner runner(config);
  const auto starts = runner.phase_starts(phases);

  std::vector<PhaseStats> parts(jobs);
  std::vector<char> finished(jobs, 1);
  auto work = [&](unsigned w) {
    const std::uint64_t lo = phases * w / jobs, hi = phases * (w + 1) / jobs;
    if (lo < hi) finished[w] = runner.run(lo, hi - lo, starts[lo], config.max_steps, parts[w], nullptr);
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  RatioEstimate est;
  for (unsigned w = 0; w < jobs; ++w) {
    est.stats.merge(parts[w]);
    est.budget_exhausted = est.budget_exhausted || !finished[w];
  }
  est.budget_exhausted = est.budget_exhausted || est.stats.steps > config.max_steps;
  const double mean_adv = est.stats.count ? static_cast<double>(est.stats.adv_cost) / est.stats.count : 0.0;
  est.ratio = est.stats.adv_cost ? static_cast<double>(est.stats.alg_cost) / static_cast<double>(est.stats.adv_cost) : 0.0;
  est.stderr_ratio = mean_adv > 0 ? est.stats.stderr_mean() / mean_adv : 0.0;
  return est;
}

std::map<SubsetMask, std::uint64_t> state_histogram(const Trace& trace) {
  std::map<SubsetMask, std::uint64_t> h;
  h[state_mask(trace.alg0, trace.adv0, trace.rank)]++;
  Configuration q = trace.alg0, adv = trace.adv0;
  for (const auto& st : trace.steps) {
    if (st.adv != adv) h[state_mask(q, st.adv, trace.rank)]++;
    h[st.state]++;
    q = st.alg;
    adv = st.adv;
  }
  return h;
}

std::map<std::pair<SubsetMask, SubsetMask>, std::uint64_t> transition_counts(const Trace& trace) {
  std::map<std::pair<SubsetMask, SubsetMask>, std::uint64_t> out;
  Configuration q = trace.alg0;
  for (const auto& st : trace.steps) {
    out[{state_mask(q, st.adv, trace.rank), st.state}]++;
    q = st.alg;
  }
  return out;
}

std::pair<double, double> simulate_absorption(const BirthDeathChain& chain, unsigned start, std::uint64_t walks,
                                              std::uint64_t seed) {
  if (start > chain.k()) throw std::invalid_argument("simulate_absorption: start state out of range");
  if (walks == 0) throw std::invalid_argument("simulate_absorption: need at least one walk");
  // Outcome 0: down, 1: stay, 2: up.
  std::vector<DiscreteSampler> move;
  for (unsigned i = 1; i <= chain.k(); ++i) move.emplace_back(std::vector<Rational>{chain.down(i), chain.stay(i), chain.up(i)});
  PhaseStats stats;
  for (std::uint64_t w = 0; w < walks; ++w) {
    StreamRng rng(seed, w);
    unsigned state = start;
    std::uint64_t steps = 0;
    while (state != 0) {
      const std::size_t o = move[state - 1](rng);
      if (o == 0) --state;
      if (o == 2) ++state;
      ++steps;
    }
    stats.add_phase(steps, steps, 0);
  }
  return {stats.mean(), stats.stderr_mean()};
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "# k=" << trace.k << ";points=" << join_tuple(trace.points) << ";policy=" << trace.policy
     << ";adversary=" << trace.adversary << ";seed=" << trace.seed << '\n';
  os << "t,r,q,adv,alg_cost,adv_cost,state_mask\n";
  os << "0,," << join_tuple(trace.alg0.at) << ',' << join_tuple(trace.adv0.at) << ",0,0,"
     << state_mask(trace.alg0, trace.adv0, trace.rank) << '\n';
  for (const auto& st : trace.steps) {
    os << st.t << ',' << join_tuple(st.request.at) << ',' << join_tuple(st.alg.at) << ',' << join_tuple(st.adv.at)
       << ',' << st.alg_cost << ',' << st.adv_cost << ',' << st.state << '\n';
  }
}

Trace read_trace_csv(std::istream& is) {
  Trace trace;
  std::string line;
  bool have_header = false, have_initial = false;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> std::invalid_argument {
    return std::invalid_argument("trace line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream meta(line.substr(1));
      std::string item;
      while (std::getline(meta, item, ';')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        key.erase(0, key.find_first_not_of(' '));
        if (key == "points") trace.points = split_tuple(value);
        else if (key == "policy") trace.policy = value;
        else if (key == "adversary") trace.adversary = value;
        else if (key == "seed") trace.seed = std::stoull(value);
      }
      continue;
    }
    if (!have_header) {
      if (line != "t,r,q,adv,alg_cost,adv_cost,state_mask") throw fail("unexpected header '" + line + "'");
      have_header = true;
      continue;
    }
    std::vector<std::string> f;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw fail("expected 7 fields, got " + std::to_string(f.size()));
    try {
      const auto t = std::stoull(f[0]);
      const auto q = split_tuple(f[2]);
      const auto adv = split_tuple(f[3]);
      if (!have_initial) {
        if (t != 0) throw fail("first row must have t = 0");
        if (q.empty() || q.size() != adv.size()) throw fail("initial configurations malformed");
        trace.k = static_cast<unsigned>(q.size());
        trace.alg0 = Configuration(q);
        trace.adv0 = Configuration(adv);
        have_initial = true;
        continue;
      }
      TraceStep st;
      st.t = t;
      if (t != trace.steps.size() + 1) throw fail("non-consecutive step index");
      st.request = Request(split_tuple(f[1]));
      st.alg = Configuration(q);
      st.adv = Configuration(adv);
      if (st.request.size() != trace.k || q.size() != trace.k || adv.size() != trace.k) {
        throw fail("tuple length differs from k = " + std::to_string(trace.k));
      }
      st.alg_cost = static_cast<unsigned>(std::stoul(f[4]));
      st.adv_cost = static_cast<unsigned>(std::stoul(f[5]));
      st.state = static_cast<SubsetMask>(std::stoul(f[6]));
      st.distance = hamming(st.alg, st.adv);
      trace.steps.push_back(std::move(st));
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw fail(std::string("unparsable field (") + e.what() + ")");
    }
  }
  if (!have_header || !have_initial) throw std::invalid_argument("trace: missing header or initial row");
  if (trace.steps.empty()) throw std::invalid_argument("trace: no steps");
  if (!trace.points.empty() && trace.points.size() != trace.k) {
    throw std::invalid_argument("trace: metadata points do not match k");
  }
  if (trace.policy.empty()) {
    trace.rank.resize(trace.k);
    std::iota(trace.rank.begin(), trace.rank.end(), std::size_t{0});
  } else {
    const auto policy = MemorylessPolicy::parse(trace.policy);
    if (policy.k() != trace.k) throw std::invalid_argument("trace: metadata policy does not match k");
    trace.rank = policy.rank();
  }
  return trace;
}

}  // namespace gks
