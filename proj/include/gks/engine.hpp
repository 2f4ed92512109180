#pragma once

// Simulation of memoryless algorithms on uniform metrics against adaptive
// adversaries: the lower-bound adversary (every metric has >= 3 points)
// and the two-point anti-configuration adversary.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gks/chains.hpp"
#include "gks/policy.hpp"
#include "gks/statesys.hpp"

namespace gks {

/// Number of points in each of the k uniform metrics.
struct MetricSpec {
  std::vector<std::uint32_t> points;

  static MetricSpec uniform(unsigned k, std::uint32_t n) { return {std::vector<std::uint32_t>(k, n)}; }
  unsigned k() const { return static_cast<unsigned>(points.size()); }
  /// Throws std::invalid_argument unless k >= 1 and every n_i >= 2.
  void validate() const;
};

/// A k-tuple of point indices, one per metric.
template <class Tag>
struct PointTuple {
  std::vector<std::uint32_t> at;

  PointTuple() = default;
  explicit PointTuple(std::vector<std::uint32_t> v) : at(std::move(v)) {}
  PointTuple(std::initializer_list<std::uint32_t> v) : at(v) {}

  std::size_t size() const { return at.size(); }
  std::uint32_t operator[](std::size_t i) const { return at[i]; }
  std::uint32_t& operator[](std::size_t i) { return at[i]; }
  friend bool operator==(const PointTuple&, const PointTuple&) = default;
};

struct ConfigurationTag {};
struct RequestTag {};
using Configuration = PointTuple<ConfigurationTag>;
using Request = PointTuple<RequestTag>;

/// Throws std::invalid_argument if the tuple does not fit the spec.
void check_fits(const MetricSpec& spec, const std::vector<std::uint32_t>& tuple, const char* what);

/// Number of metrics where the two tuples differ. Throws on length mismatch.
unsigned hamming(const Configuration& a, const Configuration& b);
bool serves(const Configuration& c, const Request& r);

/// Set of metrics where q and adv differ, as a mask over canonical ranks.
SubsetMask state_mask(const Configuration& q, const Configuration& adv, const std::vector<std::size_t>& rank);

/// mt19937_64 stream derived from a master seed and a stream index, so that
/// phase i draws the same numbers whether phases run sequentially or not.
class StreamRng {
 public:
  StreamRng(std::uint64_t master_seed, std::uint64_t stream);
  /// Uniform in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

/// Exact sampler over a finite distribution with rational weights; all
/// denominators must share a common multiple that fits in 64 bits.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const std::vector<Rational>& probs);
  std::size_t operator()(StreamRng& rng) const;
  std::uint64_t denominator() const { return denominator_; }

 private:
  std::uint64_t denominator_ = 1;
  std::vector<std::uint64_t> cumulative_;
};

/// Serves r from q: unchanged if some q_i = r_i, otherwise moves the server
/// of a metric drawn from the policy sampler.
Configuration memoryless_step(const Configuration& q, const Request& r, const DiscreteSampler& sampler,
                              StreamRng& rng);

struct AdversaryMove {
  Configuration adv_next;
  Request request;
};

/// One request of the lower-bound instance. `order` lists metric indices by
/// decreasing probability (MemorylessPolicy::order()). Ties are broken by
/// the smallest admissible point index. Requires every n_i >= 3.
AdversaryMove lower_bound_adversary_step(const MetricSpec& spec, const Configuration& q_prev,
                                         const Configuration& adv_prev, const Configuration& q0,
                                         const std::vector<std::size_t>& order);

/// Two-point instance: when matched, the adversary flips its server in
/// `flip_metric` (default: the last metric); the request is always the
/// algorithm's anti-configuration. Requires every n_i == 2.
AdversaryMove n2_adversary_step(const MetricSpec& spec, const Configuration& q_prev, const Configuration& adv_prev,
                                std::optional<std::size_t> flip_metric = std::nullopt);

enum class AdversaryKind { lower_bound, n2 };
std::string to_string(AdversaryKind kind);
AdversaryKind parse_adversary(const std::string& text);

struct ExperimentConfig {
  MetricSpec spec;
  MemorylessPolicy policy = MemorylessPolicy::uniform(1);
  AdversaryKind adversary = AdversaryKind::lower_bound;
  std::uint64_t phases = 1000;
  std::uint64_t max_steps = 1000000000;
  std::uint64_t seed = 1;
  bool emit_trace = false;
  std::string trace_path;
  std::string summary_path;

  /// Throws std::invalid_argument with an actionable message.
  void validate() const;
};

struct TraceStep {
  std::uint64_t t = 0;
  Request request;
  Configuration alg;  // after serving
  Configuration adv;  // after the adversary's move
  unsigned alg_cost = 0;
  unsigned adv_cost = 0;
  unsigned distance = 0;
  SubsetMask state = 0;  // canonical ranks
};

struct Trace {
  unsigned k = 0;
  std::vector<std::uint32_t> points;
  std::string policy;                // "num/den,..." in the caller's labeling
  std::vector<std::size_t> rank;     // canonical rank of each metric
  std::string adversary;
  std::uint64_t seed = 0;
  Configuration alg0;
  Configuration adv0;
  std::vector<TraceStep> steps;

  std::uint64_t alg_total() const;
  std::uint64_t adv_total() const;
};

/// Exact integer sums over phase lengths, so merging in any grouping gives
/// bit-identical summaries.
struct PhaseStats {
  std::uint64_t count = 0;
  std::uint64_t sum_length = 0;
  unsigned __int128 sum_sq = 0;
  std::uint64_t max_length = 0;
  std::uint64_t alg_cost = 0;
  std::uint64_t adv_cost = 0;
  std::uint64_t steps = 0;

  void add_phase(std::uint64_t length, std::uint64_t alg, std::uint64_t adv);
  void merge(const PhaseStats& o);
  double mean() const;
  double variance() const;
  double stderr_mean() const;
};

struct RunSummary {
  std::uint64_t alg_cost = 0;
  std::uint64_t adv_cost = 0;
  double ratio = 0.0;
  std::uint64_t phases = 0;
  double mean_phase_length = 0.0;
  std::uint64_t max_phase_length = 0;
  double phase_length_stderr = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  std::string policy;
  std::string adversary;
  bool budget_exhausted = false;
};

struct RunResult {
  RunSummary summary;
  std::optional<Trace> trace;
};

/// Runs the request loop until `phases` phases complete or `max_steps` is
/// reached. Every step asserts the instance invariants and throws
/// std::logic_error if one fails.
RunResult run(const ExperimentConfig& config);

struct RatioEstimate {
  double ratio = 0.0;
  double stderr_ratio = 0.0;
  PhaseStats stats;
  bool budget_exhausted = false;
};

/// ALG/ADV over `phases` completed phases, with the standard error of the
/// per-phase cost. Phases are split across `jobs` threads; the result does
/// not depend on `jobs`.
RatioEstimate estimate_ratio(const ExperimentConfig& config, std::uint64_t phases, unsigned jobs = 1);

/// Visits per state: S^0, every post-move state, and the state right after
/// each adversary move.
std::map<SubsetMask, std::uint64_t> state_histogram(const Trace& trace);

/// Counts of (state before the algorithm's move, state after it).
std::map<std::pair<SubsetMask, SubsetMask>, std::uint64_t> transition_counts(const Trace& trace);

/// Mean absorption time of the chain from `start`, estimated from `walks`
/// independent walks (one stream per walk). Returns {mean, stderr}.
std::pair<double, double> simulate_absorption(const BirthDeathChain& chain, unsigned start,
                                              std::uint64_t walks, std::uint64_t seed);

/// CSV with columns t,r,q,adv,alg_cost,adv_cost,state_mask; tuples are
/// space separated, a leading '#' line carries the run metadata and row
/// t = 0 holds the initial configurations.
void write_trace_csv(std::ostream& os, const Trace& trace);
/// Throws std::invalid_argument on malformed input.
Trace read_trace_csv(std::istream& is);

}  // namespace gks
