#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gks/rational.hpp"

namespace gks {

/// A memoryless algorithm on uniform metrics: when it has to move, it moves
/// in metric i with probability p_i.
///
/// Probabilities are kept in the caller's labeling and, alongside, in
/// canonical order (descending, ties by original index). Canonical rank r
/// is what the subset system and the lower-bound adversary work with.
class MemorylessPolicy {
 public:
  /// Throws std::invalid_argument if empty, any p_i <= 0, or sum != 1.
  explicit MemorylessPolicy(std::vector<Rational> probs);

  static MemorylessPolicy uniform(unsigned k);
  /// Comma separated rationals, e.g. "2/3,1/3".
  static MemorylessPolicy parse(std::string_view text);

  unsigned k() const { return static_cast<unsigned>(probs_.size()); }
  /// Probability of metric i in the caller's labeling (0-based).
  const Rational& prob(std::size_t i) const { return probs_.at(i); }
  const std::vector<Rational>& probs() const { return probs_; }

  /// Probability of canonical rank r (0-based; rank 0 is the largest).
  const Rational& canonical(std::size_t r) const { return sorted_.at(r); }
  const std::vector<Rational>& canonical_probs() const { return sorted_; }
  /// order()[r] = caller index holding canonical rank r.
  const std::vector<std::size_t>& order() const { return order_; }
  /// rank()[i] = canonical rank of caller index i.
  const std::vector<std::size_t>& rank() const { return rank_; }

  const Rational& smallest() const { return sorted_.back(); }
  bool is_uniform() const;
  std::string to_string() const;

 private:
  std::vector<Rational> probs_;
  std::vector<Rational> sorted_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_;
};

}  // namespace gks
