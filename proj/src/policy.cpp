#include "gks/policy.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gks {

MemorylessPolicy::MemorylessPolicy(std::vector<Rational> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("policy: need at least one probability");
  Rational total;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i].sign() <= 0) {
      throw std::invalid_argument("policy: p_" + std::to_string(i + 1) + " = " + probs_[i].to_display() +
                                  " is not positive; such an algorithm is not competitive");
    }
    total += probs_[i];
  }
  if (total != Rational(1)) throw std::invalid_argument("policy: probabilities sum to " + total.to_display());

  order_.resize(probs_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return probs_[a] > probs_[b]; });
  rank_.resize(probs_.size());
  sorted_.reserve(probs_.size());
  for (std::size_t r = 0; r < order_.size(); ++r) {
    rank_[order_[r]] = r;
    sorted_.push_back(probs_[order_[r]]);
  }
}

MemorylessPolicy MemorylessPolicy::uniform(unsigned k) {
  if (k == 0) throw std::invalid_argument("policy: k must be >= 1");
  return MemorylessPolicy(std::vector<Rational>(k, Rational(1L, static_cast<long>(k))));
}

MemorylessPolicy MemorylessPolicy::parse(std::string_view text) {
  std::vector<Rational> probs;
  while (true) {
    const auto comma = text.find(',');
    probs.push_back(Rational::parse(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return MemorylessPolicy(std::move(probs));
}

bool MemorylessPolicy::is_uniform() const {
  return std::all_of(probs_.begin(), probs_.end(), [&](const Rational& p) { return p == probs_.front(); });
}

std::string MemorylessPolicy::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (i) out += ',';
    out += probs_[i].to_string();
  }
  return out;
}

}  // namespace gks
