#pragma once

// Finite birth-death chains on {0..k} absorbing at 0, with exact
// expected extinction times (EET) by closed form and by elimination.
//
// Convention: up(i) = P(i -> i+1), down(i) = P(i -> i-1) for i = 1..k.

#include <iosfwd>
#include <string>
#include <vector>

#include "gks/rational.hpp"

namespace gks {

class BirthDeathChain {
 public:
  /// up and down hold p_1..p_k and q_1..q_k. Throws std::invalid_argument
  /// unless 0 <= p_i, 0 < q_i, p_i + q_i <= 1 and p_k = 0.
  BirthDeathChain(std::vector<Rational> up, std::vector<Rational> down, std::string kind = "custom");

  unsigned k() const { return static_cast<unsigned>(up_.size()); }
  /// 1-based state index.
  const Rational& up(unsigned i) const { return up_.at(i - 1); }
  const Rational& down(unsigned i) const { return down_.at(i - 1); }
  Rational stay(unsigned i) const { return Rational(1) - up(i) - down(i); }
  const std::vector<Rational>& ups() const { return up_; }
  const std::vector<Rational>& downs() const { return down_; }
  const std::string& kind() const { return kind_; }

 private:
  std::vector<Rational> up_;
  std::vector<Rational> down_;
  std::string kind_;
};

/// Hamming distance to the adversary under the uniform policy with n >= 3:
/// down 1/k, up (k-i)/k.
BirthDeathChain harmonic_chain(unsigned k);

/// Hamming distance when every metric has two points: down i/k, up (k-i)/k.
BirthDeathChain binary_chain(unsigned k);

/// Closed-form EET. Rejects ell > k and chains with up(i) = 0 for some
/// i in 1..ell-1, where the formula divides by zero.
Rational eet_closed_form(const BirthDeathChain& chain, unsigned ell);

/// EET by exact tridiagonal elimination; works for any valid chain.
Rational eet_oracle(const BirthDeathChain& chain, unsigned ell);

/// h(0..k) from the elimination oracle.
std::vector<Rational> eet_oracle_table(const BirthDeathChain& chain);

/// k * sum_{i=k-ell+1}^{k} alpha_i for 1 <= ell <= k.
BigNat harmonic_eet(unsigned k, unsigned ell);

/// h(0..k) for the harmonic chain, h(0) = 0.
std::vector<BigNat> harmonic_eet_table(unsigned k);

/// 2^k - 1 + sum_{i=1}^{ell-1} (2^k - sum_{j<=i} C(k,j)) / C(k-1,i).
Rational binary_eet(unsigned k, unsigned ell);

struct StationaryCheck {
  std::vector<Rational> pi;  // stationary law with the absorbing state made reflecting
  Rational return_time;      // 1 / pi_0
  Rational h1;               // EET from state 1 (elimination oracle)
  bool ok() const { return return_time == h1 + Rational(1); }
};

/// Makes state 0 reflecting (P(0 -> 1) = 1), builds the stationary law by
/// detailed balance and compares the mean return time to 0 with h(1) + 1.
/// Requires up(i) > 0 for i < k.
StationaryCheck stationary_and_return(const BirthDeathChain& chain);
bool stationary_and_return_check(const BirthDeathChain& chain);

/// Rows (k, ell, h_num, h_den, chain_kind) for ell = 0..k.
void write_eet_csv(std::ostream& os, const BirthDeathChain& chain, const std::vector<Rational>& h,
                   bool header = true);

}  // namespace gks
