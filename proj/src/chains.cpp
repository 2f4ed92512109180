#include "gks/chains.hpp"

#include <ostream>
#include <stdexcept>

#include "gks/harmonic.hpp"

namespace gks {

namespace {

void require_k(unsigned k, const char* what) {
  if (k == 0) throw std::invalid_argument(std::string(what) + ": k must be >= 1");
}

void require_state(const BirthDeathChain& chain, unsigned ell, const char* what) {
  if (ell > chain.k()) {
    throw std::invalid_argument(std::string(what) + ": state " + std::to_string(ell) + " outside 0.." +
                                std::to_string(chain.k()));
  }
}

mpz_class binomial(unsigned n, unsigned r) {
  mpz_class c;
  mpz_bin_uiui(c.get_mpz_t(), n, r);
  return c;
}

}  // namespace

BirthDeathChain::BirthDeathChain(std::vector<Rational> up, std::vector<Rational> down, std::string kind)
    : up_(std::move(up)), down_(std::move(down)), kind_(std::move(kind)) {
  if (up_.empty() || up_.size() != down_.size()) {
    throw std::invalid_argument("BirthDeathChain: need k >= 1 up and down probabilities of equal length");
  }
  for (std::size_t i = 0; i < up_.size(); ++i) {
    const auto state = std::to_string(i + 1);
    if (up_[i].sign() < 0) throw std::invalid_argument("BirthDeathChain: negative up probability at state " + state);
    if (down_[i].sign() <= 0) {
      throw std::invalid_argument("BirthDeathChain: down probability must be positive at state " + state +
                                  " (absorption unreachable)");
    }
    if (up_[i] + down_[i] > Rational(1)) {
      throw std::invalid_argument("BirthDeathChain: up + down exceeds 1 at state " + state);
    }
  }
  if (!up_.back().is_zero()) throw std::invalid_argument("BirthDeathChain: up probability of state k must be 0");
}

BirthDeathChain harmonic_chain(unsigned k) {
  require_k(k, "harmonic_chain");
  std::vector<Rational> up, down;
  for (unsigned i = 1; i <= k; ++i) {
    up.emplace_back(static_cast<long>(k - i), static_cast<long>(k));
    down.emplace_back(1L, static_cast<long>(k));
  }
  return BirthDeathChain(std::move(up), std::move(down), "harmonic");
}

BirthDeathChain binary_chain(unsigned k) {
  require_k(k, "binary_chain");
  std::vector<Rational> up, down;
  for (unsigned i = 1; i <= k; ++i) {
    up.emplace_back(static_cast<long>(k - i), static_cast<long>(k));
    down.emplace_back(static_cast<long>(i), static_cast<long>(k));
  }
  return BirthDeathChain(std::move(up), std::move(down), "binary");
}

Rational eet_closed_form(const BirthDeathChain& chain, unsigned ell) {
  require_state(chain, ell, "eet_closed_form");
  if (ell == 0) return Rational(0);
  const unsigned k = chain.k();
  for (unsigned i = 1; i < ell; ++i) {
    if (chain.up(i).is_zero()) {
      throw std::invalid_argument("eet_closed_form: up probability of state " + std::to_string(i) +
                                  " is zero; use eet_oracle");
    }
  }
  // up_prod[i] = p_1...p_i, down_prod[i] = q_1...q_i, empty products are 1.
  std::vector<Rational> up_prod(k + 1, Rational(1)), down_prod(k + 1, Rational(1));
  for (unsigned i = 1; i <= k; ++i) {
    up_prod[i] = up_prod[i - 1] * chain.up(i);
    down_prod[i] = down_prod[i - 1] * chain.down(i);
  }
  // tail[i] = sum_{j=i}^{k} p_1..p_{j-1} / (q_1..q_j)
  std::vector<Rational> tail(k + 2);
  for (unsigned j = k; j >= 1; --j) tail[j] = tail[j + 1] + up_prod[j - 1] / down_prod[j];
  Rational h = tail[1];
  for (unsigned i = 1; i < ell; ++i) h += down_prod[i] / up_prod[i] * tail[i + 1];
  return h;
}

std::vector<Rational> eet_oracle_table(const BirthDeathChain& chain) {
  const unsigned k = chain.k();
  // Row i (1..k): (p_i + q_i) h_i - q_i h_{i-1} - p_i h_{i+1} = 1, h_0 = 0.
  // Sweep from the top: h_{i+1} = slope[i+1] h_i + offset[i+1].
  std::vector<Rational> slope(k + 2), offset(k + 2);
  for (unsigned i = k; i >= 1; --i) {
    const Rational& p = chain.up(i);
    const Rational& q = chain.down(i);
    Rational pivot = p + q;
    Rational rhs(1);
    if (i < k) {
      pivot.sub_mul(p, slope[i + 1]);
      rhs.add_mul(p, offset[i + 1]);
    }
    if (pivot.is_zero()) throw std::invalid_argument("eet_oracle: singular chain");
    slope[i] = q / pivot;
    offset[i] = rhs / pivot;
  }
  std::vector<Rational> h(k + 1);
  for (unsigned i = 1; i <= k; ++i) h[i] = slope[i] * h[i - 1] + offset[i];
  return h;
}

Rational eet_oracle(const BirthDeathChain& chain, unsigned ell) {
  require_state(chain, ell, "eet_oracle");
  if (ell == 0) return Rational(0);
  return eet_oracle_table(chain)[ell];
}

BigNat harmonic_eet(unsigned k, unsigned ell) {
  require_k(k, "harmonic_eet");
  if (ell == 0 || ell > k) {
    throw std::invalid_argument("harmonic_eet: ell must lie in 1.." + std::to_string(k));
  }
  const auto a = alpha_table(k);
  BigNat sum;
  for (unsigned i = k - ell + 1; i <= k; ++i) sum += a[i];
  return BigNat(static_cast<unsigned long>(k)) * sum;
}

std::vector<BigNat> harmonic_eet_table(unsigned k) {
  require_k(k, "harmonic_eet_table");
  const auto a = alpha_table(k);
  std::vector<BigNat> h(k + 1);
  for (unsigned ell = 1; ell <= k; ++ell) {
    h[ell] = h[ell - 1] + BigNat(static_cast<unsigned long>(k)) * a[k - ell + 1];
  }
  return h;
}

Rational binary_eet(unsigned k, unsigned ell) {
  require_k(k, "binary_eet");
  if (ell == 0 || ell > k) throw std::invalid_argument("binary_eet: ell must lie in 1.." + std::to_string(k));
  mpz_class two_k = 1;
  two_k <<= k;
  Rational h(two_k - 1, mpz_class(1));
  mpz_class prefix = 1;  // sum_{j=0}^{i} C(k, j)
  for (unsigned i = 1; i < ell; ++i) {
    prefix += binomial(k, i);
    h += Rational(two_k - prefix, binomial(k - 1, i));
  }
  return h;
}

StationaryCheck stationary_and_return(const BirthDeathChain& chain) {
  const unsigned k = chain.k();
  for (unsigned i = 1; i < k; ++i) {
    if (chain.up(i).is_zero()) {
      throw std::invalid_argument("stationary_and_return_check: up probability of state " + std::to_string(i) +
                                  " is zero (chain not irreducible)");
    }
  }
  // Detailed balance with p_0 = 1: pi_l = (p_{l-1}..p_0)/(q_l..q_1) pi_0.
  std::vector<Rational> weight(k + 1);
  weight[0] = Rational(1);
  for (unsigned l = 1; l <= k; ++l) {
    const Rational up_prev = l == 1 ? Rational(1) : chain.up(l - 1);
    weight[l] = weight[l - 1] * up_prev / chain.down(l);
  }
  Rational total;
  for (const auto& w : weight) total += w;
  StationaryCheck out;
  out.pi.reserve(k + 1);
  for (const auto& w : weight) out.pi.push_back(w / total);
  out.return_time = out.pi[0].reciprocal();
  out.h1 = eet_oracle(chain, 1);
  return out;
}

bool stationary_and_return_check(const BirthDeathChain& chain) { return stationary_and_return(chain).ok(); }

void write_eet_csv(std::ostream& os, const BirthDeathChain& chain, const std::vector<Rational>& h, bool header) {
  if (header) os << "k,ell,h_num,h_den,chain_kind\n";
  for (std::size_t ell = 0; ell < h.size(); ++ell) {
    os << chain.k() << ',' << ell << ',' << h[ell].num().get_str() << ',' << h[ell].den().get_str() << ','
       << chain.kind() << '\n';
  }
}

}  // namespace gks
