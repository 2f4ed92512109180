#include "gks/harmonic.hpp"

#include <stdexcept>
#include <string>

namespace gks {

namespace {

void require_positive(unsigned ell, const char* what) {
  if (ell == 0) throw std::invalid_argument(std::string(what) + ": ell must be >= 1");
}

Rational make_e_upper_bound() {
  constexpr unsigned kTerms = 50;
  Rational sum;
  mpz_class fact = 1;
  for (unsigned i = 0; i < kTerms; ++i) {
    if (i > 0) fact *= i;
    sum += Rational(mpz_class(1), fact);
  }
  // fact == 49! here; the tail sum_{i>=50} 1/i! is below 1/(49! * 49).
  sum += Rational(mpz_class(1), fact * (kTerms - 1));
  return sum;
}

}  // namespace

BigNat alpha(unsigned ell) {
  require_positive(ell, "alpha");
  BigNat a(1UL);
  for (unsigned l = 2; l <= ell; ++l) a = BigNat(1UL) + BigNat(static_cast<unsigned long>(l - 1)) * a;
  return a;
}

std::vector<BigNat> alpha_table(unsigned n) {
  std::vector<BigNat> t(n + 1);
  for (unsigned l = 1; l <= n; ++l) {
    t[l] = l == 1 ? BigNat(1UL) : BigNat(1UL) + BigNat(static_cast<unsigned long>(l - 1)) * t[l - 1];
  }
  return t;
}

BigNat alpha_closed_form(unsigned ell) {
  require_positive(ell, "alpha_closed_form");
  const mpz_class top = BigNat::factorial(ell - 1).mpz();
  mpz_class sum = 0;
  mpz_class fact_i = 1;
  for (unsigned i = 0; i < ell; ++i) {
    if (i > 0) fact_i *= i;
    sum += top / fact_i;  // exact: i <= ell-1
  }
  return BigNat(sum);
}

const Rational& e_upper_bound() {
  static const Rational e = make_e_upper_bound();
  return e;
}

AlphaBounds alpha_bounds(unsigned ell) {
  require_positive(ell, "alpha_bounds_check");
  AlphaBounds b;
  b.lower = BigNat::factorial(ell - 1);
  b.value = alpha(ell);
  b.upper = BigNat((e_upper_bound() * Rational(b.lower)).ceil());
  b.lower_ok = b.lower <= b.value;
  b.ratio_ok = Rational(b.value) <= Rational(3) * Rational(b.lower);
  b.upper_ok = b.value <= b.upper;
  return b;
}

bool alpha_bounds_check(unsigned ell) { return alpha_bounds(ell).ok(); }

}  // namespace gks
