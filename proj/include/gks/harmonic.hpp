#pragma once

// The harmonic recursion a_1 = 1, a_l = 1 + (l-1) a_{l-1}, its
// inverse-factorial closed form, and the factorial sandwich bounds.

#include <cstddef>
#include <vector>

#include "gks/rational.hpp"

namespace gks {

/// Largest index the CLI accepts.
inline constexpr unsigned kMaxAlphaIndex = 64;

/// Unrolls the recurrence. Throws std::invalid_argument for ell == 0.
BigNat alpha(unsigned ell);

/// alpha_1..alpha_n, index 0 unused (holds 0).
std::vector<BigNat> alpha_table(unsigned n);

/// Sum over i = 0..ell-1 of (ell-1)!/i!, every term an exact integer.
BigNat alpha_closed_form(unsigned ell);

/// Rational upper bound for e: the first 50 series terms plus the tail
/// bound 1/(49! * 49).
const Rational& e_upper_bound();

struct AlphaBounds {
  BigNat lower;         // (ell-1)!
  BigNat value;         // alpha_ell
  BigNat upper;         // ceil(e_upper * (ell-1)!)
  bool lower_ok = false;
  bool ratio_ok = false;  // alpha_ell / (ell-1)! <= 3
  bool upper_ok = false;
  bool ok() const { return lower_ok && ratio_ok && upper_ok; }
};

AlphaBounds alpha_bounds(unsigned ell);

/// (ell-1)! <= alpha_ell <= e (ell-1)!, checked exactly.
bool alpha_bounds_check(unsigned ell);

}  // namespace gks
