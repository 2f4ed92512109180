#pragma once

// Exact arithmetic: non-negative big integers and normalized rationals,
// both backed by GMP.

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace gks {

class Rational;

/// Arbitrary-precision non-negative integer.
class BigNat {
 public:
  BigNat() = default;
  BigNat(unsigned long v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  explicit BigNat(const mpz_class& v);

  static BigNat parse(std::string_view text);
  static BigNat factorial(unsigned long n);

  BigNat& operator+=(const BigNat& o) { v_ += o.v_; return *this; }
  BigNat& operator*=(const BigNat& o) { v_ *= o.v_; return *this; }
  /// Throws std::domain_error if the result would be negative.
  BigNat& operator-=(const BigNat& o);

  friend BigNat operator+(BigNat a, const BigNat& b) { return a += b; }
  friend BigNat operator*(BigNat a, const BigNat& b) { return a *= b; }
  friend BigNat operator-(BigNat a, const BigNat& b) { return a -= b; }

  friend bool operator==(const BigNat& a, const BigNat& b) { return cmp(a.v_, b.v_) == 0; }
  friend std::strong_ordering operator<=>(const BigNat& a, const BigNat& b) {
    return cmp(a.v_, b.v_) <=> 0;
  }

  bool is_zero() const { return sgn(v_) == 0; }
  std::size_t digits() const { return to_string().size(); }
  std::string to_string() const { return v_.get_str(); }
  const mpz_class& mpz() const { return v_; }

  friend std::ostream& operator<<(std::ostream& os, const BigNat& n) { return os << n.v_; }

 private:
  mpz_class v_;
};

/// Exact rational number, always kept in lowest terms with a positive
/// denominator. Serializes as "num/den".
class Rational {
 public:
  Rational() = default;
  Rational(long v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  Rational(long num, long den);
  Rational(const BigNat& n) : v_(n.mpz()) {}  // NOLINT(google-explicit-constructor)
  Rational(const mpz_class& num, const mpz_class& den);
  explicit Rational(const mpq_class& v);

  /// Accepts "a", "a/b" and "-a/b" with optional surrounding whitespace.
  static Rational parse(std::string_view text);

  Rational& operator+=(const Rational& o) { mpq_add(v_.get_mpq_t(), v_.get_mpq_t(), o.v_.get_mpq_t()); return *this; }
  Rational& operator-=(const Rational& o) { mpq_sub(v_.get_mpq_t(), v_.get_mpq_t(), o.v_.get_mpq_t()); return *this; }
  Rational& operator*=(const Rational& o) { mpq_mul(v_.get_mpq_t(), v_.get_mpq_t(), o.v_.get_mpq_t()); return *this; }
  Rational& operator/=(const Rational& o);

  /// *this += a * b
  void add_mul(const Rational& a, const Rational& b);
  /// *this -= a * b
  void sub_mul(const Rational& a, const Rational& b);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  Rational operator-() const { return Rational(mpq_class(-v_)); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return mpq_equal(a.v_.get_mpq_t(), b.v_.get_mpq_t()) != 0;
  }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return cmp(a.v_, b.v_) <=> 0;
  }

  int sign() const { return sgn(v_); }
  bool is_zero() const { return sign() == 0; }
  bool is_integer() const { return v_.get_den() == 1; }

  mpz_class num() const { return v_.get_num(); }
  mpz_class den() const { return v_.get_den(); }
  Rational reciprocal() const;
  Rational abs() const { return Rational(mpq_class(::abs(v_))); }
  /// Smallest integer >= value.
  mpz_class ceil() const;

  long double to_long_double() const;
  double to_double() const { return static_cast<double>(to_long_double()); }

  /// Always "num/den", also for integers.
  std::string to_string() const;
  /// "num" for integers, "num/den" otherwise.
  std::string to_display() const;

  const mpq_class& mpq() const { return v_; }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_display(); }

 private:
  mpq_class v_;
};

}  // namespace gks
