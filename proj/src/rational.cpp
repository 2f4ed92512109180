#include "gks/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace gks {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_integer_literal(std::string_view s, bool allow_sign) {
  if (allow_sign && !s.empty() && (s.front() == '-' || s.front() == '+')) s.remove_prefix(1);
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

mpz_class parse_mpz(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  return mpz_class(std::string(s), 10);
}

}  // namespace

BigNat::BigNat(const mpz_class& v) : v_(v) {
  if (sgn(v_) < 0) throw std::domain_error("BigNat: negative value " + v_.get_str());
}

BigNat BigNat::parse(std::string_view text) {
  text = trim(text);
  if (!is_integer_literal(text, false)) {
    throw std::invalid_argument("not a non-negative integer: '" + std::string(text) + "'");
  }
  return BigNat(parse_mpz(text));
}

BigNat BigNat::factorial(unsigned long n) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), n);
  return BigNat(f);
}

BigNat& BigNat::operator-=(const BigNat& o) {
  if (v_ < o.v_) throw std::domain_error("BigNat: subtraction underflow");
  v_ -= o.v_;
  return *this;
}

Rational::Rational(long num, long den) : Rational(mpz_class(num), mpz_class(den)) {}

Rational::Rational(const mpz_class& num, const mpz_class& den) {
  if (sgn(den) == 0) throw std::invalid_argument("Rational: zero denominator");
  v_ = mpq_class(num, den);
  v_.canonicalize();
}

Rational::Rational(const mpq_class& v) : v_(v) { v_.canonicalize(); }

Rational Rational::parse(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  const auto num_part = trim(text.substr(0, slash));
  if (!is_integer_literal(num_part, true)) {
    throw std::invalid_argument("malformed rational: '" + std::string(text) + "'");
  }
  if (slash == std::string_view::npos) return Rational(parse_mpz(num_part), mpz_class(1));
  const auto den_part = trim(text.substr(slash + 1));
  if (!is_integer_literal(den_part, false)) {
    throw std::invalid_argument("malformed rational: '" + std::string(text) + "'");
  }
  return Rational(parse_mpz(num_part), parse_mpz(den_part));
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.is_zero()) throw std::domain_error("Rational: division by zero");
  mpq_div(v_.get_mpq_t(), v_.get_mpq_t(), o.v_.get_mpq_t());
  return *this;
}

void Rational::add_mul(const Rational& a, const Rational& b) {
  thread_local mpq_class tmp;
  mpq_mul(tmp.get_mpq_t(), a.v_.get_mpq_t(), b.v_.get_mpq_t());
  mpq_add(v_.get_mpq_t(), v_.get_mpq_t(), tmp.get_mpq_t());
}

void Rational::sub_mul(const Rational& a, const Rational& b) {
  thread_local mpq_class tmp;
  mpq_mul(tmp.get_mpq_t(), a.v_.get_mpq_t(), b.v_.get_mpq_t());
  mpq_sub(v_.get_mpq_t(), v_.get_mpq_t(), tmp.get_mpq_t());
}

Rational Rational::reciprocal() const {
  if (is_zero()) throw std::domain_error("Rational: reciprocal of zero");
  mpq_class r;
  mpq_inv(r.get_mpq_t(), v_.get_mpq_t());
  return Rational(r);
}

mpz_class Rational::ceil() const {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), v_.get_num_mpz_t(), v_.get_den_mpz_t());
  return r;
}

long double Rational::to_long_double() const {
  // Two-term split keeps ~106 bits, enough for an 80-bit long double.
  mpf_class x(v_, 256);
  const double hi = x.get_d();
  mpf_class rest(x - hi, 256);
  return static_cast<long double>(hi) + static_cast<long double>(rest.get_d());
}

std::string Rational::to_string() const {
  return v_.get_num().get_str() + "/" + v_.get_den().get_str();
}

std::string Rational::to_display() const {
  return is_integer() ? v_.get_num().get_str() : to_string();
}

}  // namespace gks
