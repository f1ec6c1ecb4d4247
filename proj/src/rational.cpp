#include "c2wfomc/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace c2wfomc {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

Integer parse_integer(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) throw std::invalid_argument("malformed integer '" + std::string(s) + "'");
  Integer z(std::string(s), 10);
  return negative ? Integer(-z) : z;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Integer num = parse_integer(text.substr(0, slash));
    std::string_view den_text = text.substr(slash + 1);
    if (!den_text.empty() && (den_text.front() == '-' || den_text.front() == '+'))
      throw std::invalid_argument("sign not allowed in denominator");
    Integer den = parse_integer(den_text);
    if (den == 0) throw std::invalid_argument("zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    bool negative = false;
    if (!int_part.empty() && (int_part.front() == '-' || int_part.front() == '+')) {
      negative = int_part.front() == '-';
      int_part.remove_prefix(1);
    }
    if ((int_part.empty() && frac_part.empty()) || (!int_part.empty() && !all_digits(int_part)) ||
        (!frac_part.empty() && !all_digits(frac_part)))
      throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
    std::string digits = std::string(int_part) + std::string(frac_part);
    Integer num(digits.empty() ? std::string("0") : digits, 10);
    Integer den = pow(Integer(10), frac_part.size());
    Rational q(negative ? Integer(-num) : num, den);
    q.canonicalize();
    return q;
  }
  return Rational(parse_integer(text));
}

std::string to_string(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string to_string(const Integer& z) { return z.get_str(); }

std::string to_decimal(const Rational& q, unsigned digits) {
  Integer scale = pow(Integer(10), digits);
  Integer num = q.get_num();
  bool negative = num < 0;
  if (negative) num = -num;
  Integer scaled = num * scale / q.get_den();
  Integer whole = scaled / scale;
  Integer frac = scaled % scale;
  std::string frac_text = frac.get_str();
  if (frac_text.size() < digits) frac_text.insert(0, digits - frac_text.size(), '0');
  std::string out = (negative && scaled != 0 ? "-" : "") + whole.get_str();
  if (digits > 0) out += "." + frac_text;
  return out;
}

Integer pow(const Integer& base, std::uint64_t exponent) {
  Integer out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exponent);
  return out;
}

Rational pow(const Rational& base, std::uint64_t exponent) {
  Rational out;
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), exponent);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), exponent);
  // numerator and denominator stay coprime; only the sign may need moving
  out.canonicalize();
  return out;
}

Integer factorial(std::uint64_t n) {
  Integer out;
  mpz_fac_ui(out.get_mpz_t(), n);
  return out;
}

Integer binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  Integer out;
  mpz_bin_uiui(out.get_mpz_t(), n, k);
  return out;
}

}  // namespace c2wfomc
