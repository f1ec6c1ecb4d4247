#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace c2wfomc {

using Integer = mpz_class;
using Rational = mpq_class;

/// Parses "p/q", an integer, or a decimal literal such as "-0.125" into an exact rational.
/// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

/// "p/q", or just "p" when the denominator is one.
std::string to_string(const Rational& q);
std::string to_string(const Integer& z);

/// Decimal rendering with `digits` digits after the point (rounded toward zero).
std::string to_decimal(const Rational& q, unsigned digits = 12);

Rational pow(const Rational& base, std::uint64_t exponent);
Integer pow(const Integer& base, std::uint64_t exponent);

Integer factorial(std::uint64_t n);
Integer binomial(std::uint64_t n, std::uint64_t k);

inline bool is_integral(const Rational& q) { return q.get_den() == 1; }

}  // namespace c2wfomc
