#pragma once

#include <cstdint>
#include <string>

namespace ibpo {

// Exact rational over int64. Always kept normalized: den > 0 and
// gcd(|num|, den) == 1. Used wherever budget arithmetic must be bit-exact.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

// Normalizes (sign moved to numerator, gcd reduced). Throws on zero denominator.
Rational make_rational(std::int64_t num, std::int64_t den = 1);

// Accepts "p/d" or a plain integer, e.g. "1/2", "3", "-2/5".
Rational parse_rational(const std::string& text);

Rational add(Rational a, Rational b);

// -1, 0 or +1. Exact (uses 128-bit cross products).
int compare(Rational a, Rational b);

inline bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
inline bool operator!=(Rational a, Rational b) { return !(a == b); }
inline bool operator<(Rational a, Rational b) { return compare(a, b) < 0; }
inline bool operator<=(Rational a, Rational b) { return compare(a, b) <= 0; }

double to_double(Rational r);
std::string to_string(Rational r);

}  // namespace ibpo
