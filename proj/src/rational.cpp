#include "ibpo/rational.hpp"

#include <numeric>
#include <stdexcept>

namespace ibpo {

Rational make_rational(std::int64_t num, std::int64_t den) {
  if (den == 0) {
    throw std::invalid_argument("rational: zero denominator");
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
  if (num == 0) {
    return {0, 1};
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return {num / g, den / g};
}

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return make_rational(std::stoll(text), 1);
    }
    const std::int64_t num = std::stoll(text.substr(0, slash));
    const std::int64_t den = std::stoll(text.substr(slash + 1));
    return make_rational(num, den);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("rational: cannot parse '" + text + "'");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("rational: value out of range in '" + text + "'");
  }
}

Rational add(Rational a, Rational b) {
  const __int128 num = static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den;
  const __int128 den = static_cast<__int128>(a.den) * b.den;
  const __int128 lo = static_cast<__int128>(INT64_MIN);
  const __int128 hi = static_cast<__int128>(INT64_MAX);
  if (num < lo || num > hi || den > hi) {
    throw std::overflow_error("rational: addition overflow");
  }
  return make_rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

int compare(Rational a, Rational b) {
  const __int128 lhs = static_cast<__int128>(a.num) * b.den;
  const __int128 rhs = static_cast<__int128>(b.num) * a.den;
  if (lhs < rhs) return -1;
  if (lhs > rhs) return 1;
  return 0;
}

double to_double(Rational r) { return static_cast<double>(r.num) / static_cast<double>(r.den); }

std::string to_string(Rational r) {
  if (r.den == 1) {
    return std::to_string(r.num);
  }
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

}  // namespace ibpo
