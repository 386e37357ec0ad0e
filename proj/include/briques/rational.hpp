#pragma once
/**
 * @file rational.hpp
 * @brief Numeric backends: exact GMP rationals and binary doubles.
 *
 * Everything in the simulator is templated over a scalar type `Num`. The two
 * supported instantiations are `Rational` (exact) and `double`. The free
 * functions below give both a common vocabulary (floor, fractional part,
 * conversion, parsing) so that templated code never has to branch on the type.
 */

#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

#include <gmpxx.h>

namespace briques {

using Rational = mpq_class;

template <class Num>
inline constexpr bool is_exact_v = std::is_same_v<Num, Rational>;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::int64_t to_int64(const mpz_class& z) {
  if (!z.fits_slong_p()) throw std::overflow_error("integer does not fit in 64 bits");
  return z.get_si();
}

inline mpz_class floor_z(const Rational& r) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return q;
}

inline std::int64_t floor_int(const Rational& r) { return to_int64(floor_z(r)); }
inline std::int64_t floor_int(double d) { return static_cast<std::int64_t>(std::floor(d)); }

inline std::int64_t ceil_int(const Rational& r) {
  mpz_class q;
  mpz_cdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  return to_int64(q);
}
inline std::int64_t ceil_int(double d) { return static_cast<std::int64_t>(std::ceil(d)); }

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }
inline bool is_integer(double d) { return d == std::floor(d); }

/// Reduction to [0, 1).
inline Rational frac(const Rational& r) { return r - Rational(floor_z(r)); }
inline double frac(double d) {
  double f = d - std::floor(d);
  return f >= 1.0 ? 0.0 : f;
}

inline double to_double(const Rational& r) { return r.get_d(); }
inline double to_double(double d) { return d; }

template <class Num>
Num from_int(std::int64_t v) {
  if constexpr (is_exact_v<Num>) {
    return Rational(mpz_class(static_cast<long>(v)));
  } else {
    return static_cast<double>(v);
  }
}

template <class Num>
Num from_ratio(std::int64_t num, std::int64_t den) {
  if constexpr (is_exact_v<Num>) {
    Rational r(mpz_class(static_cast<long>(num)), mpz_class(static_cast<long>(den)));
    r.canonicalize();
    return r;
  } else {
    return static_cast<double>(num) / static_cast<double>(den);
  }
}

template <class Num>
Num from_rational(const Rational& r) {
  if constexpr (is_exact_v<Num>) {
    return r;
  } else {
    return r.get_d();
  }
}

inline Rational make_rational(std::int64_t num, std::int64_t den = 1) {
  return from_ratio<Rational>(num, den);
}

/// Accepts "a", "a/b" or a finite decimal such as "0.07" (converted exactly).
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s.empty()) throw ParseError("empty rational");
  try {
    if (auto dot = s.find('.'); dot != std::string::npos) {
      if (s.find('/') != std::string::npos) throw ParseError("mixed decimal and fraction: " + s);
      bool negative = s[0] == '-';
      std::string digits = s.substr(negative || s[0] == '+' ? 1 : 0);
      dot = digits.find('.');
      std::string whole = digits.substr(0, dot);
      std::string decimals = digits.substr(dot + 1);
      if (whole.empty()) whole = "0";
      if (decimals.empty()) decimals = "0";
      for (char c : whole + decimals) {
        if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("bad decimal: " + s);
      }
      mpz_class num(whole + decimals, 10);
      mpz_class den;
      mpz_ui_pow_ui(den.get_mpz_t(), 10, decimals.size());
      Rational r(num, den);
      r.canonicalize();
      return negative ? Rational(-r) : r;
    }
    Rational r(s, 10);
    if (r.get_den() == 0) throw ParseError("zero denominator: " + s);
    r.canonicalize();
    return r;
  } catch (const std::invalid_argument&) {
    throw ParseError("not a rational: " + s);
  }
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

}  // namespace briques
