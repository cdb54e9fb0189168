#pragma once

// Scalar support for the two arithmetic modes: IEEE double and exact GMP
// rationals. Engine templates are instantiated for both.

#include <gmpxx.h>

#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>

namespace causal_ident {

using Rational = mpq_class;

enum class Arithmetic { Float, Rational };

const char* to_string(Arithmetic mode);
Arithmetic parse_arithmetic(std::string_view text);

template <class S>
inline constexpr bool is_exact_v = std::is_same_v<S, Rational>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.get_d(); }

template <class S>
S from_rational(const Rational& r) {
  if constexpr (is_exact_v<S>) {
    return r;
  } else {
    return r.get_d();
  }
}

inline double abs_value(double x) { return std::fabs(x); }
inline Rational abs_value(const Rational& x) { return abs(x); }

inline bool is_zero(double x) { return x == 0.0; }
inline bool is_zero(const Rational& x) { return sgn(x) == 0; }

// Compares a scalar against a double tolerance. Exact scalars compare
// exactly against the rational value of the tolerance.
inline bool within(double x, double tol) { return std::fabs(x) <= tol; }
inline bool within(const Rational& x, double tol) {
  return abs(x) <= Rational(tol);
}

/// Parses "p/q", an integer, or a decimal literal ("0.25", "1e-3") into an
/// exact rational. Throws std::invalid_argument on malformed text.
Rational parse_rational(std::string_view text);

/// Exact rational whose decimal expansion is the shortest round-trip
/// representation of `x` (0.7 -> 7/10, not the binary expansion).
Rational rational_from_double(double x);

/// Canonical text form: "p/q", or "p" for integers.
std::string rational_to_string(const Rational& r);

}  // namespace causal_ident
