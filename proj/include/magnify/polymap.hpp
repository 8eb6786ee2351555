#pragma once

// Exact polynomial maps R^n -> R^n: parsing, printing, evaluation and
// symbolic Taylor data. Coefficients are exact rationals; floating-point
// evaluation uses coefficients rounded once at construction.
//
// Map-file grammar (line oriented, '#' starts a comment):
//   file     := "dim" INT NEWLINE (compdef NEWLINE)*
//   compdef  := "f" INT "=" expr
//   expr     := ["+"|"-"] term (("+"|"-") term)*
//   term     := factor ("*" factor)*
//   factor   := coefficient | var ("^" INT)? | "(" expr ")"
//   coefficient := INT ("/" INT)? | DECIMAL
//   var      := "x" INT
// Components that are never defined are zero.

#include "magnify/expansion.hpp"
#include "magnify/types.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace magnify {

using Rational = boost::multiprecision::cpp_rational;
using Exponents = std::vector<unsigned>;

struct Monomial {
  Rational coefficient;
  Exponents exponents;

  unsigned degree() const;
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class PolynomialMap {
 public:
  /// Normalizes: like terms are merged, zero terms dropped, and each component
  /// sorted in descending lexicographic exponent order. Throws DimensionError
  /// if an exponent vector does not have length n.
  PolynomialMap(int n, std::vector<std::vector<Monomial>> components);

  static PolynomialMap identity(int n);

  int dimension() const { return n_; }
  const std::vector<std::vector<Monomial>>& components() const { return components_; }
  unsigned total_degree() const;

  Vector evaluate(const Vector& point) const;
  std::vector<Rational> evaluate(const std::vector<Rational>& point) const;
  /// Evaluator sharing this map's rounded coefficients.
  Evaluator evaluator() const;

  friend bool operator==(const PolynomialMap& a, const PolynomialMap& b) {
    return a.n_ == b.n_ && a.components_ == b.components_;
  }

 private:
  struct RoundedTerm {
    double coefficient;
    Exponents exponents;
  };

  int n_;
  std::vector<std::vector<Monomial>> components_;
  std::shared_ptr<const std::vector<std::vector<RoundedTerm>>> rounded_;
};

PolynomialMap parse_map(std::string_view text);
PolynomialMap load_map(const std::string& path);
/// Canonical text form; parse_map(print_map(m)) == m.
std::string print_map(const PolynomialMap& map);

inline Vector evaluate(const PolynomialMap& map, const Vector& point) { return map.evaluate(point); }

/// Exact Taylor coefficients with factorials absorbed:
///   linear[i][a]        = d f_i / d x_a
///   quadratic[i][a][b]  = (1/2) d^2 f_i / d x_a d x_b
///   cubic[i][a][b][c]   = (1/6) d^3 f_i / d x_a d x_b d x_c
/// Nested vectors; absent orders are empty.
struct RationalExpansion {
  std::vector<Rational> point;
  int order = 1;
  std::vector<Rational> value;
  std::vector<std::vector<Rational>> linear;
  std::vector<std::vector<std::vector<Rational>>> quadratic;
  std::vector<std::vector<std::vector<std::vector<Rational>>>> cubic;

  /// value + L v + S2(v, v) + S3(v, v, v) in exact arithmetic.
  std::vector<Rational> reconstruct(const std::vector<Rational>& v) const;
};

RationalExpansion exact_expansion_rational(const PolynomialMap& map, const std::vector<Rational>& point, int order);

/// Exact Taylor data at a floating-point point (converted exactly to
/// rationals), rounded once to double.
Expansion exact_expansion(const PolynomialMap& map, const Vector& point, int order);

/// Exact Jacobian of the map at a point, rounded once.
Matrix exact_jacobian(const PolynomialMap& map, const Vector& point);

Rational parse_decimal(std::string_view text);

}  // namespace magnify
