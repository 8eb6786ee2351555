#pragma once

#include "magnify/symalg.hpp"
#include "magnify/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace magnify {

/// Symmetric trilinear map R^n x R^n x R^n -> R^n; component i is a fully
/// symmetric n^3 tensor stored flat with index (a * n + b) * n + c.
class CubicForm {
 public:
  explicit CubicForm(int n);
  /// Throws std::invalid_argument unless every tensor is exactly symmetric.
  CubicForm(int n, std::vector<std::vector<double>> tensors);

  int dimension() const { return n_; }
  double operator()(int i, int a, int b, int c) const {
    return tensors_[static_cast<std::size_t>(i)][static_cast<std::size_t>((a * n_ + b) * n_ + c)];
  }
  /// Sets all six permutations of (a, b, c) at once.
  void set_symmetric(int i, int a, int b, int c, double value);

  Vector apply(const Vector& u, const Vector& v, const Vector& w) const;
  Vector cube(const Vector& v) const { return apply(v, v, v); }
  double norm() const;

 private:
  int n_;
  std::vector<std::vector<double>> tensors_;
};

/// Degree-k Taylor data at a point with factorials absorbed:
///   f(x + v) = f(x) + L v + S2(v, v) + S3(v, v, v) + remainder.
struct Expansion {
  Vector base_point;
  int order = 1;
  Vector value;
  Matrix linear;
  std::optional<QuadDifferential> quadratic;  // order >= 2
  std::optional<CubicForm> cubic;             // order == 3
  /// (delta, max residual over sampled unit directions), delta strictly decreasing.
  std::vector<std::pair<double, double>> remainder_diagnostics;

  int dimension() const { return static_cast<int>(value.size()); }

  /// L v + S2(v, v) + S3(v, v, v), using only the terms up to `up_to_order`
  /// (clamped to this expansion's order).
  Vector offset(const Vector& v, int up_to_order = 3) const;
  /// value + offset(v).
  Vector predict(const Vector& v, int up_to_order = 3) const { return value + offset(v, up_to_order); }

  /// Copy keeping only terms of order <= k.
  Expansion truncated(int k) const;
};

void validate_order(int k);

/// max |estimate - reference| over the coefficients of L, S2, S3 (up to the
/// lower of the two orders), divided by max(1, largest |reference| coefficient).
double coefficient_error(const Expansion& estimate, const Expansion& reference);

}  // namespace magnify
