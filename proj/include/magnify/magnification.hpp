#pragma once

// Dilation frames and order-of-magnitude expansions.
//
// A frame (x, delta) identifies the ball of radius ~delta around x with a
// unit-scale space through xi -> (xi - x) / delta. Under it a map f becomes
//   f^delta_x(v) = (f(x + delta v) - f(x)) / delta,
// whose behavior along a shrinking ladder of scales reveals the Taylor data
// of f at x.

#include "magnify/expansion.hpp"
#include "magnify/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace magnify {

class DilationFrame {
 public:
  /// Throws std::invalid_argument unless scale > 0 and base is finite.
  DilationFrame(Vector base, double scale);

  const Vector& base() const { return base_; }
  double scale() const { return scale_; }

  /// xi -> (xi - x) / delta
  Vector flat(const Vector& xi) const { return (xi - base_) / scale_; }
  /// v -> x + delta v
  Vector unflat(const Vector& v) const { return base_ + scale_ * v; }

 private:
  Vector base_;
  double scale_;
};

/// Geometric scales delta_j = delta0 * ratio^j, j = 0..levels (strictly decreasing).
class DeltaLadder {
 public:
  /// Throws std::invalid_argument unless delta0 > 0, 0 < ratio < 1, levels >= 3.
  DeltaLadder(double delta0 = 1e-2, double ratio = 0.5, int levels = 8);

  double delta0() const { return delta0_; }
  double ratio() const { return ratio_; }
  int levels() const { return levels_; }
  std::vector<double> scales() const;

 private:
  double delta0_;
  double ratio_;
  int levels_;
};

Vector dilated_eval(const Evaluator& f, const DilationFrame& frame, const Vector& v);

/// f^delta_x as a map on frame coordinates; f(x) is evaluated once.
Evaluator dilated_map(const Evaluator& f, const DilationFrame& frame);

/// (f^delta_x)^delta_xi(rho) = (f^delta_x(xi + delta rho) - f^delta_x(xi)) / delta, so that
///   f(x + delta xi + delta^2 rho) = f(x) + delta f^delta_x(xi) + delta^2 result.
Vector nested_dilated_eval(const Evaluator& f, const Vector& x, double delta, const Vector& xi, const Vector& rho);

/// rho -> (f^delta_x)^delta_xi(rho) as an evaluator, for building deeper nests.
Evaluator nested_dilated_map(const Evaluator& f, const Vector& x, double delta, const Vector& xi);

struct FitOptions {
  DeltaLadder ladder{};
  int directions = 64;
  std::uint64_t seed = 42;
};

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares fit of (L, S2, S3) to dilated evaluations over the whole
/// ladder at once, using antipodal direction pairs. When the directions
/// suffice, the model always carries terms through degree 3 and the extra
/// terms are dropped from the result, so lower-order fits are not biased by
/// the next-order term. Remainder diagnostics are recorded per scale.
Expansion fit_expansion(const Evaluator& f, const Vector& x, int order, const FitOptions& options = {});
Expansion fit_expansion(const Evaluator& f, const Vector& x, int order, const DeltaLadder& ladder,
                        std::span<const Vector> directions);

/// Max over directions u of |f(x + delta u) - expansion.predict(delta u)| for each delta.
std::vector<std::pair<double, double>> remainder_profile(const Evaluator& f, const Expansion& expansion,
                                                         const DeltaLadder& ladder, std::span<const Vector> directions);

struct RemainderSlope {
  /// Absent when saturated.
  std::optional<double> slope;
  bool saturated = false;
  double noise_floor = 0.0;
  std::vector<std::pair<double, double>> profile;  // (delta, residual), delta decreasing
  int points_used = 0;
};

/// Log-log least-squares slope of the remainder profile. Points with residual
/// below 1e3 * eps * (|f(x)| + 1) are excluded; if fewer than three remain the
/// result is reported as saturated.
RemainderSlope remainder_slope(const Evaluator& f, const Expansion& expansion, const DeltaLadder& ladder,
                               std::span<const Vector> directions);

double log_log_slope(std::span<const std::pair<double, double>> points);

struct LinearitySample {
  double alpha;
  double beta;
  Vector v;
  Vector w;
};

/// Samples with |alpha|, |beta|, |v|, |w| <= bound.
std::vector<LinearitySample> linearity_samples(int n, int count, double bound, std::uint64_t seed);

/// max |g(alpha v + beta w) - alpha g(v) - beta g(w)| over samples within the bound.
/// Throws std::invalid_argument if no sample lies within the bound.
double almost_linearity_defect(const Evaluator& g, std::span<const LinearitySample> samples, double bound);

/// max |g(v)| over the sample arguments v, w, alpha v + beta w; the scale that
/// almost_linearity_defect should be compared against.
double linearity_scale(const Evaluator& g, std::span<const LinearitySample> samples, double bound);

}  // namespace magnify
