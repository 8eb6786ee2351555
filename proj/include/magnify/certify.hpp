#pragma once

// Empirical invertibility certificates.
//
// First order: with L invertible and the sampled two-point modulus omega(s)
// satisfying omega(d) |L^-1| <= kappa, the preconditioned map is a
// perturbation of the identity on B_d, which gives the sandwich
//   |xi - zeta| / 2 < |F(xi) - F(zeta)| < 2 |xi - zeta|
// and covering of B_{d/2}. Second order: with df_x = 0 and a positive
// transversality margin for the quadratic part, the image of B_d covers a
// ball of radius c d^2 / 2 around f(x).
//
// Every certificate is backed by samples and spot-check solves; none is a proof.

#include "magnify/certificate.hpp"
#include "magnify/expansion.hpp"
#include "magnify/magnification.hpp"
#include "magnify/solver.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace magnify {

/// Radii r_max * 2^(-j/8), j = 0..count-1 (descending).
std::vector<double> default_modulus_radii(double r_max = 1.0, int count = 33);

/// Sampled modulus table for descending radii. Pairs are drawn uniformly from
/// B_s(x); pairs closer than 1e-12 s are redrawn.
std::vector<ModulusEntry> uniform_diff_modulus(const Evaluator& f, const Vector& x, const Matrix& linear,
                                               std::span<const double> radii, int pairs_per_radius,
                                               std::uint64_t seed);

/// Raw sampled omega at a single radius; equals the `raw` column of the table.
double sampled_modulus(const Evaluator& f, const Vector& x, const Matrix& linear, double radius, int pairs,
                       std::uint64_t seed);

struct FirstOrderOptions {
  std::vector<double> radii = default_modulus_radii();
  int pairs_per_radius = 10000;
  double kappa = 0.5;
  double singular_tol = 1e-10;
  int coverage_targets = 1000;
  RegularSolveOptions solve{};
  std::uint64_t seed = 42;
};

FirstOrderCertificate certify_first_order(const Evaluator& f, const Expansion& expansion,
                                          const FirstOrderOptions& options = {});

struct FalsifyOptions {
  double radius = 0.1;
  int samples = 2000;
  double collision_tol = 1e-10;
  int antipodal_directions = 64;
  int refine_candidates = 8;
  int max_witnesses = 16;
  std::uint64_t seed = 42;
};

/// Searches B_radius(x) for y != y' with
///   |f(y) - f(y')| <= collision_tol * |y - y'|^2 * (1 + |f(x)|),
/// probing the antipodal family x +- t u directly and refining the most
/// suspicious random pairs by solving f(z) = f(y) from z = y'. Pairs closer
/// than 1e-3 * radius are not counted.
InjectivityAudit falsify_injectivity(const Evaluator& f, const Vector& x, const FalsifyOptions& options = {});

struct QuadraticOptions {
  /// Defaults to 1e-8 * (1 + |S2|).
  std::optional<double> linear_tol;
  double margin_tol = 1e-6;
  /// Stage 3 passes when the remainder slope exceeds 2 + slope_margin, so a
  /// pure delta^2 remainder measured with rounding noise is not mistaken for o(delta^2).
  double slope_margin = 0.25;
  RegularityOptions regularity{};
  DeltaLadder ladder{};
  int directions = 64;
  double scale = 0.1;  // d-bar
  double a_bound = std::numeric_limits<double>::infinity();
  int coverage_levels = 4;
  double coverage_ratio = 0.5;
  int coverage_targets = 1000;
  DegenerateSolveOptions solve{};
  FalsifyOptions audit{};
  std::uint64_t seed = 42;
};

/// Stages: (1) |L| <= tol_L, (2) margin >= tol_m, (3) remainder slope > 2 + slope_margin
/// or saturated, (4) coverage of |w| <= c_hat d^2 / 2 by preimages in B_d for
/// d on a ladder below min(d-bar, a), (5) injectivity audit (annotation only).
QuadraticCertificate certify_quadratic(const Evaluator& f, const Expansion& expansion,
                                       const QuadraticOptions& options = {});

struct ScaleOutcome {
  bool passed = false;
  double value = 0.0;
};

using ScaleProperty = std::function<ScaleOutcome(double)>;

struct SweepEntry {
  double scale = 0.0;
  bool passed = false;
  double value = 0.0;
  std::string error;
};

struct SweepResult {
  /// Largest scale b such that every ladder scale <= b passed; absent if the
  /// smallest scale failed.
  std::optional<double> largest_passing;
  std::vector<SweepEntry> transcript;
};

/// Evaluates the property at every scale in ascending order. A throwing
/// property counts as a failure at that scale.
SweepResult scale_sweep(const ScaleProperty& property, std::span<const double> ascending);

/// Geometric ladder from lo to hi inclusive with `count` scales.
std::vector<double> ascending_ladder(double lo, double hi, int count);
/// lo * ratio^j, j = 0..count-1, ratio > 1.
std::vector<double> ascending_ladder_ratio(double lo, double ratio, int count);

/// omega(s) |L^-1| <= kappa at a scale s, with omega sampled from `pairs` pairs.
ScaleProperty contraction_property(const Evaluator& f, const Vector& x, const Matrix& linear, int pairs,
                                   double kappa, std::uint64_t seed);

/// Coverage of |w| <= c_hat s^2 / 2 by preimages in B_s(x) using N spot-check targets.
ScaleProperty quadratic_coverage_property(const Evaluator& f, const Vector& x, const QuadDifferential& a,
                                          double c_hat, int targets, const DegenerateSolveOptions& solve,
                                          std::uint64_t seed);

}  // namespace magnify
