#pragma once

#include "magnify/magnification.hpp"
#include "magnify/symalg.hpp"
#include "magnify/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace magnify {

enum class CertificateStatus {
  certified,
  /// Coverage verified; strict injectivity fails on symmetric balls because
  /// the quadratic part identifies v with -v.
  certified_up_to_antipodes,
  refused,
};

const char* to_string(CertificateStatus status);

/// Sampled two-point modulus at one radius s:
///   omega(s) = max |f(y) - f(z) - L(y - z)| / |y - z| over pairs in B_s(x).
/// `omega` is the running max from smaller radii upward (a pair in a smaller
/// ball is also a pair in every larger one); `raw` is the value sampled at s.
struct ModulusEntry {
  double radius = 0.0;
  double omega = 0.0;
  double raw = 0.0;
  int pairs = 0;
};

struct CoverageFailure {
  Vector target;
  double best_residual = 0.0;
};

struct CoverageResult {
  double fraction = 0.0;
  int targets = 0;
  int successes = 0;
  double radius = 0.0;
  double max_residual = 0.0;
  std::vector<CoverageFailure> failures;
};

/// Empirical first-order certificate. The claim, in coordinates preconditioned
/// by L^-1: the ball of radius d/2 is covered by the image of B_d(x), and the
/// map is injective on B_d(x). Sampled, not proved.
struct FirstOrderCertificate {
  Vector base_point;
  Matrix linear;
  double sigma_min = 0.0;
  double inverse_norm = 0.0;  // spectral norm of L^-1
  double kappa = 0.5;
  std::vector<ModulusEntry> modulus;  // radii descending
  std::optional<double> radius;       // d
  double covering_radius = 0.0;       // d / 2
  CoverageResult coverage;
  CertificateStatus status = CertificateStatus::refused;
  std::string reason;
};

struct CollisionPair {
  Vector first;
  Vector second;
  double image_gap = 0.0;         // |f(first) - f(second)|
  double separation = 0.0;        // |first - second|
  double antipodal_offset = 0.0;  // |first + second - 2x|
};

struct InjectivityAudit {
  bool clean = true;
  int pairs_examined = 0;
  int antipodal_probes = 0;
  std::vector<CollisionPair> collisions;
};

struct CoverageLevel {
  double radius = 0.0;         // d
  double target_radius = 0.0;  // c_hat d^2 / 2
  CoverageResult result;
};

/// Empirical second-order certificate at a point with vanishing differential.
struct QuadraticCertificate {
  Vector base_point;
  Vector value;
  double linear_norm = 0.0;
  double linear_tol = 0.0;
  std::optional<QuadDifferential> quadratic;
  RegularityReport regularity;
  double margin_tol = 0.0;
  double scale = 0.0;     // d-bar
  double a_bound = 0.0;   // bound on base offsets
  std::string binding;    // "d_bar" or "a": which of the two limited the coverage ladder
  std::optional<RemainderSlope> remainder;
  std::vector<CoverageLevel> coverage;
  double coverage_fraction = 0.0;
  InjectivityAudit audit;
  CertificateStatus status = CertificateStatus::refused;
  int failed_stage = 0;  // 0 when not refused
  std::string reason;

  bool usable() const { return status != CertificateStatus::refused && quadratic.has_value(); }
  double c_hat() const { return regularity.c_hat; }
  /// Largest target offset |y - f(x)| inside the checked coverage: c_hat d^2 / 2 at the top level.
  double covered_radius() const;
};

}  // namespace magnify
