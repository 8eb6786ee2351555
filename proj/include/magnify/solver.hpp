#pragma once

// Local inversion near a point.
//
// Regular case: residual stepping xi <- xi + L^-1 (w - f(xi)) from xi = x.
// Singular quadratic case: Newton on Q(v) = w using dQ_v = 2 H_v, with a
// quadratic predictor and a remainder corrector for the full map.

#include "magnify/certificate.hpp"
#include "magnify/symalg.hpp"
#include "magnify/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace magnify {

enum class SolveStatus { converged, diverged, max_iter, failed };

const char* to_string(SolveStatus status);

struct TraceEntry {
  Vector point;
  double residual = 0.0;
};

struct InverseSolution {
  std::vector<Vector> preimages;
  std::vector<double> residuals;  // from an independent final evaluation
  std::vector<int> iterations;
  std::vector<std::vector<TraceEntry>> traces;  // one per preimage, or the failed attempt
  SolveStatus status = SolveStatus::failed;
  double best_residual = 0.0;
  std::string message;
  /// Degenerate solves: |f(x + v0) - y| at the quadratic predictor.
  std::optional<double> predictor_residual;
  /// Degenerate solves: whether |y - f(x)| lay inside the certificate's checked range.
  std::optional<bool> within_certified_range;

  bool converged() const { return status == SolveStatus::converged; }
};

struct RegularSolveOptions {
  double tol = 1e-12;
  int max_iter = 100;
};

/// Throws std::invalid_argument if L is singular.
InverseSolution invert_regular(const Evaluator& f, const Matrix& linear, const Vector& x, const Vector& target,
                               const RegularSolveOptions& options = {});

/// The local inverse y -> xi as an evaluator; throws std::runtime_error when
/// the solve does not converge.
Evaluator regular_inverse_map(const Evaluator& f, const Matrix& linear, const Vector& x,
                              const RegularSolveOptions& options = {});

struct QuadraticSolveOptions {
  double tol = 1e-12;
  int max_iter = 100;
  int multistart = 8;
  std::uint64_t seed = 42;
};

/// Solves Q(v) = w. Starts sit on the sphere of radius sqrt(|w| / c_hat). On
/// success the preimages are v* and -v*, the first being the one whose first
/// nonzero entry is positive. w = 0 returns the single preimage 0.
InverseSolution invert_quadratic(const QuadDifferential& a, const Vector& w, double c_hat,
                                 const QuadraticSolveOptions& options = {});

struct DegenerateSolveOptions {
  double tol = 1e-12;
  int max_iter = 100;
  int multistart = 8;
  std::uint64_t seed = 42;
};

/// Predictor-corrector inversion of f near x where df_x = 0: solve Q(v) = y - f(x),
/// then iterate v <- v - (2 H_v)^-1 (f(x + v) - y) from each of +-v.
/// Does not check any certificate; see invert_degenerate.
InverseSolution solve_degenerate(const Evaluator& f, const Vector& x, const QuadDifferential& a, double c_hat,
                                 const Vector& target, const DegenerateSolveOptions& options = {});

/// solve_degenerate gated on a usable quadratic certificate at x. Throws
/// std::invalid_argument if the certificate is missing, refused, or for another point.
/// Targets outside the checked range are still attempted and flagged.
InverseSolution invert_degenerate(const Evaluator& f, const Vector& x, const QuadraticCertificate& certificate,
                                  const Vector& target, const DegenerateSolveOptions& options = {});

/// Ball of targets claimed covered: radius d / 2 in the linear case, c d^2 / 2 in the quadratic case.
struct CoverageRegion {
  Vector center;
  bool quadratic = false;
  double c = 1.0;
  double d = 1.0;

  double radius() const { return quadratic ? 0.5 * c * d * d : 0.5 * d; }
};

using TargetSolver = std::function<InverseSolution(const Vector&)>;

/// Runs the solver on N targets uniform in the region. A target counts as hit
/// when the solver converged and every reported preimage residual is <= tol.
CoverageResult coverage_check(const TargetSolver& solve, const CoverageRegion& region, int targets, std::uint64_t seed,
                              double tol);

}  // namespace magnify
