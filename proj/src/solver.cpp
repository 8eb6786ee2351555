#include "magnify/solver.hpp"

#include "magnify/parallel.hpp"
#include "magnify/sampling.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace magnify {

namespace {

constexpr int kIncreaseLimit = 5;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Newton step for Q(v) = w: solve 2 H_v s = rhs. Empty when H_v is numerically singular.
std::optional<Vector> pencil_step(const QuadDifferential& a, const Vector& v, const Vector& rhs) {
  const Matrix h = pencil_matrix(a, v);
  Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  if (!(s[s.size() - 1] > 1e-13 * s[0])) return std::nullopt;
  return Vector(0.5 * svd.solve(rhs));
}

bool first_nonzero_positive(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) return v[i] > 0.0;
  }
  return true;
}

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::diverged:
      return "diverged";
    case SolveStatus::max_iter:
      return "max_iter";
    case SolveStatus::failed:
      return "failed";
  }
  return "unknown";
}

InverseSolution invert_regular(const Evaluator& f, const Matrix& linear, const Vector& x, const Vector& target,
                               const RegularSolveOptions& options) {
  const auto n = x.size();
  require_dimension(linear.rows(), n, "invert_regular");
  require_dimension(linear.cols(), n, "invert_regular");
  require_dimension(target.size(), n, "invert_regular target");
  const Eigen::FullPivLU<Matrix> lu(linear);
  if (!lu.isInvertible()) throw std::invalid_argument("invert_regular: linear part is singular");

  InverseSolution sol;
  std::vector<TraceEntry> trace;
  Vector xi = x;
  double previous = std::numeric_limits<double>::infinity();
  int increases = 0;
  int iter = 0;
  sol.status = SolveStatus::max_iter;
  for (;; ++iter) {
    const Vector residual = target - f(xi);
    const double norm = residual.norm();
    trace.push_back({xi, norm});
    if (!std::isfinite(norm)) {
      sol.status = SolveStatus::diverged;
      break;
    }
    if (norm <= options.tol) {
      sol.status = SolveStatus::converged;
      break;
    }
    increases = norm > previous ? increases + 1 : 0;
    if (increases >= kIncreaseLimit) {
      sol.status = SolveStatus::diverged;
      break;
    }
    if (iter >= options.max_iter) break;
    previous = norm;
    xi += lu.solve(residual);
  }

  sol.best_residual = std::numeric_limits<double>::infinity();
  for (const auto& t : trace) sol.best_residual = std::min(sol.best_residual, t.residual);
  if (sol.status == SolveStatus::converged) {
    const double check = (f(xi) - target).norm();
    if (check <= options.tol) {
      sol.preimages.push_back(xi);
      sol.residuals.push_back(check);
      sol.iterations.push_back(iter);
    } else {
      sol.status = SolveStatus::failed;
      sol.message = "final residual check failed";
    }
  } else {
    sol.message = sol.status == SolveStatus::diverged ? "residual grew for 5 consecutive steps" : "iteration limit";
  }
  sol.traces.push_back(std::move(trace));
  return sol;
}

Evaluator regular_inverse_map(const Evaluator& f, const Matrix& linear, const Vector& x,
                              const RegularSolveOptions& options) {
  return [f, linear, x, options](const Vector& target) -> Vector {
    InverseSolution sol = invert_regular(f, linear, x, target, options);
    if (!sol.converged()) throw std::runtime_error("regular inverse: " + sol.message);
    return sol.preimages.front();
  };
}

InverseSolution invert_quadratic(const QuadDifferential& a, const Vector& w, double c_hat,
                                 const QuadraticSolveOptions& options) {
  const int n = a.dimension();
  require_dimension(w.size(), n, "invert_quadratic");
  InverseSolution sol;
  const double wnorm = w.norm();
  if (wnorm == 0.0) {
    sol.status = SolveStatus::converged;
    sol.preimages.push_back(Vector::Zero(n));
    sol.residuals.push_back(0.0);
    sol.iterations.push_back(0);
    sol.traces.push_back({{Vector::Zero(n), 0.0}});
    return sol;
  }
  if (!(c_hat > 0.0)) throw std::invalid_argument("invert_quadratic: c_hat must be positive");
  if (options.multistart < 1) throw std::invalid_argument("invert_quadratic: need at least one start");

  const double r0 = std::sqrt(wnorm / c_hat);
  const auto starts = sphere_points(n, options.multistart, options.seed);
  sol.best_residual = std::numeric_limits<double>::infinity();
  SolveStatus last = SolveStatus::failed;
  std::vector<TraceEntry> best_trace;

  for (const Vector& start : starts) {
    Vector v = r0 * start;
    std::vector<TraceEntry> trace;
    double previous = std::numeric_limits<double>::infinity();
    int increases = 0;
    SolveStatus status = SolveStatus::max_iter;
    int iter = 0;
    for (;; ++iter) {
      const Vector residual = w - quadratic(a, v);
      const double norm = residual.norm();
      trace.push_back({v, norm});
      if (!std::isfinite(norm)) {
        status = SolveStatus::diverged;
        break;
      }
      sol.best_residual = std::min(sol.best_residual, norm);
      if (norm <= options.tol) {
        status = SolveStatus::converged;
        break;
      }
      increases = norm > previous ? increases + 1 : 0;
      if (increases >= kIncreaseLimit || v.norm() > 10.0 * r0) {
        status = SolveStatus::diverged;
        break;
      }
      if (iter >= options.max_iter) break;
      previous = norm;
      const auto step = pencil_step(a, v, residual);
      if (!step) {
        status = SolveStatus::failed;
        break;
      }
      v += *step;
    }

    if (status == SolveStatus::converged) {
      if (!first_nonzero_positive(v)) v = -v;
      for (const Vector& p : {Vector(v), Vector(-v)}) {
        const double check = (quadratic(a, p) - w).norm();
        if (check > options.tol) continue;
        sol.preimages.push_back(p);
        sol.residuals.push_back(check);
        sol.iterations.push_back(iter);
        sol.traces.push_back(trace);
        if (v.norm() <= 10.0 * options.tol) break;
      }
      if (!sol.preimages.empty()) {
        sol.status = SolveStatus::converged;
        return sol;
      }
      status = SolveStatus::failed;
    }
    last = status;
    if (best_trace.empty() || trace.back().residual < best_trace.back().residual) best_trace = std::move(trace);
  }

  sol.status = last;
  sol.message = "all " + std::to_string(starts.size()) + " starts failed; best residual " +
                std::to_string(sol.best_residual);
  sol.traces.push_back(std::move(best_trace));
  return sol;
}

InverseSolution solve_degenerate(const Evaluator& f, const Vector& x, const QuadDifferential& a, double c_hat,
                                 const Vector& target, const DegenerateSolveOptions& options) {
  const int n = a.dimension();
  require_dimension(x.size(), n, "solve_degenerate point");
  require_dimension(target.size(), n, "solve_degenerate target");
  const Vector fx = f(x);
  const Vector r = target - fx;

  InverseSolution sol;
  if (r.norm() == 0.0) {
    sol.status = SolveStatus::converged;
    sol.preimages.push_back(x);
    sol.residuals.push_back(0.0);
    sol.iterations.push_back(0);
    sol.traces.push_back({{x, 0.0}});
    sol.predictor_residual = 0.0;
    return sol;
  }

  QuadraticSolveOptions predictor_options;
  predictor_options.tol = std::max(1e-2 * options.tol, 16.0 * kEps * r.norm());
  predictor_options.max_iter = options.max_iter;
  predictor_options.multistart = options.multistart;
  predictor_options.seed = options.seed;
  const InverseSolution predictor = invert_quadratic(a, r, c_hat, predictor_options);
  if (!predictor.converged()) {
    sol.status = SolveStatus::failed;
    sol.best_residual = predictor.best_residual;
    sol.message = "quadratic predictor failed: " + predictor.message;
    sol.traces = predictor.traces;
    return sol;
  }

  sol.best_residual = std::numeric_limits<double>::infinity();
  SolveStatus last = SolveStatus::failed;
  double worst_ratio = 0.0;
  for (const Vector& v0 : predictor.preimages) {
    Vector v = v0;
    std::vector<TraceEntry> trace;
    double previous = std::numeric_limits<double>::infinity();
    int stalls = 0;
    SolveStatus status = SolveStatus::max_iter;
    int iter = 0;
    for (;; ++iter) {
      const Vector residual = f(x + v) - target;
      const double norm = residual.norm();
      trace.push_back({x + v, norm});
      if (iter == 0 && !sol.predictor_residual) sol.predictor_residual = norm;
      if (!std::isfinite(norm)) {
        status = SolveStatus::diverged;
        break;
      }
      sol.best_residual = std::min(sol.best_residual, norm);
      if (norm <= options.tol) {
        status = SolveStatus::converged;
        break;
      }
      stalls = norm >= previous ? stalls + 1 : 0;
      if (stalls >= kIncreaseLimit) {
        status = SolveStatus::diverged;
        break;
      }
      if (iter >= options.max_iter) break;
      previous = norm;
      const auto step = pencil_step(a, v, residual);
      if (!step) {
        status = SolveStatus::failed;
        break;
      }
      v -= *step;
    }

    if (status == SolveStatus::converged) {
      const Vector point = x + v;
      const double check = (f(point) - target).norm();
      const bool duplicate = std::any_of(sol.preimages.begin(), sol.preimages.end(), [&](const Vector& p) {
        return (p - point).norm() < 10.0 * options.tol;
      });
      if (check <= options.tol && !duplicate) {
        sol.preimages.push_back(point);
        sol.residuals.push_back(check);
        sol.iterations.push_back(iter);
        sol.traces.push_back(std::move(trace));
      }
      continue;
    }
    last = status;
    const Vector q0 = quadratic(a, v0);
    const double ratio = (f(x + v0) - fx - q0).norm() / std::max(q0.norm(), std::numeric_limits<double>::min());
    worst_ratio = std::max(worst_ratio, ratio);
    if (sol.preimages.empty()) sol.traces.push_back(std::move(trace));
  }

  if (!sol.preimages.empty()) {
    sol.status = SolveStatus::converged;
    // Keep only traces that belong to preimages.
    if (sol.traces.size() > sol.preimages.size()) {
      sol.traces.erase(sol.traces.begin(),
                       sol.traces.begin() + static_cast<std::ptrdiff_t>(sol.traces.size() - sol.preimages.size()));
    }
    return sol;
  }
  sol.status = last;
  sol.message = "corrector stagnated; remainder/quadratic ratio at predictor " + std::to_string(worst_ratio);
  return sol;
}

InverseSolution invert_degenerate(const Evaluator& f, const Vector& x, const QuadraticCertificate& certificate,
                                  const Vector& target, const DegenerateSolveOptions& options) {
  if (!certificate.usable()) {
    throw std::invalid_argument("invert_degenerate: quadratic certificate is missing or refused");
  }
  require_dimension(x.size(), certificate.base_point.size(), "invert_degenerate");
  if ((x - certificate.base_point).norm() > 1e-12 * (1.0 + x.norm())) {
    throw std::invalid_argument("invert_degenerate: certificate was issued for a different point");
  }
  InverseSolution sol = solve_degenerate(f, x, *certificate.quadratic, certificate.c_hat(), target, options);
  sol.within_certified_range = (target - certificate.value).norm() <= certificate.covered_radius();
  return sol;
}

CoverageResult coverage_check(const TargetSolver& solve, const CoverageRegion& region, int targets, std::uint64_t seed,
                              double tol) {
  if (targets < 100) throw std::invalid_argument("coverage_check: need at least 100 targets");
  CoverageResult result;
  result.targets = targets;
  result.radius = region.radius();
  const auto points = ball_points(region.center, result.radius, targets, seed);
  std::vector<InverseSolution> solutions(points.size());
  parallel_for(points.size(), [&](std::size_t i) { solutions[i] = solve(points[i]); });

  for (std::size_t i = 0; i < points.size(); ++i) {
    const InverseSolution& s = solutions[i];
    const bool hit = s.converged() && !s.preimages.empty() &&
                     std::all_of(s.residuals.begin(), s.residuals.end(), [&](double r) { return r <= tol; });
    if (hit) {
      ++result.successes;
      for (double r : s.residuals) result.max_residual = std::max(result.max_residual, r);
    } else {
      result.failures.push_back({points[i], s.best_residual});
    }
  }
  result.fraction = static_cast<double>(result.successes) / static_cast<double>(targets);
  return result;
}

}  // namespace magnify
