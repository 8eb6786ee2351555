#include "magnify/magnification.hpp"

#include "magnify/parallel.hpp"
#include "magnify/sampling.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace magnify {

namespace {

struct MonomialIndex {
  std::vector<int> vars;  // nondecreasing variable indices
  double multiplicity;    // number of distinct orderings
};

std::vector<MonomialIndex> symmetric_monomials(int n, int degree) {
  std::vector<MonomialIndex> out;
  if (degree == 1) {
    for (int a = 0; a < n; ++a) out.push_back({{a}, 1.0});
  } else if (degree == 2) {
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) out.push_back({{a, b}, a == b ? 1.0 : 2.0});
    }
  } else {
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        for (int c = b; c < n; ++c) {
          const double mult = (a == b && b == c) ? 1.0 : (a == b || b == c) ? 3.0 : 6.0;
          out.push_back({{a, b, c}, mult});
        }
      }
    }
  }
  return out;
}

int model_columns(int n, int order) {
  int cols = 0;
  for (int d = 1; d <= order; ++d) cols += static_cast<int>(symmetric_monomials(n, d).size());
  return cols;
}

struct Sample {
  double delta;
  Vector step;      // (x + delta u) - x, exactly as evaluated
  Vector response;  // f(x + step) - f(x)
};

std::vector<Sample> gather(const Evaluator& f, const Vector& x, const Vector& fx, const std::vector<double>& scales,
                           std::span<const Vector> directions) {
  std::vector<Sample> samples(scales.size() * directions.size());
  parallel_for(samples.size(), [&](std::size_t idx) {
    const double delta = scales[idx / directions.size()];
    const Vector point = x + delta * directions[idx % directions.size()];
    const Vector step = point - x;
    samples[idx] = {delta, step, f(point) - fx};
  });
  return samples;
}

}  // namespace

DilationFrame::DilationFrame(Vector base, double scale) : base_(std::move(base)), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("DilationFrame: scale must be positive");
  if (!base_.allFinite()) throw std::invalid_argument("DilationFrame: base point must be finite");
}

DeltaLadder::DeltaLadder(double delta0, double ratio, int levels) : delta0_(delta0), ratio_(ratio), levels_(levels) {
  if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw std::invalid_argument("DeltaLadder: delta0 must be positive");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("DeltaLadder: ratio must lie in (0, 1)");
  if (levels < 3) throw std::invalid_argument("DeltaLadder: need at least 3 levels");
}

std::vector<double> DeltaLadder::scales() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(levels_) + 1);
  for (int j = 0; j <= levels_; ++j) out.push_back(delta0_ * std::pow(ratio_, j));
  return out;
}

Vector dilated_eval(const Evaluator& f, const DilationFrame& frame, const Vector& v) {
  require_dimension(v.size(), frame.base().size(), "dilated_eval");
  return (f(frame.unflat(v)) - f(frame.base())) / frame.scale();
}

Evaluator dilated_map(const Evaluator& f, const DilationFrame& frame) {
  const Vector fx = f(frame.base());
  return [f, frame, fx](const Vector& v) -> Vector {
    require_dimension(v.size(), frame.base().size(), "dilated map");
    return (f(frame.unflat(v)) - fx) / frame.scale();
  };
}

Vector nested_dilated_eval(const Evaluator& f, const Vector& x, double delta, const Vector& xi, const Vector& rho) {
  const Evaluator outer = dilated_map(f, DilationFrame(x, delta));
  return dilated_eval(outer, DilationFrame(xi, delta), rho);
}

Evaluator nested_dilated_map(const Evaluator& f, const Vector& x, double delta, const Vector& xi) {
  return dilated_map(dilated_map(f, DilationFrame(x, delta)), DilationFrame(xi, delta));
}

Expansion fit_expansion(const Evaluator& f, const Vector& x, int order, const FitOptions& options) {
  const auto directions = antipodal_sphere_points(static_cast<int>(x.size()), options.directions, options.seed);
  return fit_expansion(f, x, order, options.ladder, directions);
}

Expansion fit_expansion(const Evaluator& f, const Vector& x, int order, const DeltaLadder& ladder,
                        std::span<const Vector> directions) {
  validate_order(order);
  const int n = static_cast<int>(x.size());
  for (const auto& u : directions) require_dimension(u.size(), n, "fit_expansion direction");

  const Vector fx = f(x);
  require_dimension(fx.size(), n, "fit_expansion value");
  const std::vector<double> scales = ladder.scales();
  const std::vector<Sample> samples = gather(f, x, fx, scales, directions);
  const auto rows = static_cast<Eigen::Index>(samples.size());

  // Responses are dilated values (f(x + delta u) - f(x)) / delta; the column
  // for a degree-d monomial carries delta^(d-1).
  const auto solve = [&](int model_order) -> std::optional<Matrix> {
    const int cols = model_columns(n, model_order);
    if (rows < cols) return std::nullopt;
    Matrix design(rows, cols);
    Matrix rhs(rows, n);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Sample& s = samples[static_cast<std::size_t>(r)];
      const Vector u = s.step / s.delta;
      Eigen::Index c = 0;
      for (int d = 1; d <= model_order; ++d) {
        const double weight = std::pow(s.delta, d - 1);
        for (const auto& m : symmetric_monomials(n, d)) {
          double value = m.multiplicity * weight;
          for (int var : m.vars) value *= u[var];
          design(r, c++) = value;
        }
      }
      rhs.row(r) = (s.response / s.delta).transpose();
    }
    const Vector column_scale = design.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (column_scale[c] == 0.0) return std::nullopt;
      design.col(c) /= column_scale[c];
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) return std::nullopt;
    Matrix coeffs = qr.solve(rhs);
    for (Eigen::Index c = 0; c < cols; ++c) coeffs.row(c) /= column_scale[c];
    return coeffs;
  };

  int model_order = 3;
  std::optional<Matrix> coeffs = solve(3);
  if (!coeffs && order < 3) {
    model_order = order;
    coeffs = solve(order);
  }
  if (!coeffs) {
    throw RankDeficientError("fit_expansion: design is rank deficient (" + std::to_string(directions.size()) +
                             " directions for a degree-" + std::to_string(model_order) + " model in dimension " +
                             std::to_string(n) + ")");
  }

  Expansion e;
  e.base_point = x;
  e.order = order;
  e.value = fx;
  e.linear.resize(n, n);
  Eigen::Index c = 0;
  for (const auto& m : symmetric_monomials(n, 1)) {
    e.linear.col(m.vars[0]) = coeffs->row(c++).transpose();
  }
  if (model_order >= 2) {
    std::vector<Matrix> forms(static_cast<std::size_t>(n), Matrix::Zero(n, n));
    for (const auto& m : symmetric_monomials(n, 2)) {
      for (int i = 0; i < n; ++i) {
        const double value = (*coeffs)(c, i);
        forms[static_cast<std::size_t>(i)](m.vars[0], m.vars[1]) = value;
        forms[static_cast<std::size_t>(i)](m.vars[1], m.vars[0]) = value;
      }
      ++c;
    }
    if (order >= 2) e.quadratic = QuadDifferential(std::move(forms));
  }
  if (model_order >= 3 && order >= 3) {
    CubicForm cubic(n);
    for (const auto& m : symmetric_monomials(n, 3)) {
      for (int i = 0; i < n; ++i) cubic.set_symmetric(i, m.vars[0], m.vars[1], m.vars[2], (*coeffs)(c, i));
      ++c;
    }
    e.cubic = std::move(cubic);
  }
  e.remainder_diagnostics = remainder_profile(f, e, ladder, directions);
  return e;
}

std::vector<std::pair<double, double>> remainder_profile(const Evaluator& f, const Expansion& expansion,
                                                         const DeltaLadder& ladder, std::span<const Vector> directions) {
  if (directions.empty()) throw std::invalid_argument("remainder_profile: no directions");
  const Vector& x = expansion.base_point;
  const std::vector<double> scales = ladder.scales();
  std::vector<double> residuals(scales.size() * directions.size());
  parallel_for(residuals.size(), [&](std::size_t idx) {
    const double delta = scales[idx / directions.size()];
    const Vector point = x + delta * directions[idx % directions.size()];
    residuals[idx] = (f(point) - expansion.predict(point - x)).norm();
  });
  std::vector<std::pair<double, double>> profile;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    double worst = 0.0;
    for (std::size_t d = 0; d < directions.size(); ++d) worst = std::max(worst, residuals[s * directions.size() + d]);
    profile.emplace_back(scales[s], worst);
  }
  return profile;
}

double log_log_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("log_log_slope: need at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [s, v] : points) {
    mx += std::log(s);
    my += std::log(v);
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [s, v] : points) {
    const double dx = std::log(s) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  return sxy / sxx;
}

RemainderSlope remainder_slope(const Evaluator& f, const Expansion& expansion, const DeltaLadder& ladder,
                               std::span<const Vector> directions) {
  RemainderSlope result;
  result.profile = remainder_profile(f, expansion, ladder, directions);
  result.noise_floor = 1e3 * std::numeric_limits<double>::epsilon() * (expansion.value.norm() + 1.0);
  std::vector<std::pair<double, double>> usable;
  for (const auto& p : result.profile) {
    if (p.second > result.noise_floor) usable.push_back(p);
  }
  result.points_used = static_cast<int>(usable.size());
  if (usable.size() < 3) {
    result.saturated = true;
    return result;
  }
  result.slope = log_log_slope(usable);
  return result;
}

std::vector<LinearitySample> linearity_samples(int n, int count, double bound, std::uint64_t seed) {
  if (!(bound > 0.0)) throw std::invalid_argument("linearity_samples: bound must be positive");
  SplitMix64 rng(seed);
  const Vector origin = Vector::Zero(n);
  const auto vs = ball_points(origin, bound, count, rng.next());
  const auto ws = ball_points(origin, bound, count, rng.next());
  std::vector<LinearitySample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double alpha = rng.uniform(-bound, bound);
    const double beta = rng.uniform(-bound, bound);
    out.push_back({alpha, beta, vs[static_cast<std::size_t>(i)], ws[static_cast<std::size_t>(i)]});
  }
  return out;
}

namespace {

bool within(const LinearitySample& s, double bound) {
  return std::abs(s.alpha) <= bound && std::abs(s.beta) <= bound && s.v.norm() <= bound && s.w.norm() <= bound;
}

}  // namespace

double almost_linearity_defect(const Evaluator& g, std::span<const LinearitySample> samples, double bound) {
  if (!std::isfinite(bound)) throw std::invalid_argument("almost_linearity_defect: bound must be finite");
  double defect = 0.0;
  bool any = false;
  for (const auto& s : samples) {
    if (!within(s, bound)) continue;
    any = true;
    const Vector lhs = g(s.alpha * s.v + s.beta * s.w);
    defect = std::max(defect, (lhs - s.alpha * g(s.v) - s.beta * g(s.w)).norm());
  }
  if (!any) throw std::invalid_argument("almost_linearity_defect: no sample within the bound");
  return defect;
}

double linearity_scale(const Evaluator& g, std::span<const LinearitySample> samples, double bound) {
  double scale = 0.0;
  for (const auto& s : samples) {
    if (!within(s, bound)) continue;
    scale = std::max({scale, g(s.v).norm(), g(s.w).norm(), g(s.alpha * s.v + s.beta * s.w).norm()});
  }
  return scale;
}

}  // namespace magnify
