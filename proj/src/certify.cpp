#include "magnify/certify.hpp"

#include "magnify/parallel.hpp"
#include "magnify/sampling.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace magnify {

namespace {

std::string vector_text(const Vector& v) {
  std::ostringstream out;
  out.precision(6);
  out << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ')';
  return out.str();
}

std::string number_text(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

bool lexicographically_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Damped Newton for f(z) = goal from z0 with a central-difference Jacobian.
Vector solve_for_image(const Evaluator& f, const Vector& goal, Vector z, double h, int max_iter) {
  const auto n = z.size();
  double current = (f(z) - goal).norm();
  for (int iter = 0; iter < max_iter && current > 0.0; ++iter) {
    Matrix jac(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector e = Vector::Zero(n);
      e[j] = h;
      jac.col(j) = (f(z + e) - f(z - e)) / (2.0 * h);
    }
    const Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible()) break;
    const Vector step = lu.solve(goal - f(z));
    double t = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      const Vector trial = z + t * step;
      const double value = (f(trial) - goal).norm();
      if (value < current) {
        z = trial;
        current = value;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return z;
}

}  // namespace

const char* to_string(CertificateStatus status) {
  switch (status) {
    case CertificateStatus::certified:
      return "certified";
    case CertificateStatus::certified_up_to_antipodes:
      return "certified_up_to_antipodes";
    case CertificateStatus::refused:
      return "refused";
  }
  return "unknown";
}

double QuadraticCertificate::covered_radius() const {
  if (coverage.empty()) return 0.0;
  return coverage.front().target_radius;
}

std::vector<double> default_modulus_radii(double r_max, int count) {
  std::vector<double> radii;
  for (int j = 0; j < count; ++j) radii.push_back(r_max * std::exp2(-j / 8.0));
  return radii;
}

double sampled_modulus(const Evaluator& f, const Vector& x, const Matrix& linear, double radius, int pairs,
                       std::uint64_t seed) {
  if (pairs < 100) throw std::invalid_argument("uniform_diff_modulus: need at least 100 pairs per radius");
  if (!(radius > 0.0)) throw std::invalid_argument("uniform_diff_modulus: radius must be positive");
  SplitMix64 rng(scale_seed(seed, radius));
  std::vector<std::pair<Vector, Vector>> samples;
  samples.reserve(static_cast<std::size_t>(pairs));
  while (static_cast<int>(samples.size()) < pairs) {
    Vector y = ball_point(rng, x, radius);
    Vector z = ball_point(rng, x, radius);
    if ((y - z).norm() < 1e-12 * radius) continue;
    samples.emplace_back(std::move(y), std::move(z));
  }
  std::vector<double> ratios(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& [y, z] = samples[i];
    const Vector d = y - z;
    ratios[i] = (f(y) - f(z) - linear * d).norm() / d.norm();
  });
  return *std::max_element(ratios.begin(), ratios.end());
}

std::vector<ModulusEntry> uniform_diff_modulus(const Evaluator& f, const Vector& x, const Matrix& linear,
                                               std::span<const double> radii, int pairs_per_radius,
                                               std::uint64_t seed) {
  if (radii.empty()) throw std::invalid_argument("uniform_diff_modulus: no radii");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] < radii[i - 1])) throw std::invalid_argument("uniform_diff_modulus: radii must be descending");
  }
  std::vector<ModulusEntry> table;
  for (double s : radii) {
    table.push_back({s, 0.0, sampled_modulus(f, x, linear, s, pairs_per_radius, seed), pairs_per_radius});
  }
  double running = 0.0;
  for (auto it = table.rbegin(); it != table.rend(); ++it) {
    running = std::max(running, it->raw);
    it->omega = running;
  }
  return table;
}

FirstOrderCertificate certify_first_order(const Evaluator& f, const Expansion& expansion,
                                          const FirstOrderOptions& options) {
  FirstOrderCertificate cert;
  cert.base_point = expansion.base_point;
  cert.linear = expansion.linear;
  cert.kappa = options.kappa;
  const Vector& x = expansion.base_point;

  Eigen::JacobiSVD<Matrix> svd(cert.linear);
  const Vector& sigma = svd.singularValues();
  cert.sigma_min = sigma[sigma.size() - 1];
  if (!(cert.sigma_min > options.singular_tol)) {
    cert.reason = "linear part is singular (sigma_min = " + number_text(cert.sigma_min) + ")";
    return cert;
  }
  cert.inverse_norm = 1.0 / cert.sigma_min;

  cert.modulus = uniform_diff_modulus(f, x, cert.linear, options.radii, options.pairs_per_radius, options.seed);
  for (const auto& entry : cert.modulus) {
    if (entry.omega * cert.inverse_norm <= options.kappa) {
      cert.radius = entry.radius;
      break;
    }
  }
  if (!cert.radius) {
    cert.reason = "no tabulated radius satisfies omega(s) |L^-1| <= " + number_text(options.kappa);
    return cert;
  }
  const double d = *cert.radius;
  cert.covering_radius = 0.5 * d;

  const Vector fx = f(x);
  const Matrix linear = cert.linear;
  const RegularSolveOptions solve_options = options.solve;
  const TargetSolver solve = [&](const Vector& t) {
    InverseSolution s = invert_regular(f, linear, x, fx + linear * t, solve_options);
    if (s.converged() && (s.preimages.front() - x).norm() > d) {
      s.status = SolveStatus::failed;
      s.message = "preimage outside B_d";
    }
    return s;
  };
  CoverageRegion region{Vector::Zero(x.size()), false, 1.0, d};
  cert.coverage = coverage_check(solve, region, options.coverage_targets, scale_seed(options.seed, d),
                                 options.solve.tol);
  if (cert.coverage.fraction < 1.0) {
    cert.reason = "coverage spot-check hit " + std::to_string(cert.coverage.successes) + " of " +
                  std::to_string(cert.coverage.targets) + " targets";
    return cert;
  }
  cert.status = CertificateStatus::certified;
  cert.reason = "empirically certified: d = " + number_text(d) + " from " +
                std::to_string(options.pairs_per_radius) + " pairs per radius; " +
                std::to_string(cert.coverage.targets) + " coverage targets solved";
  return cert;
}

InjectivityAudit falsify_injectivity(const Evaluator& f, const Vector& x, const FalsifyOptions& options) {
  if (options.samples < 1000) throw std::invalid_argument("falsify_injectivity: need at least 1000 samples");
  if (!(options.radius > 0.0)) throw std::invalid_argument("falsify_injectivity: radius must be positive");
  const auto n = static_cast<int>(x.size());
  const Vector fx = f(x);
  const double scale = 1.0 + fx.norm();
  const double min_sep = 1e-3 * options.radius;

  InjectivityAudit audit;
  std::vector<CollisionPair> found;
  const auto consider = [&](const Vector& y, const Vector& z) {
    const double sep = (y - z).norm();
    if (sep < min_sep || (y - x).norm() > options.radius || (z - x).norm() > options.radius) return false;
    const double gap = (f(y) - f(z)).norm();
    if (gap > options.collision_tol * sep * sep * scale) return false;
    found.push_back({y, z, gap, sep, (y + z - 2.0 * x).norm()});
    return true;
  };

  for (const Vector& u : sphere_points(n, options.antipodal_directions, options.seed)) {
    for (double t : {0.9, 0.45, 0.225}) {
      consider(x + t * options.radius * u, x - t * options.radius * u);
      ++audit.antipodal_probes;
    }
  }

  struct Candidate {
    double ratio;
    Vector y;
    Vector z;
  };
  std::vector<Candidate> candidates;
  SplitMix64 rng(options.seed ^ 0xA5A5A5A5ULL);
  for (int i = 0; i < options.samples; ++i) {
    Vector y = ball_point(rng, x, options.radius);
    Vector z = ball_point(rng, x, options.radius);
    const double sep = (y - z).norm();
    if (sep < min_sep) continue;
    ++audit.pairs_examined;
    if (consider(y, z)) continue;
    const double ratio = (f(y) - f(z)).norm() / (sep * sep * scale);
    candidates.push_back({ratio, std::move(y), std::move(z)});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.ratio < b.ratio; });
  const std::size_t refine = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(options.refine_candidates));
  for (std::size_t i = 0; i < refine; ++i) {
    const Vector& y = candidates[i].y;
    const Vector z = solve_for_image(f, f(y), candidates[i].z, 1e-6 * options.radius, 50);
    consider(y, z);
  }

  std::stable_sort(found.begin(), found.end(), [](const CollisionPair& a, const CollisionPair& b) {
    if (a.image_gap != b.image_gap) return a.image_gap < b.image_gap;
    if (a.antipodal_offset != b.antipodal_offset) return a.antipodal_offset < b.antipodal_offset;
    return lexicographically_less(a.first, b.first);
  });
  if (found.size() > static_cast<std::size_t>(options.max_witnesses)) {
    found.resize(static_cast<std::size_t>(options.max_witnesses));
  }
  audit.collisions = std::move(found);
  audit.clean = audit.collisions.empty();
  return audit;
}

QuadraticCertificate certify_quadratic(const Evaluator& f, const Expansion& expansion,
                                       const QuadraticOptions& options) {
  if (expansion.order < 2 || !expansion.quadratic) {
    throw std::invalid_argument("certify_quadratic: expansion of order >= 2 required");
  }
  QuadraticCertificate cert;
  cert.base_point = expansion.base_point;
  cert.value = expansion.value;
  cert.quadratic = expansion.quadratic;
  cert.scale = options.scale;
  cert.a_bound = options.a_bound;
  cert.margin_tol = options.margin_tol;
  const Vector& x = expansion.base_point;
  const QuadDifferential& a = *expansion.quadratic;
  const int n = a.dimension();

  const auto refuse = [&](int stage, std::string reason) {
    cert.status = CertificateStatus::refused;
    cert.failed_stage = stage;
    cert.reason = std::move(reason);
    return cert;
  };

  // (1) vanishing differential
  cert.linear_norm = spectral_norm(expansion.linear);
  cert.linear_tol = options.linear_tol.value_or(1e-8 * (1.0 + a.norm()));
  if (cert.linear_norm > cert.linear_tol) {
    return refuse(1, "differential does not vanish: |L| = " + number_text(cert.linear_norm) + " > " +
                         number_text(cert.linear_tol));
  }

  // (2) transversality margin
  cert.regularity = regularity_margin(a, options.regularity);
  if (!(cert.regularity.margin >= options.margin_tol)) {
    return refuse(2, "transversality margin " + number_text(cert.regularity.margin) + " below " +
                         number_text(options.margin_tol) + " at witness " + vector_text(cert.regularity.witness));
  }

  // (3) o(delta^2) remainder
  const auto directions = antipodal_sphere_points(n, options.directions, options.seed);
  cert.remainder = remainder_slope(f, expansion.truncated(2), options.ladder, directions);
  if (!cert.remainder->saturated && !(*cert.remainder->slope > 2.0 + options.slope_margin)) {
    return refuse(3, "remainder slope " + number_text(*cert.remainder->slope) + " is not above " +
                         number_text(2.0 + options.slope_margin));
  }

  // (4) coverage spot-checks on a radius ladder
  const double top = std::min(options.scale, options.a_bound);
  cert.binding = options.a_bound < options.scale ? "a" : "d_bar";
  const double c_hat = cert.regularity.c_hat;
  int hits = 0;
  int total = 0;
  for (int level = 0; level < options.coverage_levels; ++level) {
    const double d = top * std::pow(options.coverage_ratio, level);
    const TargetSolver solve = [&](const Vector& target) {
      InverseSolution s = solve_degenerate(f, x, a, c_hat, target, options.solve);
      if (s.converged()) {
        for (const auto& p : s.preimages) {
          if ((p - x).norm() > d) {
            s.status = SolveStatus::failed;
            s.message = "preimage outside B_d";
          }
        }
      }
      return s;
    };
    CoverageLevel lvl;
    lvl.radius = d;
    const CoverageRegion region{expansion.value, true, c_hat, d};
    lvl.target_radius = region.radius();
    lvl.result = coverage_check(solve, region, options.coverage_targets, scale_seed(options.seed, d),
                                options.solve.tol);
    hits += lvl.result.successes;
    total += lvl.result.targets;
    cert.coverage.push_back(std::move(lvl));
  }
  cert.coverage_fraction = total > 0 ? static_cast<double>(hits) / total : 0.0;
  if (cert.coverage_fraction < 1.0) {
    return refuse(4, "coverage spot-check hit " + std::to_string(hits) + " of " + std::to_string(total) + " targets");
  }

  // (5) injectivity audit
  FalsifyOptions audit_options = options.audit;
  audit_options.radius = top;
  audit_options.seed = options.seed;
  cert.audit = falsify_injectivity(f, x, audit_options);
  if (cert.audit.clean) {
    cert.status = CertificateStatus::certified;
    cert.reason = "empirically certified: local homeomorphism onto a neighborhood of f(x)";
  } else {
    cert.status = CertificateStatus::certified_up_to_antipodes;
    cert.reason =
        "coverage and openness verified; injectivity fails on symmetric balls (" +
        std::to_string(cert.audit.collisions.size()) +
        " collision witnesses, v ~ -v): homeomorphism only up to antipodal identification";
  }
  return cert;
}

SweepResult scale_sweep(const ScaleProperty& property, std::span<const double> ascending) {
  if (ascending.size() < 4) throw std::invalid_argument("scale_sweep: need at least 4 scales");
  for (std::size_t i = 0; i < ascending.size(); ++i) {
    if (!(ascending[i] > 0.0) || (i > 0 && !(ascending[i] > ascending[i - 1]))) {
      throw std::invalid_argument("scale_sweep: scales must be positive and strictly ascending");
    }
  }
  SweepResult result;
  bool contiguous = true;
  for (double s : ascending) {
    SweepEntry entry;
    entry.scale = s;
    try {
      const ScaleOutcome outcome = property(s);
      entry.passed = outcome.passed;
      entry.value = outcome.value;
    } catch (const std::exception& e) {
      entry.passed = false;
      entry.error = e.what();
    }
    if (contiguous && entry.passed) {
      result.largest_passing = s;
    } else {
      contiguous = false;
    }
    result.transcript.push_back(std::move(entry));
  }
  return result;
}

std::vector<double> ascending_ladder(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo) || count < 2) throw std::invalid_argument("ascending_ladder: need 0 < lo < hi, count >= 2");
  std::vector<double> out = ascending_ladder_ratio(lo, std::pow(hi / lo, 1.0 / (count - 1)), count);
  out.back() = hi;
  return out;
}

std::vector<double> ascending_ladder_ratio(double lo, double ratio, int count) {
  if (!(lo > 0.0) || !(ratio > 1.0) || count < 1) {
    throw std::invalid_argument("ascending_ladder_ratio: need lo > 0, ratio > 1, count >= 1");
  }
  std::vector<double> out;
  for (int j = 0; j < count; ++j) out.push_back(lo * std::pow(ratio, j));
  return out;
}

ScaleProperty contraction_property(const Evaluator& f, const Vector& x, const Matrix& linear, int pairs, double kappa,
                                   std::uint64_t seed) {
  Eigen::JacobiSVD<Matrix> svd(linear);
  const double sigma_min = svd.singularValues()[svd.singularValues().size() - 1];
  if (!(sigma_min > 0.0)) throw std::invalid_argument("contraction_property: linear part is singular");
  const double inverse_norm = 1.0 / sigma_min;
  return [=](double s) {
    const double value = sampled_modulus(f, x, linear, s, pairs, seed) * inverse_norm;
    return ScaleOutcome{value <= kappa, value};
  };
}

ScaleProperty quadratic_coverage_property(const Evaluator& f, const Vector& x, const QuadDifferential& a,
                                          double c_hat, int targets, const DegenerateSolveOptions& solve,
                                          std::uint64_t seed) {
  const Vector fx = f(x);
  return [=](double s) {
    const TargetSolver solver = [&](const Vector& target) {
      InverseSolution sol = solve_degenerate(f, x, a, c_hat, target, solve);
      for (const auto& p : sol.preimages) {
        if ((p - x).norm() > s) sol.status = SolveStatus::failed;
      }
      return sol;
    };
    const CoverageResult r = coverage_check(solver, {fx, true, c_hat, s}, targets, scale_seed(seed, s), solve.tol);
    return ScaleOutcome{r.fraction == 1.0, r.fraction};
  };
}

}  // namespace magnify
