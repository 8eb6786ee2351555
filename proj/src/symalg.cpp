#include "magnify/symalg.hpp"

#include "magnify/sampling.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace magnify {

namespace {

bool exactly_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) return false;
    }
  }
  return true;
}

// Index pairs (j, k), j <= k, in the order used by coordinate_matrix.
std::vector<std::pair<int, int>> sym_index_pairs(int n) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(sym_dimension(n)));
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) pairs.emplace_back(j, k);
  }
  return pairs;
}

bool lexicographically_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

Vector canonical_sign(const Vector& v) {
  const Vector neg = -v;
  return lexicographically_less(neg, v) ? neg : v;
}

struct SphereMinimum {
  Vector point;
  double value = 0.0;
  int iterations = 0;
};

// Projected descent with backtracking on the unit sphere; retraction by normalization.
template <typename Objective, typename Gradient>
SphereMinimum minimize_on_sphere(const Objective& objective, const Gradient& gradient, Vector v,
                                 int max_steps, double step_tol) {
  double value = objective(v);
  double step = 0.25;
  int iterations = 0;
  for (; iterations < max_steps; ++iterations) {
    Vector g = gradient(v);
    g -= g.dot(v) * v;
    const double gnorm = g.norm();
    if (!(gnorm > 0.0)) break;
    bool accepted = false;
    while (step * gnorm >= step_tol) {
      Vector trial = v - step * g;
      trial.normalize();
      const double trial_value = objective(trial);
      if (trial_value < value - 1e-4 * step * gnorm * gnorm) {
        v = trial;
        value = trial_value;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(1.0, 2.0 * step);
  }
  return {v, value, iterations};
}

}  // namespace

SymTensor2::SymTensor2(Matrix entries) : entries_(std::move(entries)) {
  if (!exactly_symmetric(entries_)) throw std::invalid_argument("SymTensor2: matrix is not symmetric");
}

SymTensor2 operator+(const SymTensor2& a, const SymTensor2& b) {
  require_dimension(b.dimension(), a.dimension(), "SymTensor2 sum");
  return SymTensor2(Matrix(a.entries_ + b.entries_));
}

SymTensor2 operator*(double s, const SymTensor2& a) { return SymTensor2(Matrix(s * a.entries_)); }

SymTensor2 sym_product(const Vector& v, const Vector& w) {
  require_dimension(w.size(), v.size(), "sym_product");
  const auto n = v.size();
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = v[i] * w[i];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double entry = 0.5 * (v[i] * w[j] + w[i] * v[j]);
      m(i, j) = entry;
      m(j, i) = entry;
    }
  }
  return SymTensor2(std::move(m));
}

SegreInverse segre_inverse(const SymTensor2& u, double tol) {
  const int n = u.dimension();
  SegreInverse result;
  result.root = Vector::Zero(n);
  if (u.norm() == 0.0) {
    result.accepted = true;
    return result;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(u.entries());
  const Vector& values = eig.eigenvalues();  // ascending
  const double top = values[n - 1];
  double distance = std::max(0.0, -top);
  for (int i = 0; i + 1 < n; ++i) distance = std::max(distance, std::abs(values[i]));
  result.distance = distance;
  if (distance > tol) return result;

  Vector root = std::sqrt(std::max(0.0, top)) * eig.eigenvectors().col(n - 1);
  Eigen::Index largest = 0;
  root.cwiseAbs().maxCoeff(&largest);
  if (root[largest] < 0.0) root = -root;
  result.root = root;
  result.accepted = true;
  return result;
}

QuadDifferential::QuadDifferential(std::vector<Matrix> forms) : forms_(std::move(forms)) {
  const auto n = static_cast<Eigen::Index>(forms_.size());
  if (n < 1) throw std::invalid_argument("QuadDifferential: empty");
  for (const auto& b : forms_) {
    if (b.rows() != n || b.cols() != n) throw DimensionError("QuadDifferential: form has wrong shape");
    if (!exactly_symmetric(b)) throw std::invalid_argument("QuadDifferential: form is not symmetric");
  }
}

QuadDifferential QuadDifferential::zero(int n) {
  return QuadDifferential(std::vector<Matrix>(static_cast<std::size_t>(n), Matrix::Zero(n, n)));
}

int sym_dimension(int n) { return n * (n + 1) / 2; }

Matrix QuadDifferential::coordinate_matrix() const {
  const int n = dimension();
  const auto pairs = sym_index_pairs(n);
  Matrix m(n, static_cast<Eigen::Index>(pairs.size()));
  for (int i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      const auto [j, k] = pairs[c];
      m(i, static_cast<Eigen::Index>(c)) = j == k ? form(i)(j, j) : std::sqrt(2.0) * form(i)(j, k);
    }
  }
  return m;
}

double QuadDifferential::norm() const { return coordinate_matrix().norm(); }

SymTensor2 sym_basis_element(int n, int index) {
  const auto pairs = sym_index_pairs(n);
  if (index < 0 || index >= static_cast<int>(pairs.size())) {
    throw std::out_of_range("sym_basis_element: index out of range");
  }
  const auto [j, k] = pairs[static_cast<std::size_t>(index)];
  Matrix m = Matrix::Zero(n, n);
  if (j == k) {
    m(j, j) = 1.0;
  } else {
    m(j, k) = m(k, j) = 1.0 / std::sqrt(2.0);
  }
  return SymTensor2(std::move(m));
}

Vector apply_quad(const QuadDifferential& a, const SymTensor2& u) {
  require_dimension(u.dimension(), a.dimension(), "apply_quad");
  Vector out(a.dimension());
  for (int i = 0; i < a.dimension(); ++i) out[i] = a.form(i).cwiseProduct(u.entries()).sum();
  return out;
}

Vector bilinear(const QuadDifferential& a, const Vector& v, const Vector& w) {
  require_dimension(v.size(), a.dimension(), "bilinear");
  require_dimension(w.size(), a.dimension(), "bilinear");
  Vector out(a.dimension());
  for (int i = 0; i < a.dimension(); ++i) out[i] = v.dot(a.form(i) * w);
  return out;
}

Matrix pencil_matrix(const QuadDifferential& a, const Vector& v) {
  require_dimension(v.size(), a.dimension(), "pencil_matrix");
  const int n = a.dimension();
  Matrix h(n, n);
  for (int i = 0; i < n; ++i) h.row(i) = (a.form(i) * v).transpose();
  return h;
}

std::vector<SymTensor2> kernel_basis(const QuadDifferential& a, double rank_tol) {
  const int n = a.dimension();
  const Matrix m = a.coordinate_matrix();
  const int dim = sym_dimension(n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > rank_tol * sigma_max && sigma[i] > 0.0) ++rank;
  }

  std::vector<SymTensor2> basis;
  for (int c = rank; c < dim; ++c) {
    Vector coords = svd.matrixV().col(c);
    Eigen::Index largest = 0;
    coords.cwiseAbs().maxCoeff(&largest);
    if (coords[largest] < 0.0) coords = -coords;
    SymTensor2 u(n);
    for (int idx = 0; idx < dim; ++idx) {
      if (coords[idx] != 0.0) u = u + coords[idx] * sym_basis_element(n, idx);
    }
    basis.push_back(std::move(u));
  }
  return basis;
}

double min_singular_value(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  return s.size() == 0 ? 0.0 : s[s.size() - 1];
}

bool transversal(const QuadDifferential& a, const Vector& v, double tol) {
  require_dimension(v.size(), a.dimension(), "transversal");
  if (std::abs(v.norm() - 1.0) > 1e-9) throw std::invalid_argument("transversal: direction is not a unit vector");
  return min_singular_value(pencil_matrix(a, v)) > tol;
}

RegularityReport regularity_margin(const QuadDifferential& a, const RegularityOptions& options) {
  const int n = a.dimension();
  if (options.samples < 2 * n) throw std::invalid_argument("regularity_margin: need at least 2n samples");

  const auto margin_at = [&](const Vector& v) { return min_singular_value(pencil_matrix(a, v)); };
  const auto margin_gradient = [&](const Vector& v) {
    Eigen::JacobiSVD<Matrix> svd(pencil_matrix(a, v), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector left = svd.matrixU().col(n - 1);
    const Vector right = svd.matrixV().col(n - 1);
    Vector g = Vector::Zero(n);
    for (int i = 0; i < n; ++i) g += left[i] * (a.form(i) * right);
    return g;
  };
  const auto size_at = [&](const Vector& v) { return quadratic(a, v).norm(); };
  const auto size_gradient = [&](const Vector& v) {
    const Vector q = quadratic(a, v);
    const double norm = q.norm();
    if (norm == 0.0) return Vector(Vector::Zero(n));
    return Vector(2.0 * pencil_matrix(a, v).transpose() * q / norm);
  };

  const std::vector<Vector> samples = sphere_points(n, options.samples, options.seed);

  // Ascending by value, ties broken by the lexicographically smaller point.
  const auto ranked = [&](const auto& objective) {
    std::vector<double> values(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) values[i] = objective(samples[i]);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (values[x] != values[y]) return values[x] < values[y];
      return lexicographically_less(samples[x], samples[y]);
    });
    return order;
  };

  RegularityReport report;
  report.samples = static_cast<int>(samples.size());

  const auto refine = [&](const auto& objective, const auto& gradient, Vector& witness, double& value) {
    const auto order = ranked(objective);
    const std::size_t starts = std::min<std::size_t>(3, order.size());
    bool have = false;
    for (std::size_t s = 0; s < starts; ++s) {
      SphereMinimum m = n == 1 ? SphereMinimum{samples[order[s]], objective(samples[order[s]]), 0}
                               : minimize_on_sphere(objective, gradient, samples[order[s]],
                                                    options.refine_steps, options.step_tol);
      report.refinement_iterations += m.iterations;
      const Vector candidate = canonical_sign(m.point);
      if (!have || m.value < value || (m.value == value && lexicographically_less(candidate, witness))) {
        witness = candidate;
        value = m.value;
        have = true;
      }
    }
  };

  refine(margin_at, margin_gradient, report.witness, report.margin);
  refine(size_at, size_gradient, report.c_hat_witness, report.c_hat);
  return report;
}

}  // namespace magnify
