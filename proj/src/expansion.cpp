#include "magnify/expansion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace magnify {

CubicForm::CubicForm(int n)
    : n_(n), tensors_(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n * n * n), 0.0)) {}

CubicForm::CubicForm(int n, std::vector<std::vector<double>> tensors) : n_(n), tensors_(std::move(tensors)) {
  if (static_cast<int>(tensors_.size()) != n) throw DimensionError("CubicForm: wrong component count");
  for (const auto& t : tensors_) {
    if (static_cast<int>(t.size()) != n * n * n) throw DimensionError("CubicForm: wrong tensor size");
  }
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        for (int c = 0; c < n; ++c) {
          const double x = (*this)(i, a, b, c);
          if (x != (*this)(i, b, a, c) || x != (*this)(i, a, c, b) || x != (*this)(i, c, b, a)) {
            throw std::invalid_argument("CubicForm: tensor is not symmetric");
          }
        }
      }
    }
  }
}

void CubicForm::set_symmetric(int i, int a, int b, int c, double value) {
  const std::array<std::array<int, 3>, 6> perms{{{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}}};
  auto& t = tensors_[static_cast<std::size_t>(i)];
  for (const auto& p : perms) t[static_cast<std::size_t>((p[0] * n_ + p[1]) * n_ + p[2])] = value;
}

Vector CubicForm::apply(const Vector& u, const Vector& v, const Vector& w) const {
  require_dimension(u.size(), n_, "CubicForm::apply");
  require_dimension(v.size(), n_, "CubicForm::apply");
  require_dimension(w.size(), n_, "CubicForm::apply");
  Vector out = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (int a = 0; a < n_; ++a) {
      for (int b = 0; b < n_; ++b) {
        for (int c = 0; c < n_; ++c) sum += (*this)(i, a, b, c) * u[a] * v[b] * w[c];
      }
    }
    out[i] = sum;
  }
  return out;
}

double CubicForm::norm() const {
  double sum = 0.0;
  for (const auto& t : tensors_) {
    for (double x : t) sum += x * x;
  }
  return std::sqrt(sum);
}

void validate_order(int k) {
  if (k < 1 || k > 3) throw std::invalid_argument("expansion order must be 1, 2 or 3, got " + std::to_string(k));
}

Vector Expansion::offset(const Vector& v, int up_to_order) const {
  require_dimension(v.size(), dimension(), "Expansion::offset");
  const int k = std::min(order, up_to_order);
  Vector out = linear * v;
  if (k >= 2 && quadratic) out += magnify::quadratic(*quadratic, v);
  if (k >= 3 && cubic) out += cubic->cube(v);
  return out;
}

Expansion Expansion::truncated(int k) const {
  validate_order(k);
  Expansion e = *this;
  e.order = std::min(order, k);
  if (e.order < 3) e.cubic.reset();
  if (e.order < 2) e.quadratic.reset();
  e.remainder_diagnostics.clear();
  return e;
}

double coefficient_error(const Expansion& estimate, const Expansion& reference) {
  require_dimension(estimate.dimension(), reference.dimension(), "coefficient_error");
  const int n = reference.dimension();
  const int k = std::min(estimate.order, reference.order);
  double scale = 1.0;
  double err = 0.0;
  const auto visit = [&](double e, double r) {
    scale = std::max(scale, std::abs(r));
    err = std::max(err, std::abs(e - r));
  };
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) visit(estimate.linear(i, a), reference.linear(i, a));
  }
  if (k >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) visit(estimate.quadratic->form(i)(a, b), reference.quadratic->form(i)(a, b));
      }
    }
  }
  if (k >= 3) {
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          for (int c = 0; c < n; ++c) visit((*estimate.cubic)(i, a, b, c), (*reference.cubic)(i, a, b, c));
        }
      }
    }
  }
  return err / scale;
}

}  // namespace magnify
