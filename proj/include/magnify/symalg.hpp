#pragma once

// Linear algebra on the symmetric square Sym^2(R^n).
//
// An element u of Sym^2(R^n) is stored as a symmetric n x n matrix; the
// symmetric product v (.) w is (v w^T + w v^T) / 2, so the Segre map is
// p2(v) = v v^T. The Frobenius norm is used throughout; it agrees with
// |v||w| on squares v (.) v and lies within [1/sqrt(2), 1] of it otherwise.
//
// A quadratic differential A : Sym^2(R^n) -> R^n is stored as n symmetric
// forms B_i with A(u)_i = <B_i, u> (Frobenius pairing), so the associated
// symmetric bilinear map is A(v, w)_i = v^T B_i w.

#include "magnify/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace magnify {

class SymTensor2 {
 public:
  explicit SymTensor2(int n) : entries_(Matrix::Zero(n, n)) {}
  /// Throws std::invalid_argument unless `entries` is square and exactly symmetric.
  explicit SymTensor2(Matrix entries);

  int dimension() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  double operator()(int i, int j) const { return entries_(i, j); }
  double norm() const { return entries_.norm(); }

  friend SymTensor2 operator+(const SymTensor2& a, const SymTensor2& b);
  friend SymTensor2 operator*(double s, const SymTensor2& a);

 private:
  Matrix entries_;
};

/// (v w^T + w v^T) / 2; each off-diagonal pair is written from one expression
/// so the result is exactly symmetric.
SymTensor2 sym_product(const Vector& v, const Vector& w);
inline SymTensor2 segre(const Vector& v) { return sym_product(v, v); }

/// Outcome of inverting the Segre map. On acceptance `root` is sqrt(l1) e1 for
/// the dominant eigenpair (l1, e1), signed so its largest-magnitude entry is
/// positive; the preimage set is {root, -root}. `distance` is the spectral
/// distance to the rank-one positive semidefinite cone.
struct SegreInverse {
  bool accepted = false;
  Vector root;
  double distance = 0.0;

  std::vector<Vector> preimages() const { return {root, -root}; }
};

SegreInverse segre_inverse(const SymTensor2& u, double tol);

class QuadDifferential {
 public:
  /// Throws unless there are n forms, each n x n and exactly symmetric.
  explicit QuadDifferential(std::vector<Matrix> forms);
  static QuadDifferential zero(int n);

  int dimension() const { return static_cast<int>(forms_.size()); }
  const std::vector<Matrix>& forms() const { return forms_; }
  const Matrix& form(int i) const { return forms_[static_cast<std::size_t>(i)]; }

  /// n x n(n+1)/2 matrix of A in the Frobenius-orthonormal basis
  /// {E_jj} u {(E_jk + E_kj)/sqrt(2) : j < k}, ordered row-major over j <= k.
  Matrix coordinate_matrix() const;
  /// Frobenius norm of the coordinate matrix.
  double norm() const;

 private:
  std::vector<Matrix> forms_;
};

Vector apply_quad(const QuadDifferential& a, const SymTensor2& u);
Vector bilinear(const QuadDifferential& a, const Vector& v, const Vector& w);
/// Q(v) = A(v, v).
inline Vector quadratic(const QuadDifferential& a, const Vector& v) { return bilinear(a, v, v); }

/// H_v with H_v w = A(v, w); row i is (B_i v)^T. The differential of Q at v is 2 H_v.
Matrix pencil_matrix(const QuadDifferential& a, const Vector& v);

/// Basis element of Sym^2(R^n) for the coordinate index used by coordinate_matrix.
SymTensor2 sym_basis_element(int n, int index);
int sym_dimension(int n);

/// Frobenius-orthonormal basis of ker A. Singular values at or below
/// rank_tol * sigma_max count as zero; A = 0 yields the whole space.
std::vector<SymTensor2> kernel_basis(const QuadDifferential& a, double rank_tol = 1e-10);

double min_singular_value(const Matrix& m);

/// sigma_min(H_v) > tol. Throws std::invalid_argument unless |v| = 1 within 1e-9.
bool transversal(const QuadDifferential& a, const Vector& v, double tol);

struct RegularityReport {
  double margin = 0.0;      // min over the sphere of sigma_min(H_v)
  Vector witness;           // unit vector attaining `margin`
  double c_hat = 0.0;       // min over the sphere of |Q(v)|
  Vector c_hat_witness;
  int samples = 0;
  int refinement_iterations = 0;
};

struct RegularityOptions {
  int samples = 512;
  std::uint64_t seed = 42;
  int refine_steps = 200;
  double step_tol = 1e-8;
};

/// Sphere minimization of sigma_min(H_v) and |Q(v)|: low-discrepancy sampling,
/// then projected descent from the best sample.
RegularityReport regularity_margin(const QuadDifferential& a, const RegularityOptions& options = {});

}  // namespace magnify
