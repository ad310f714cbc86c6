#pragma once

// Dense numerical primitives shared by every similarity measure: centering,
// singular values and nuclear norms, PSD square roots, numerical rank and
// seeded random matrices.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "repsim/errors.hpp"

namespace repsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Tolerances {
  double symmetry_tol = 1e-10;   // relative to the largest entry magnitude
  double eig_clamp_tol = 1e-10;  // relative to the largest eigenvalue magnitude
  double rank_tol = 1e-10;       // multiplies sigma_max * max(rows, cols)
  double equality_tol = 1e-8;    // used by verification reports

  // Throws std::invalid_argument unless every field is strictly positive.
  void validate() const;
};

// Activations with rows = stimuli and columns = neurons.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  Index stimuli() const { return values_.rows(); }
  Index neurons() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

// Symmetric positive semidefinite matrix. The validating constructor checks
// symmetry and the eigenvalue floor, then stores the exactly symmetrized
// matrix.
class PsdMatrix {
 public:
  explicit PsdMatrix(const Matrix& values, const Tolerances& tol = {});

  // F * F^T, PSD by construction, so no eigenvalue check is made.
  static PsdMatrix gram(const Matrix& factor);
  // Caller guarantees the matrix is PSD (e.g. a product of square roots);
  // only symmetrization is applied.
  static PsdMatrix unchecked(const Matrix& symmetric);

  Index dim() const { return values_.rows(); }
  const Matrix& values() const { return values_; }
  double trace() const { return values_.trace(); }

 private:
  PsdMatrix() = default;

  Matrix values_;
};

// PSD matrix held in eigen-factored form U * diag(lambda) * U^T with
// orthonormal U (dim x rank) and strictly positive lambda. Lets kernel-side
// computations on thousands of stimuli run in O(dim * rank^2).
class LowRankPsd {
 public:
  // K = F * F^T, factored through a thin SVD of F.
  static LowRankPsd from_factor(const Matrix& factor);
  // Factors an explicit PSD matrix, dropping eigenvalues at round-off level.
  static LowRankPsd from_psd(const PsdMatrix& k, const Tolerances& tol = {});

  Index dim() const { return basis_.rows(); }
  Index rank() const { return basis_.cols(); }
  const Matrix& basis() const { return basis_; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  double trace() const { return eigenvalues_.sum(); }
  PsdMatrix dense() const;

 private:
  LowRankPsd(Matrix basis, Vector eigenvalues)
      : basis_(std::move(basis)), eigenvalues_(std::move(eigenvalues)) {}

  Matrix basis_;
  Vector eigenvalues_;
};

bool all_finite(const Matrix& a);

// Subtracts column means (C * X without forming C).
Matrix center_columns(const Matrix& x);
DataMatrix center_columns(const DataMatrix& x);

// Singular values in decreasing order.
Vector singular_values(const Matrix& a);
double nuclear_norm(const Matrix& a);

// ||A^T B||_* for A (m x p) and B (m x q). When m < min(p, q) the product is
// compressed through thin QR factors first, so the p x q matrix is never
// decomposed.
double cross_nuclear_norm(const Matrix& a, const Matrix& b);

// Eigenvalues of a symmetric PSD matrix in ascending order with round-off
// treated as zero: values within the noise floor of the solver become 0 and
// negatives down to -eig_clamp_tol * |lambda|_max are clamped. Throws NotPsd
// for anything more negative.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};
SymmetricEigen psd_eigen(const Matrix& symmetric, const Tolerances& tol = {});

PsdMatrix psd_sqrt(const PsdMatrix& k, const Tolerances& tol = {});

// Tr[S^{1/2}] for symmetric PSD S.
double trace_sqrt(const Matrix& symmetric, const Tolerances& tol = {});

Index numerical_rank(const Matrix& a, const Tolerances& tol = {});

// Clamp helpers for values that are mathematically inside a domain but can
// leave it by round-off. Violations larger than 1e-10 (relative) throw
// NumericalError.
double clamp_radicand(double radicand, double scale);
double clamp_unit_interval(double value);
double clamp_cosine(double value);
double safe_sqrt(double radicand, double scale);
double safe_acos(double cosine);

// Random sampling. The generator is named and fixed so that output is
// reproducible for a given seed within a build.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
// Independent stream seed for sub-task `stream` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

Matrix standard_normal(Index rows, Index cols, Rng& rng);

// G * G^T with G a p x dof standard Gaussian matrix.
PsdMatrix sample_wishart(Index p, Index dof, Rng& rng);

// Haar-distributed orthogonal matrix (QR of a Gaussian with sign-fixed R).
Matrix random_orthogonal(Index n, Rng& rng);

}  // namespace repsim
