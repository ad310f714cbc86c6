#pragma once

// Numerical checks of the shape/Bures duality and of the inequalities that
// relate CKA to NBS.

#include <optional>
#include <string>

#include "repsim/measures.hpp"

namespace repsim {

// Absolute slack allowance used by bound checks, scaled by (1 + |bound|).
inline constexpr double kBoundSlackTol = 1e-8;

struct BoundReport {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  double slack_lower = 0.0;  // value - lower
  double slack_upper = 0.0;  // upper - value
  bool saturated_lower = false;
  bool saturated_upper = false;
  bool valid = false;
};

BoundReport make_bound_report(double lower, double value, double upper);

// CKA / sqrt(r_x r_y) <= NBS^2 <= min(r_x, r_y) * CKA with numerical ranks.
struct EnvelopeReport {
  BoundReport bounds;
  double cka = 0.0;
  double nbs = 0.0;
  Index rank_x = 0;
  Index rank_y = 0;
  double rank_tol = 0.0;
};

EnvelopeReport envelope_bounds(const PsdMatrix& k_x, const PsdMatrix& k_y,
                               const Tolerances& tol = {});
EnvelopeReport envelope_bounds(const KernelPair& k, const Tolerances& tol = {});

// Tr[Kx^{1/2} Ky^{1/2}] / sqrt(Tr Kx Tr Ky): the overlap of the PSD square
// roots without any alignment.
double sqrt_cka(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol = {});
double sqrt_cka(const KernelPair& k, const Tolerances& tol = {});

// 1 - NBS <= 1 - sqrt_cka <= sqrt(1 - NBS^2).
struct FidelityBoundReport {
  BoundReport bounds;
  double nbs = 0.0;
  double sqrt_cka = 0.0;
};

FidelityBoundReport fuchs_van_de_graaf(const PsdMatrix& k_x, const PsdMatrix& k_y,
                                       const Tolerances& tol = {});
FidelityBoundReport fuchs_van_de_graaf(const KernelPair& k, const Tolerances& tol = {});

// max over orthogonal U of |Tr[X^T Y U]| on the raw (uncentered) matrices,
// evaluated in closed form as ||X^T Y||_*.
double uhlmann_overlap(const DataMatrix& x, const DataMatrix& y);

struct ExtrapolationResult {
  Matrix matrix;
  double min_eigenvalue = 0.0;
  bool is_psd = false;
};

// alpha * Kx + (1 - alpha) * Ky with its smallest eigenvalue.
ExtrapolationResult euclidean_extrapolation(const PsdMatrix& k_x, const PsdMatrix& k_y,
                                            double alpha, const Tolerances& tol = {});

// Both sides of the duality computed independently: the covariance path
// (nuclear norm of the cross-covariance) against the kernel path (fidelity of
// the centered kernels).
struct DualityReport {
  double procrustes = 0.0;
  double bures = 0.0;
  double cos_theta = 0.0;
  double nbs = 0.0;
  double nuclear = 0.0;
  double fidelity = 0.0;

  double bures_vs_procrustes_abs_err = 0.0;
  double nbs_vs_cos_theta_abs_err = 0.0;
  double fidelity_vs_nuclear_abs_err = 0.0;

  bool pass = false;
  std::optional<std::string> error;
};

DualityReport verify_duality(const DataMatrix& x, const DataMatrix& y, const Tolerances& tol = {});

// Nonzero spectra of A = X^T Y Y^T X, B = X X^T Y Y^T and
// C = (X X^T)^{1/2} Y Y^T (X X^T)^{1/2}, all sorted descending and truncated
// to the numerical rank of X^T Y.
struct SpectraReport {
  Vector a;
  Vector b;
  Vector c;
  double max_abs_diff = 0.0;
  double scale = 0.0;  // largest eigenvalue of A
  bool pass = false;
};

SpectraReport product_spectra(const Matrix& x, const Matrix& y, const Tolerances& tol = {});

}  // namespace repsim
