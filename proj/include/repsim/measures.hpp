#pragma once

// Representational (dis)similarity measures between two activation matrices
// recorded on the same stimuli. Alignment-based measures work on the data
// (or its neuron covariances); kernel-based measures work on the centered
// stimulus-by-stimulus linear kernels.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repsim/linalg.hpp"

namespace repsim {

struct CovarianceSummary {
  Matrix sigma_x;   // Nx x Nx
  Matrix sigma_y;   // Ny x Ny
  Matrix sigma_xy;  // Nx x Ny
};

struct KernelPair {
  PsdMatrix k_x;
  PsdMatrix k_y;

  // True when both kernels annihilate the all-ones vector up to `tol`
  // relative to their largest entry.
  bool centered(double tol = 1e-10) const;
};

// Q with Q^T Q = I minimizing ||CX - CY Q||_F.
struct OrthogonalTransform {
  Matrix q;
};

CovarianceSummary cross_covariances(const DataMatrix& x, const DataMatrix& y);

// C X X^T C.
PsdMatrix linear_kernel(const DataMatrix& x);
KernelPair linear_kernels(const DataMatrix& x, const DataMatrix& y);

// Angle between raw (uncentered) matrices of equal shape, in [0, pi].
double angular_distance(const DataMatrix& x, const DataMatrix& y);

OrthogonalTransform procrustes_align(const DataMatrix& x, const DataMatrix& y);

// ||CX - CY Q||_F evaluated directly after fitting Q. The narrower matrix is
// zero-padded first, so unequal widths are accepted.
double procrustes_distance_by_alignment(const DataMatrix& x, const DataMatrix& y);

// Covariance form sqrt(Tr Sx + Tr Sy - 2 ||Sxy||_*). Widths may differ.
double procrustes_distance(const DataMatrix& x, const DataMatrix& y);
double procrustes_distance_squared(const DataMatrix& x, const DataMatrix& y);

// arccos(||Sxy||_* / sqrt(Tr Sx Tr Sy)) in [0, pi/2]. Throws DegenerateInput
// when either representation is constant across stimuli.
double riemannian_shape_distance(const DataMatrix& x, const DataMatrix& y);

double cka(const PsdMatrix& k_x, const PsdMatrix& k_y);
double cka(const KernelPair& k);
double cka(const LowRankPsd& k_x, const LowRankPsd& k_y);

// Tr[(Kx^{1/2} Ky Kx^{1/2})^{1/2}], computed with two nested symmetric
// eigendecompositions.
double fidelity(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol = {});
// Same quantity on eigen-factored kernels; cost is O(dim * rank^2).
double fidelity(const LowRankPsd& k_x, const LowRankPsd& k_y, const Tolerances& tol = {});

double nbs(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol = {});
double nbs(const KernelPair& k, const Tolerances& tol = {});
double nbs(const LowRankPsd& k_x, const LowRankPsd& k_y, const Tolerances& tol = {});

double bures_distance(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol = {});
double bures_distance(const KernelPair& k, const Tolerances& tol = {});
double bures_distance(const LowRankPsd& k_x, const LowRankPsd& k_y, const Tolerances& tol = {});

// Distances scaled by 1 / sqrt(N M). Both require equal widths; the kernel
// form takes N explicitly since kernels do not carry it.
double normalized_procrustes(const DataMatrix& x, const DataMatrix& y);
double normalized_bures(const PsdMatrix& k_x, const PsdMatrix& k_y, Index neurons,
                        const Tolerances& tol = {});
double normalized_bures(const LowRankPsd& k_x, const LowRankPsd& k_y, Index neurons,
                        const Tolerances& tol = {});

// Pairwise Euclidean distances between stimulus responses (rows of X).
Matrix rdm(const DataMatrix& x);

// Appends zero columns up to `target_cols`.
DataMatrix zero_pad(const DataMatrix& x, Index target_cols);

// ---------------------------------------------------------------------------
// Measure suites

enum class Measure {
  kAngular,
  kProcrustes,
  kRiemannian,
  kCka,
  kNbs,
  kBures,
  kFidelity,
  kNormalizedProcrustes,
  kNormalizedBures,
  kRdm,
};

std::string_view measure_name(Measure m);
std::optional<Measure> parse_measure(std::string_view name);
const std::vector<Measure>& all_measures();

enum class ErrorKind { kNone, kDimensionMismatch, kDegenerateInput, kNotPsd, kNumerical, kInput };

std::string_view error_kind_name(ErrorKind kind);

struct MeasureResult {
  Measure measure;
  std::optional<double> value;
  // Matrix-valued output (the rdm measure returns one matrix per input).
  std::optional<Matrix> matrix_x;
  std::optional<Matrix> matrix_y;
  ErrorKind error = ErrorKind::kNone;
  std::string message;

  bool ok() const { return error == ErrorKind::kNone; }
};

struct SimilarityReport {
  Index stimuli = 0;
  Index neurons_x = 0;
  Index neurons_y = 0;
  Tolerances tolerances;
  std::vector<MeasureResult> results;
};

// Kernels on more stimuli than this are handled in eigen-factored form.
inline constexpr Index kDenseKernelLimit = 512;

// Evaluates every requested measure. Failures are recorded per measure and
// never abort the remaining ones. Kernel measures are computed from the
// kernels, not through the covariance identities.
SimilarityReport compare(const DataMatrix& x, const DataMatrix& y,
                         const std::vector<Measure>& measures, const Tolerances& tol = {});

}  // namespace repsim
