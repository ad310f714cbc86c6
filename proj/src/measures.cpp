#include "repsim/measures.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <utility>

namespace repsim {

namespace {

void require_same_stimuli(const DataMatrix& x, const DataMatrix& y) {
  if (x.stimuli() != y.stimuli()) {
    std::ostringstream os;
    os << "representations must share stimuli: " << x.stimuli() << " rows vs " << y.stimuli();
    throw DimensionMismatch(os.str());
  }
}

void require_same_dim(const PsdMatrix& a, const PsdMatrix& b) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << "kernels must have equal size: " << a.dim() << " vs " << b.dim();
    throw DimensionMismatch(os.str());
  }
}

void require_same_dim(const LowRankPsd& a, const LowRankPsd& b) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << "kernels must have equal size: " << a.dim() << " vs " << b.dim();
    throw DimensionMismatch(os.str());
  }
}

void require_positive_traces(double tx, double ty, const char* what) {
  if (!(tx > 0.0) || !(ty > 0.0)) {
    throw DegenerateInput(std::string(what) +
                          " is undefined for a representation that is constant across stimuli");
  }
}

// Pieces of the covariance form shared by the shape distances.
struct CovarianceTraces {
  double trace_x;
  double trace_y;
  double cross_nuclear;
};

CovarianceTraces covariance_traces(const DataMatrix& x, const DataMatrix& y) {
  require_same_stimuli(x, y);
  const Matrix xc = center_columns(x.values());
  const Matrix yc = center_columns(y.values());
  return {xc.squaredNorm(), yc.squaredNorm(), cross_nuclear_norm(xc, yc)};
}

double normalized_cosine(double numerator, double tx, double ty) {
  // Numerator and traces are nonnegative, so only the upper end can be crossed.
  return clamp_unit_interval(numerator / std::sqrt(tx * ty));
}

}  // namespace

bool KernelPair::centered(double tol) const {
  for (const PsdMatrix* k : {&k_x, &k_y}) {
    const Matrix& v = k->values();
    const double scale = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (v.rowwise().sum().cwiseAbs().maxCoeff() > tol * scale * static_cast<double>(v.rows())) {
      return false;
    }
  }
  return true;
}

CovarianceSummary cross_covariances(const DataMatrix& x, const DataMatrix& y) {
  require_same_stimuli(x, y);
  const Matrix xc = center_columns(x.values());
  const Matrix yc = center_columns(y.values());
  return {xc.transpose() * xc, yc.transpose() * yc, xc.transpose() * yc};
}

PsdMatrix linear_kernel(const DataMatrix& x) { return PsdMatrix::gram(center_columns(x.values())); }

KernelPair linear_kernels(const DataMatrix& x, const DataMatrix& y) {
  require_same_stimuli(x, y);
  return {linear_kernel(x), linear_kernel(y)};
}

double angular_distance(const DataMatrix& x, const DataMatrix& y) {
  if (x.stimuli() != y.stimuli() || x.neurons() != y.neurons()) {
    throw DimensionMismatch("angular distance needs matrices of identical shape");
  }
  const double nx = x.values().squaredNorm();
  const double ny = y.values().squaredNorm();
  if (!(nx > 0.0) || !(ny > 0.0)) {
    throw DegenerateInput("angular distance is undefined for a zero matrix");
  }
  const double inner = x.values().cwiseProduct(y.values()).sum();
  return safe_acos(inner / std::sqrt(nx * ny));
}

OrthogonalTransform procrustes_align(const DataMatrix& x, const DataMatrix& y) {
  require_same_stimuli(x, y);
  if (x.neurons() != y.neurons()) {
    throw DimensionMismatch("orthogonal alignment needs equal widths; zero-pad the narrower matrix");
  }
  const Matrix sigma_xy =
      center_columns(x.values()).transpose() * center_columns(y.values());
  // Tr[Sxy Q] is maximized by Q = V U^T for Sxy = U S V^T.
  Eigen::JacobiSVD<Matrix> svd(sigma_xy, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixV() * svd.matrixU().transpose()};
}

double procrustes_distance_by_alignment(const DataMatrix& x, const DataMatrix& y) {
  require_same_stimuli(x, y);
  const Index width = std::max(x.neurons(), y.neurons());
  const DataMatrix xp = zero_pad(x, width);
  const DataMatrix yp = zero_pad(y, width);
  const OrthogonalTransform t = procrustes_align(xp, yp);
  return (center_columns(xp.values()) - center_columns(yp.values()) * t.q).norm();
}

double procrustes_distance_squared(const DataMatrix& x, const DataMatrix& y) {
  const CovarianceTraces c = covariance_traces(x, y);
  return clamp_radicand(c.trace_x + c.trace_y - 2.0 * c.cross_nuclear, c.trace_x + c.trace_y);
}

double procrustes_distance(const DataMatrix& x, const DataMatrix& y) {
  return std::sqrt(procrustes_distance_squared(x, y));
}

double riemannian_shape_distance(const DataMatrix& x, const DataMatrix& y) {
  const CovarianceTraces c = covariance_traces(x, y);
  require_positive_traces(c.trace_x, c.trace_y, "Riemannian shape distance");
  return safe_acos(normalized_cosine(c.cross_nuclear, c.trace_x, c.trace_y));
}

double cka(const PsdMatrix& k_x, const PsdMatrix& k_y) {
  require_same_dim(k_x, k_y);
  const double nx = k_x.values().squaredNorm();
  const double ny = k_y.values().squaredNorm();
  if (!(nx > 0.0) || !(ny > 0.0)) {
    throw DegenerateInput("CKA is undefined for a zero kernel");
  }
  const double inner = k_x.values().cwiseProduct(k_y.values()).sum();
  return clamp_unit_interval(inner / std::sqrt(nx * ny));
}

double cka(const KernelPair& k) { return cka(k.k_x, k.k_y); }

double cka(const LowRankPsd& k_x, const LowRankPsd& k_y) {
  require_same_dim(k_x, k_y);
  const double nx = k_x.eigenvalues().squaredNorm();
  const double ny = k_y.eigenvalues().squaredNorm();
  if (!(nx > 0.0) || !(ny > 0.0)) {
    throw DegenerateInput("CKA is undefined for a zero kernel");
  }
  // Tr[Kx Ky] = ||Lx^{1/2} Ux^T Uy Ly^{1/2}||_F^2.
  const Matrix a = k_x.eigenvalues().cwiseSqrt().asDiagonal() *
                   (k_x.basis().transpose() * k_y.basis()) *
                   k_y.eigenvalues().cwiseSqrt().asDiagonal();
  return clamp_unit_interval(a.squaredNorm() / std::sqrt(nx * ny));
}

double fidelity(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol) {
  require_same_dim(k_x, k_y);
  const Matrix root = psd_sqrt(k_x, tol).values();
  return trace_sqrt(root * k_y.values() * root, tol);
}

double fidelity(const LowRankPsd& k_x, const LowRankPsd& k_y, const Tolerances& tol) {
  require_same_dim(k_x, k_y);
  if (k_x.rank() == 0 || k_y.rank() == 0) return 0.0;
  // In the eigenbasis of Kx, Kx^{1/2} Ky Kx^{1/2} = Ux A A^T Ux^T with
  // A = Lx^{1/2} Ux^T Uy Ly^{1/2}; its nonzero spectrum is that of A A^T.
  const Matrix a = k_x.eigenvalues().cwiseSqrt().asDiagonal() *
                   (k_x.basis().transpose() * k_y.basis()) *
                   k_y.eigenvalues().cwiseSqrt().asDiagonal();
  return a.rows() <= a.cols() ? trace_sqrt(a * a.transpose(), tol)
                              : trace_sqrt(a.transpose() * a, tol);
}

namespace {

template <typename Kernel>
double nbs_impl(const Kernel& k_x, const Kernel& k_y, const Tolerances& tol) {
  require_same_dim(k_x, k_y);
  const double tx = k_x.trace();
  const double ty = k_y.trace();
  require_positive_traces(tx, ty, "NBS");
  return normalized_cosine(fidelity(k_x, k_y, tol), tx, ty);
}

template <typename Kernel>
double bures_impl(const Kernel& k_x, const Kernel& k_y, const Tolerances& tol) {
  require_same_dim(k_x, k_y);
  const double tx = k_x.trace();
  const double ty = k_y.trace();
  return safe_sqrt(tx + ty - 2.0 * fidelity(k_x, k_y, tol), tx + ty);
}

}  // namespace

double nbs(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol) {
  return nbs_impl(k_x, k_y, tol);
}
double nbs(const KernelPair& k, const Tolerances& tol) { return nbs_impl(k.k_x, k.k_y, tol); }
double nbs(const LowRankPsd& k_x, const LowRankPsd& k_y, const Tolerances& tol) {
  return nbs_impl(k_x, k_y, tol);
}

double bures_distance(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol) {
  return bures_impl(k_x, k_y, tol);
}
double bures_distance(const KernelPair& k, const Tolerances& tol) {
  return bures_impl(k.k_x, k.k_y, tol);
}
double bures_distance(const LowRankPsd& k_x, const LowRankPsd& k_y, const Tolerances& tol) {
  return bures_impl(k_x, k_y, tol);
}

double normalized_procrustes(const DataMatrix& x, const DataMatrix& y) {
  if (x.neurons() != y.neurons()) {
    throw DimensionMismatch("normalized Procrustes distance needs equal neuron counts");
  }
  const double nm = static_cast<double>(x.neurons()) * static_cast<double>(x.stimuli());
  return procrustes_distance(x, y) / std::sqrt(nm);
}

double normalized_bures(const PsdMatrix& k_x, const PsdMatrix& k_y, Index neurons,
                        const Tolerances& tol) {
  if (neurons < 1) throw DimensionMismatch("neuron count must be positive");
  const double nm = static_cast<double>(neurons) * static_cast<double>(k_x.dim());
  return bures_distance(k_x, k_y, tol) / std::sqrt(nm);
}

double normalized_bures(const LowRankPsd& k_x, const LowRankPsd& k_y, Index neurons,
                        const Tolerances& tol) {
  if (neurons < 1) throw DimensionMismatch("neuron count must be positive");
  const double nm = static_cast<double>(neurons) * static_cast<double>(k_x.dim());
  return bures_distance(k_x, k_y, tol) / std::sqrt(nm);
}

Matrix rdm(const DataMatrix& x) {
  const Matrix& v = x.values();
  const Index m = v.rows();
  Matrix d = Matrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      d(i, j) = d(j, i) = (v.row(i) - v.row(j)).norm();
    }
  }
  return d;
}

DataMatrix zero_pad(const DataMatrix& x, Index target_cols) {
  if (target_cols < x.neurons()) {
    std::ostringstream os;
    os << "cannot pad " << x.neurons() << " columns down to " << target_cols;
    throw DimensionMismatch(os.str());
  }
  if (target_cols == x.neurons()) return x;
  Matrix padded = Matrix::Zero(x.stimuli(), target_cols);
  padded.leftCols(x.neurons()) = x.values();
  return DataMatrix(std::move(padded));
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<Measure, std::string_view>, 10> kMeasureNames{{
    {Measure::kAngular, "angular"},
    {Measure::kProcrustes, "procrustes"},
    {Measure::kRiemannian, "riemannian"},
    {Measure::kCka, "cka"},
    {Measure::kNbs, "nbs"},
    {Measure::kBures, "bures"},
    {Measure::kFidelity, "fidelity"},
    {Measure::kNormalizedProcrustes, "normalized_procrustes"},
    {Measure::kNormalizedBures, "normalized_bures"},
    {Measure::kRdm, "rdm"},
}};

// Kernel representation picked by size; both forms give the same values.
struct KernelCache {
  const DataMatrix& x;
  const DataMatrix& y;
  const Tolerances& tol;
  std::optional<KernelPair> dense;
  std::optional<std::pair<LowRankPsd, LowRankPsd>> factored;

  bool use_dense() const { return x.stimuli() <= kDenseKernelLimit; }

  const KernelPair& dense_pair() {
    if (!dense) dense = linear_kernels(x, y);
    return *dense;
  }
  const std::pair<LowRankPsd, LowRankPsd>& factored_pair() {
    if (!factored) {
      require_same_stimuli(x, y);
      factored.emplace(LowRankPsd::from_factor(center_columns(x.values())),
                       LowRankPsd::from_factor(center_columns(y.values())));
    }
    return *factored;
  }

  double cka_value() {
    if (use_dense()) return cka(dense_pair());
    return cka(factored_pair().first, factored_pair().second);
  }
  double fidelity_value() {
    if (use_dense()) return fidelity(dense_pair().k_x, dense_pair().k_y, tol);
    return fidelity(factored_pair().first, factored_pair().second, tol);
  }
  double nbs_value() {
    if (use_dense()) return nbs(dense_pair(), tol);
    return nbs(factored_pair().first, factored_pair().second, tol);
  }
  double bures_value() {
    if (use_dense()) return bures_distance(dense_pair(), tol);
    return bures_distance(factored_pair().first, factored_pair().second, tol);
  }
  double normalized_bures_value() {
    if (x.neurons() != y.neurons()) {
      throw DimensionMismatch("normalized Bures distance needs equal neuron counts");
    }
    if (use_dense()) return normalized_bures(dense_pair().k_x, dense_pair().k_y, x.neurons(), tol);
    return normalized_bures(factored_pair().first, factored_pair().second, x.neurons(), tol);
  }
};

}  // namespace

std::string_view measure_name(Measure m) {
  for (const auto& [measure, name] : kMeasureNames) {
    if (measure == m) return name;
  }
  return "unknown";
}

std::optional<Measure> parse_measure(std::string_view name) {
  for (const auto& [measure, n] : kMeasureNames) {
    if (n == name) return measure;
  }
  return std::nullopt;
}

const std::vector<Measure>& all_measures() {
  static const std::vector<Measure> measures = [] {
    std::vector<Measure> v;
    for (const auto& entry : kMeasureNames) v.push_back(entry.first);
    return v;
  }();
  return measures;
}

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNone: return "none";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kDegenerateInput: return "degenerate_input";
    case ErrorKind::kNotPsd: return "not_psd";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kInput: return "input";
  }
  return "unknown";
}

SimilarityReport compare(const DataMatrix& x, const DataMatrix& y,
                         const std::vector<Measure>& measures, const Tolerances& tol) {
  require_same_stimuli(x, y);
  SimilarityReport report;
  report.stimuli = x.stimuli();
  report.neurons_x = x.neurons();
  report.neurons_y = y.neurons();
  report.tolerances = tol;

  KernelCache kernels{x, y, tol, std::nullopt, std::nullopt};
  for (const Measure m : measures) {
    MeasureResult r{m, std::nullopt, std::nullopt, std::nullopt, ErrorKind::kNone, {}};
    try {
      switch (m) {
        case Measure::kAngular: r.value = angular_distance(x, y); break;
        case Measure::kProcrustes: r.value = procrustes_distance(x, y); break;
        case Measure::kRiemannian: r.value = riemannian_shape_distance(x, y); break;
        case Measure::kCka: r.value = kernels.cka_value(); break;
        case Measure::kNbs: r.value = kernels.nbs_value(); break;
        case Measure::kBures: r.value = kernels.bures_value(); break;
        case Measure::kFidelity: r.value = kernels.fidelity_value(); break;
        case Measure::kNormalizedProcrustes: r.value = normalized_procrustes(x, y); break;
        case Measure::kNormalizedBures: r.value = kernels.normalized_bures_value(); break;
        case Measure::kRdm:
          r.matrix_x = rdm(x);
          r.matrix_y = rdm(y);
          break;
      }
    } catch (const DimensionMismatch& e) {
      r.error = ErrorKind::kDimensionMismatch;
      r.message = e.what();
    } catch (const DegenerateInput& e) {
      r.error = ErrorKind::kDegenerateInput;
      r.message = e.what();
    } catch (const NotPsd& e) {
      r.error = ErrorKind::kNotPsd;
      r.message = e.what();
    } catch (const NumericalError& e) {
      r.error = ErrorKind::kNumerical;
      r.message = e.what();
    } catch (const InputError& e) {
      r.error = ErrorKind::kInput;
      r.message = e.what();
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

}  // namespace repsim
