#include "repsim/duality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace repsim {

namespace {

bool within(double err, double magnitude, double tol) {
  return err <= tol * (1.0 + std::abs(magnitude));
}

void require_positive_traces(const PsdMatrix& k_x, const PsdMatrix& k_y, const char* what) {
  if (!(k_x.trace() > 0.0) || !(k_y.trace() > 0.0)) {
    throw DegenerateInput(std::string(what) + " is undefined for a zero kernel");
  }
}

Vector sorted_descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

BoundReport make_bound_report(double lower, double value, double upper) {
  BoundReport r;
  r.lower = lower;
  r.value = value;
  r.upper = upper;
  r.slack_lower = value - lower;
  r.slack_upper = upper - value;
  r.saturated_lower = std::abs(r.slack_lower) <= kBoundSlackTol;
  r.saturated_upper = std::abs(r.slack_upper) <= kBoundSlackTol;
  r.valid = r.slack_lower >= -kBoundSlackTol * (1.0 + std::abs(lower)) &&
            r.slack_upper >= -kBoundSlackTol * (1.0 + std::abs(upper));
  return r;
}

EnvelopeReport envelope_bounds(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol) {
  EnvelopeReport r;
  r.cka = cka(k_x, k_y);
  r.nbs = nbs(k_x, k_y, tol);
  r.rank_x = numerical_rank(k_x.values(), tol);
  r.rank_y = numerical_rank(k_y.values(), tol);
  r.rank_tol = tol.rank_tol;
  const double rx = static_cast<double>(r.rank_x);
  const double ry = static_cast<double>(r.rank_y);
  r.bounds = make_bound_report(r.cka / std::sqrt(rx * ry), r.nbs * r.nbs, std::min(rx, ry) * r.cka);
  return r;
}

EnvelopeReport envelope_bounds(const KernelPair& k, const Tolerances& tol) {
  return envelope_bounds(k.k_x, k.k_y, tol);
}

double sqrt_cka(const PsdMatrix& k_x, const PsdMatrix& k_y, const Tolerances& tol) {
  if (k_x.dim() != k_y.dim()) throw DimensionMismatch("kernels must have equal size");
  require_positive_traces(k_x, k_y, "square-root CKA");
  const Matrix root_x = psd_sqrt(k_x, tol).values();
  const Matrix root_y = psd_sqrt(k_y, tol).values();
  const double overlap = root_x.cwiseProduct(root_y).sum();
  return clamp_unit_interval(overlap / std::sqrt(k_x.trace() * k_y.trace()));
}

double sqrt_cka(const KernelPair& k, const Tolerances& tol) { return sqrt_cka(k.k_x, k.k_y, tol); }

FidelityBoundReport fuchs_van_de_graaf(const PsdMatrix& k_x, const PsdMatrix& k_y,
                                       const Tolerances& tol) {
  FidelityBoundReport r;
  r.nbs = nbs(k_x, k_y, tol);
  r.sqrt_cka = sqrt_cka(k_x, k_y, tol);
  r.bounds = make_bound_report(1.0 - r.nbs, 1.0 - r.sqrt_cka, safe_sqrt(1.0 - r.nbs * r.nbs, 1.0));
  return r;
}

FidelityBoundReport fuchs_van_de_graaf(const KernelPair& k, const Tolerances& tol) {
  return fuchs_van_de_graaf(k.k_x, k.k_y, tol);
}

double uhlmann_overlap(const DataMatrix& x, const DataMatrix& y) {
  if (x.stimuli() != y.stimuli() || x.neurons() != y.neurons()) {
    throw DimensionMismatch("overlap maximization needs matrices of identical shape");
  }
  return cross_nuclear_norm(x.values(), y.values());
}

ExtrapolationResult euclidean_extrapolation(const PsdMatrix& k_x, const PsdMatrix& k_y,
                                            double alpha, const Tolerances& tol) {
  if (k_x.dim() != k_y.dim()) throw DimensionMismatch("kernels must have equal size");
  ExtrapolationResult r;
  r.matrix = alpha * k_x.values() + (1.0 - alpha) * k_y.values();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(r.matrix, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigensolver failed on the extrapolated kernel");
  }
  const Vector& ev = solver.eigenvalues();
  r.min_eigenvalue = ev(0);
  const double largest = ev.cwiseAbs().maxCoeff();
  r.is_psd = r.min_eigenvalue >= -tol.eig_clamp_tol * largest;
  return r;
}

DualityReport verify_duality(const DataMatrix& x, const DataMatrix& y, const Tolerances& tol) {
  DualityReport r;
  try {
    // Covariance path.
    const Matrix xc = center_columns(x.values());
    const Matrix yc = center_columns(y.values());
    r.nuclear = cross_nuclear_norm(xc, yc);
    r.procrustes = procrustes_distance(x, y);

    // Kernel path. The normalized pair is undefined for constant
    // representations and throws before the report is marked passing.
    if (x.stimuli() <= kDenseKernelLimit) {
      const KernelPair k = linear_kernels(x, y);
      r.fidelity = fidelity(k.k_x, k.k_y, tol);
      r.bures = bures_distance(k, tol);
      r.cos_theta = std::cos(riemannian_shape_distance(x, y));
      r.nbs = nbs(k, tol);
    } else {
      const LowRankPsd kx = LowRankPsd::from_factor(xc);
      const LowRankPsd ky = LowRankPsd::from_factor(yc);
      r.fidelity = fidelity(kx, ky, tol);
      r.bures = bures_distance(kx, ky, tol);
      r.cos_theta = std::cos(riemannian_shape_distance(x, y));
      r.nbs = nbs(kx, ky, tol);
    }
    r.bures_vs_procrustes_abs_err = std::abs(r.bures - r.procrustes);
    r.fidelity_vs_nuclear_abs_err = std::abs(r.fidelity - r.nuclear);
    r.nbs_vs_cos_theta_abs_err = std::abs(r.nbs - r.cos_theta);

    r.pass = within(r.bures_vs_procrustes_abs_err, r.procrustes, tol.equality_tol) &&
             within(r.fidelity_vs_nuclear_abs_err, r.nuclear, tol.equality_tol) &&
             within(r.nbs_vs_cos_theta_abs_err, r.cos_theta, tol.equality_tol);
  } catch (const Error& e) {
    r.pass = false;
    r.error = e.what();
  }
  return r;
}

SpectraReport product_spectra(const Matrix& x, const Matrix& y, const Tolerances& tol) {
  if (x.rows() != y.rows()) throw DimensionMismatch("spectra need equal row counts");
  SpectraReport r;
  const Matrix xty = x.transpose() * y;
  const Index rank = numerical_rank(xty, tol);

  const Matrix a = xty * xty.transpose();
  const Matrix kx = x * x.transpose();
  const Matrix ky = y * y.transpose();
  const Matrix b = kx * ky;
  const Matrix root = psd_sqrt(PsdMatrix::unchecked(kx), tol).values();
  const Matrix c = root * ky * root;

  Eigen::SelfAdjointEigenSolver<Matrix> ea(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> ec(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  Eigen::EigenSolver<Matrix> eb(b, false);
  if (ea.info() != Eigen::Success || ec.info() != Eigen::Success || eb.info() != Eigen::Success) {
    throw NumericalError("eigensolver failed while comparing product spectra");
  }
  auto top = [rank](std::vector<double> values) {
    Vector s = sorted_descending(std::move(values));
    return Vector(s.head(std::min<Index>(rank, s.size())));
  };
  const Vector& va = ea.eigenvalues();
  const Vector& vc = ec.eigenvalues();
  r.a = top({va.data(), va.data() + va.size()});
  r.c = top({vc.data(), vc.data() + vc.size()});
  std::vector<double> vb;
  for (Index i = 0; i < eb.eigenvalues().size(); ++i) vb.push_back(eb.eigenvalues()(i).real());
  r.b = top(std::move(vb));

  r.scale = r.a.size() ? r.a(0) : 0.0;
  if (r.a.size() != r.b.size() || r.a.size() != r.c.size()) {
    r.max_abs_diff = std::numeric_limits<double>::infinity();
  } else if (r.a.size() > 0) {
    r.max_abs_diff = std::max((r.a - r.b).cwiseAbs().maxCoeff(), (r.a - r.c).cwiseAbs().maxCoeff());
  }
  r.pass = r.max_abs_diff <= tol.equality_tol * r.scale;
  return r;
}

}  // namespace repsim
