#include "repsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace repsim {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Eigenvalues below kNoiseFactor * n * eps * |lambda|_max are indistinguishable
// from zero for a backward-stable symmetric solver.
constexpr double kNoiseFactor = 32.0;

// Domain violations up to this relative size are round-off and get clamped.
constexpr double kDomainTol = 1e-10;
// Radicands (and 1 - |cos|) below this relative size are below the resolution
// of the difference formulas and are snapped to exactly zero.
constexpr double kResolutionFloor = 1e-12;

double noise_floor(Index n, double magnitude) {
  return kNoiseFactor * static_cast<double>(std::max<Index>(n, 1)) * kEps * magnitude;
}

std::string describe(const Matrix& a) {
  std::ostringstream os;
  os << a.rows() << "x" << a.cols() << " matrix (max |entry| = "
     << (a.size() ? a.cwiseAbs().maxCoeff() : 0.0) << ", ||A||_F = " << a.norm() << ")";
  return os.str();
}

}  // namespace

void Tolerances::validate() const {
  if (!(symmetry_tol > 0 && eig_clamp_tol > 0 && rank_tol > 0 && equality_tol > 0)) {
    throw std::invalid_argument("tolerances must be strictly positive");
  }
}

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw InputError("data matrix must have at least one row and one column");
  }
  if (!all_finite(values_)) {
    throw InputError("data matrix contains non-finite entries");
  }
}

PsdMatrix::PsdMatrix(const Matrix& values, const Tolerances& tol) {
  if (values.rows() != values.cols()) {
    throw DimensionMismatch("PSD matrix must be square, got " + describe(values));
  }
  if (!all_finite(values)) {
    throw NotPsd("PSD matrix contains non-finite entries");
  }
  const double scale = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  const double asym = values.size() ? (values - values.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > tol.symmetry_tol * scale) {
    std::ostringstream os;
    os << "matrix is not symmetric: max |A - A^T| = " << asym << " exceeds "
       << tol.symmetry_tol << " * " << scale;
    throw NotPsd(os.str());
  }
  values_ = 0.5 * (values + values.transpose());
  psd_eigen(values_, tol);  // throws NotPsd
}

PsdMatrix PsdMatrix::gram(const Matrix& factor) {
  return unchecked(factor * factor.transpose());
}

PsdMatrix PsdMatrix::unchecked(const Matrix& symmetric) {
  PsdMatrix k;
  k.values_ = 0.5 * (symmetric + symmetric.transpose());
  return k;
}

LowRankPsd LowRankPsd::from_factor(const Matrix& factor) {
  if (factor.size() == 0) {
    return LowRankPsd(Matrix(factor.rows(), 0), Vector(0));
  }
  Eigen::BDCSVD<Matrix> svd(factor, Eigen::ComputeThinU);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("SVD failed to converge on " + describe(factor));
  }
  const Vector& s = svd.singularValues();
  const double floor = noise_floor(std::max(factor.rows(), factor.cols()), s.size() ? s(0) : 0.0);
  Index r = 0;
  while (r < s.size() && s(r) > floor) ++r;
  return LowRankPsd(svd.matrixU().leftCols(r), s.head(r).array().square().matrix());
}

LowRankPsd LowRankPsd::from_psd(const PsdMatrix& k, const Tolerances& tol) {
  const SymmetricEigen eig = psd_eigen(k.values(), tol);
  std::vector<Index> keep;
  for (Index i = eig.values.size() - 1; i >= 0; --i) {
    if (eig.values(i) > 0) keep.push_back(i);
  }
  Matrix basis(k.dim(), static_cast<Index>(keep.size()));
  Vector lambda(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    basis.col(static_cast<Index>(j)) = eig.vectors.col(keep[j]);
    lambda(static_cast<Index>(j)) = eig.values(keep[j]);
  }
  return LowRankPsd(std::move(basis), std::move(lambda));
}

PsdMatrix LowRankPsd::dense() const {
  return PsdMatrix::unchecked(basis_ * eigenvalues_.asDiagonal() * basis_.transpose());
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

Matrix center_columns(const Matrix& x) {
  if (x.rows() == 0) return x;
  Matrix c = x.rowwise() - x.colwise().mean();
  // A column whose deviations are at the rounding level of its own entries is
  // constant; store exact zeros so degeneracy is detectable downstream.
  const double level = 4.0 * static_cast<double>(x.rows()) * kEps;
  for (Index j = 0; j < c.cols(); ++j) {
    const double magnitude = x.col(j).cwiseAbs().maxCoeff();
    if (c.col(j).cwiseAbs().maxCoeff() <= level * magnitude) c.col(j).setZero();
  }
  return c;
}

DataMatrix center_columns(const DataMatrix& x) { return DataMatrix(center_columns(x.values())); }

Vector singular_values(const Matrix& a) {
  if (a.size() == 0) return Vector(0);
  if (!all_finite(a)) {
    throw NumericalError("SVD input has non-finite entries: " + describe(a));
  }
  Eigen::BDCSVD<Matrix> svd(a);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("SVD failed to converge on " + describe(a));
  }
  return svd.singularValues();
}

double nuclear_norm(const Matrix& a) { return singular_values(a).sum(); }

double cross_nuclear_norm(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionMismatch("cross product needs equal row counts");
  }
  const Index m = a.rows();
  if (m >= std::min(a.cols(), b.cols())) {
    return nuclear_norm(a.transpose() * b);
  }
  // a^T = Qa Ra, b^T = Qb Rb with Ra, Rb m x m, hence a^T b = Qa (Ra Rb^T) Qb^T.
  const Eigen::HouseholderQR<Matrix> qa(a.transpose());
  const Eigen::HouseholderQR<Matrix> qb(b.transpose());
  const Matrix ra = qa.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  const Matrix rb = qb.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  return nuclear_norm(ra * rb.transpose());
}

SymmetricEigen psd_eigen(const Matrix& symmetric, const Tolerances& tol) {
  if (symmetric.rows() != symmetric.cols()) {
    throw DimensionMismatch("eigendecomposition needs a square matrix, got " + describe(symmetric));
  }
  if (!all_finite(symmetric)) {
    throw NotPsd("matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver failed on " + describe(symmetric));
  }
  SymmetricEigen out{solver.eigenvalues(), solver.eigenvectors()};
  const Index n = out.values.size();
  if (n == 0) return out;
  const double largest = out.values.cwiseAbs().maxCoeff();
  const double floor = noise_floor(n, largest);
  for (Index i = 0; i < n; ++i) {
    double& v = out.values(i);
    if (v < -tol.eig_clamp_tol * largest) {
      std::ostringstream os;
      os << "matrix is not PSD: eigenvalue " << v << " below -" << tol.eig_clamp_tol << " * "
         << largest;
      throw NotPsd(os.str());
    }
    if (v <= floor) v = 0.0;
  }
  return out;
}

PsdMatrix psd_sqrt(const PsdMatrix& k, const Tolerances& tol) {
  const SymmetricEigen eig = psd_eigen(k.values(), tol);
  return PsdMatrix::unchecked(eig.vectors * eig.values.cwiseSqrt().asDiagonal() *
                              eig.vectors.transpose());
}

double trace_sqrt(const Matrix& symmetric, const Tolerances& tol) {
  const Matrix sym = 0.5 * (symmetric + symmetric.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver failed on " + describe(sym));
  }
  const Vector& values = solver.eigenvalues();
  if (values.size() == 0) return 0.0;
  const double largest = values.cwiseAbs().maxCoeff();
  const double floor = noise_floor(values.size(), largest);
  double total = 0.0;
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    if (v < -tol.eig_clamp_tol * largest) {
      std::ostringstream os;
      os << "matrix is not PSD: eigenvalue " << v << " below -" << tol.eig_clamp_tol << " * "
         << largest;
      throw NotPsd(os.str());
    }
    if (v > floor) total += std::sqrt(v);
  }
  return total;
}

Index numerical_rank(const Matrix& a, const Tolerances& tol) {
  if (a.size() == 0) return 0;
  const Vector s = singular_values(a);
  if (s(0) == 0.0) return 0;
  const double cutoff = tol.rank_tol * s(0) * static_cast<double>(std::max(a.rows(), a.cols()));
  return static_cast<Index>((s.array() > cutoff).count());
}

double clamp_radicand(double radicand, double scale) {
  const double s = std::abs(scale);
  if (radicand < -kDomainTol * s || !std::isfinite(radicand)) {
    std::ostringstream os;
    os << "negative radicand " << radicand << " exceeds round-off allowance at scale " << s;
    throw NumericalError(os.str());
  }
  return radicand <= kResolutionFloor * s ? 0.0 : radicand;
}

double clamp_unit_interval(double value) {
  if (!(value >= -kDomainTol && value <= 1.0 + kDomainTol)) {
    std::ostringstream os;
    os << "value " << value << " outside [0, 1] beyond round-off";
    throw NumericalError(os.str());
  }
  return std::clamp(value, 0.0, 1.0);
}

double clamp_cosine(double value) {
  if (!(std::abs(value) <= 1.0 + kDomainTol)) {
    std::ostringstream os;
    os << "cosine " << value << " outside [-1, 1] beyond round-off";
    throw NumericalError(os.str());
  }
  if (value >= 1.0 - kResolutionFloor) return 1.0;
  if (value <= -1.0 + kResolutionFloor) return -1.0;
  return value;
}

double safe_sqrt(double radicand, double scale) {
  return std::sqrt(clamp_radicand(radicand, scale));
}

double safe_acos(double cosine) { return std::acos(clamp_cosine(cosine)); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  return g;
}

PsdMatrix sample_wishart(Index p, Index dof, Rng& rng) {
  if (p < 1 || dof < 1) {
    throw std::invalid_argument("Wishart dimension and degrees of freedom must be >= 1");
  }
  return PsdMatrix::gram(standard_normal(p, dof, rng));
}

Matrix random_orthogonal(Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("orthogonal matrix dimension must be >= 1");
  const Eigen::HouseholderQR<Matrix> qr(standard_normal(n, n, rng));
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (Index i = 0; i < n; ++i) {
    if (r(i, i) < 0) q.col(i) *= -1.0;
  }
  return q;
}

}  // namespace repsim
