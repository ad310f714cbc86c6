#include "repsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace repsim {

namespace {

// Runs body(i) for i in [0, n). The first exception thrown by any worker is
// rethrown on the calling thread after all workers stop.
template <typename Body>
void parallel_for(Index n, unsigned threads, Body body) {
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<Index>(workers, std::max<Index>(n, 1)));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

Matrix centering_matrix(Index m) {
  return Matrix::Identity(m, m) - Matrix::Constant(m, m, 1.0 / static_cast<double>(m));
}

// Square factor of a PSD matrix: F^T F = a.
Matrix symmetric_factor(const Matrix& a) {
  return psd_sqrt(PsdMatrix::unchecked(project_psd(a))).values();
}

double normalized_limit(double radicand, double scale, Index n) {
  return std::sqrt(clamp_radicand(radicand, scale) / static_cast<double>(n));
}

void require(bool ok, const char* message) {
  if (!ok) throw InputError(message);
}

}  // namespace

std::string_view scheme_name(EnvelopeScheme s) {
  return s == EnvelopeScheme::kIndependent ? "independent" : "perturbed";
}

std::optional<EnvelopeScheme> parse_scheme(std::string_view name) {
  if (name == "independent") return EnvelopeScheme::kIndependent;
  if (name == "perturbed") return EnvelopeScheme::kPerturbed;
  return std::nullopt;
}

void EnvelopeConfig::validate() const {
  require(trials >= 1, "envelope trials must be at least 1");
  require(dim >= 1, "envelope dimension must be at least 1");
  require(dof_x >= 1 && dof_y >= 1 && dof_eps >= 1, "Wishart degrees of freedom must be at least 1");
}

KernelPair sample_envelope_pair(const EnvelopeConfig& cfg, Index trial) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
  const Matrix root_x = sample_wishart(cfg.dim, cfg.dof_x, rng).values();
  Matrix root_y;
  if (cfg.scheme == EnvelopeScheme::kIndependent) {
    root_y = sample_wishart(cfg.dim, cfg.dof_y, rng).values();
  } else {
    root_y = root_x + sample_wishart(cfg.dim, cfg.dof_eps, rng).values();
  }
  return {PsdMatrix::gram(root_x), PsdMatrix::gram(root_y)};
}

std::vector<EnvelopeRow> run_envelope(const EnvelopeConfig& cfg) {
  cfg.validate();
  std::vector<EnvelopeRow> rows(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, cfg.threads, [&](Index t) {
    const KernelPair k = sample_envelope_pair(cfg, t);
    const EnvelopeReport env = envelope_bounds(k);
    const FidelityBoundReport fvg = fuchs_van_de_graaf(k);
    EnvelopeRow& row = rows[static_cast<std::size_t>(t)];
    row.trial = t;
    row.scheme = cfg.scheme;
    row.cka = env.cka;
    row.nbs = env.nbs;
    row.sqrt_cka = fvg.sqrt_cka;
    row.rank_x = env.rank_x;
    row.rank_y = env.rank_y;
    row.envelope = env.bounds;
    row.fidelity = fvg.bounds;
  });
  return rows;
}

Table envelope_table(const std::vector<EnvelopeRow>& rows) {
  Table t;
  t.columns = {"trial",          "scheme",         "cka",          "nbs",
               "sqrt_cka",       "rank_x",         "rank_y",       "envelope_lower",
               "nbs_squared",    "envelope_upper", "fidelity_lower", "one_minus_sqrt_cka",
               "fidelity_upper", "valid"};
  for (const auto& r : rows) {
    t.add_row({std::int64_t{r.trial}, std::string(scheme_name(r.scheme)), r.cka, r.nbs, r.sqrt_cka,
               std::int64_t{r.rank_x}, std::int64_t{r.rank_y}, r.envelope.lower, r.envelope.value,
               r.envelope.upper, r.fidelity.lower, r.fidelity.value, r.fidelity.upper,
               std::int64_t{r.valid() ? 1 : 0}});
  }
  return t;
}

EnvelopeSummary summarize(const std::vector<EnvelopeRow>& rows) {
  EnvelopeSummary s;
  s.trials = static_cast<Index>(rows.size());
  s.min_slack = rows.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (!r.valid()) ++s.violations;
    s.min_slack = std::min({s.min_slack, r.envelope.slack_lower, r.envelope.slack_upper,
                            r.fidelity.slack_lower, r.fidelity.slack_upper});
  }
  return s;
}

// ---------------------------------------------------------------------------

std::string_view mode_name(ConvergenceMode m) {
  return m == ConvergenceMode::kStimuli ? "stimuli" : "neurons";
}

std::optional<ConvergenceMode> parse_mode(std::string_view name) {
  if (name == "stimuli") return ConvergenceMode::kStimuli;
  if (name == "neurons") return ConvergenceMode::kNeurons;
  return std::nullopt;
}

std::vector<Index> geometric_grid(Index first, Index last, Index factor) {
  if (first < 1 || factor < 2) throw InputError("geometric grid needs first >= 1 and factor >= 2");
  std::vector<Index> grid;
  for (Index s = first; s <= last; s *= factor) grid.push_back(s);
  return grid;
}

void ConvergenceConfig::validate() const {
  require(!sizes.empty(), "convergence grid is empty");
  require(sizes.front() >= 2, "convergence sizes must be at least 2");
  require(std::adjacent_find(sizes.begin(), sizes.end(), std::greater_equal<>()) == sizes.end(),
          "convergence sizes must be strictly increasing");
  require(trials >= 1, "convergence trials must be at least 1");
  require(fixed_dim >= 2, "convergence fixed dimension must be at least 2");
  require(dense_kernel_limit >= 1, "dense kernel limit must be positive");
}

KernelPair extrapolation_pair(std::uint64_t seed, Index stimuli, Index neurons) {
  Rng rng(seed);
  const DataMatrix x(standard_normal(stimuli, neurons, rng));
  const DataMatrix y(standard_normal(stimuli, neurons, rng));
  return linear_kernels(x, y);
}

ExtrapolationSearch find_extrapolation_seed(std::uint64_t first_seed, Index stimuli, Index neurons,
                                            double alpha, double threshold, Index max_tries) {
  ExtrapolationSearch s;
  for (Index i = 0; i < max_tries; ++i) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
    const KernelPair k = extrapolation_pair(seed, stimuli, neurons);
    const ExtrapolationResult r = euclidean_extrapolation(k.k_x, k.k_y, alpha);
    s.tried = i + 1;
    if (r.min_eigenvalue < -threshold) {
      s.seed = seed;
      s.min_eigenvalue = r.min_eigenvalue;
      s.found = true;
      return s;
    }
  }
  return s;
}

Matrix project_psd(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("PSD projection needs a square matrix");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed in PSD projection");
  const Vector clamped = solver.eigenvalues().cwiseMax(0.0);
  const Matrix& v = solver.eigenvectors();
  return v * clamped.asDiagonal() * v.transpose();
}

ConvergenceTruth make_truth(const ConvergenceConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.truth_seed);
  const Index n = cfg.fixed_dim;
  ConvergenceTruth truth;
  truth.mode = cfg.mode;
  if (cfg.mode == ConvergenceMode::kStimuli) {
    if (cfg.shared_truth) {
      const Matrix w = standard_normal(n, n, rng);
      const Matrix root = symmetric_factor(w * w.transpose() / static_cast<double>(n));
      truth.factor.resize(n, 2 * n);
      truth.factor << root, root;
    } else {
      const Matrix w = standard_normal(2 * n, 2 * n, rng);
      truth.factor = symmetric_factor(w * w.transpose() / static_cast<double>(2 * n));
    }
    const Matrix joint = truth.factor.transpose() * truth.factor;
    const double tx = joint.topLeftCorner(n, n).trace();
    const double ty = joint.bottomRightCorner(n, n).trace();
    const double cross = nuclear_norm(joint.topRightCorner(n, n));
    truth.limit = normalized_limit(tx + ty - 2.0 * cross, tx + ty, n);
  } else {
    // Centered factors make K* = F F^T annihilate the all-ones vector.
    const Matrix c = centering_matrix(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    truth.factor_x = c * standard_normal(n, n, rng) * scale;
    truth.factor_y = cfg.shared_truth ? truth.factor_x : Matrix(c * standard_normal(n, n, rng) * scale);
    const PsdMatrix kx = PsdMatrix::gram(truth.factor_x);
    const PsdMatrix ky = PsdMatrix::gram(truth.factor_y);
    const double f = fidelity(kx, ky);
    truth.limit = normalized_limit(kx.trace() + ky.trace() - 2.0 * f, kx.trace() + ky.trace(), n);
  }
  return truth;
}

namespace {

// Kernel-side normalized Bures distance, dense or eigen-factored by size.
double kernel_side(const DataMatrix& x, const DataMatrix& y, Index dense_limit) {
  if (x.stimuli() <= dense_limit) {
    const KernelPair k = linear_kernels(x, y);
    return normalized_bures(k.k_x, k.k_y, x.neurons());
  }
  const LowRankPsd kx = LowRankPsd::from_factor(center_columns(x.values()));
  const LowRankPsd ky = LowRankPsd::from_factor(center_columns(y.values()));
  return normalized_bures(kx, ky, x.neurons());
}

ConvergenceRow measure_pair(const ConvergenceConfig& cfg, const ConvergenceTruth& truth,
                            const Matrix& x, const Matrix& y, Index size, Index trial) {
  const DataMatrix dx(x);
  const DataMatrix dy(y);
  ConvergenceRow row;
  row.mode = cfg.mode;
  row.size = size;
  row.trial = trial;
  row.rho = normalized_procrustes(dx, dy);
  row.b = kernel_side(dx, dy, cfg.dense_kernel_limit);
  row.truth = truth.limit;
  const double estimate = cfg.mode == ConvergenceMode::kStimuli ? row.rho : row.b;
  row.abs_error = std::abs(estimate - truth.limit);
  row.pair_diff = std::abs(row.rho - row.b);
  return row;
}

template <typename Draw>
std::vector<ConvergenceRow> run_grid(const ConvergenceConfig& cfg, const ConvergenceTruth& truth,
                                     Draw draw) {
  const Index per_trial = static_cast<Index>(cfg.sizes.size());
  std::vector<ConvergenceRow> rows(static_cast<std::size_t>(cfg.trials * per_trial));
  parallel_for(cfg.trials, cfg.threads, [&](Index t) {
    const std::uint64_t trial_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    for (Index s = 0; s < per_trial; ++s) {
      Rng rng(derive_seed(trial_seed, static_cast<std::uint64_t>(s)));
      const Index size = cfg.sizes[static_cast<std::size_t>(s)];
      auto [x, y] = draw(size, rng);
      rows[static_cast<std::size_t>(t * per_trial + s)] = measure_pair(cfg, truth, x, y, size, t);
    }
  });
  return rows;
}

}  // namespace

std::vector<ConvergenceRow> run_convergence_stimuli(const ConvergenceConfig& cfg) {
  if (cfg.mode != ConvergenceMode::kStimuli) throw InputError("configuration is not in stimuli mode");
  const ConvergenceTruth truth = make_truth(cfg);
  const Index n = cfg.fixed_dim;
  return run_grid(cfg, truth, [&](Index m, Rng& rng) {
    const Matrix joint = standard_normal(m, truth.factor.rows(), rng) * truth.factor;
    return std::pair<Matrix, Matrix>{joint.leftCols(n), joint.rightCols(n)};
  });
}

std::vector<ConvergenceRow> run_convergence_neurons(const ConvergenceConfig& cfg) {
  if (cfg.mode != ConvergenceMode::kNeurons) throw InputError("configuration is not in neurons mode");
  const ConvergenceTruth truth = make_truth(cfg);
  return run_grid(cfg, truth, [&](Index n, Rng& rng) {
    const Matrix x = truth.factor_x * standard_normal(truth.factor_x.cols(), n, rng);
    const Matrix y = truth.factor_y * standard_normal(truth.factor_y.cols(), n, rng);
    return std::pair<Matrix, Matrix>{x, y};
  });
}

std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& cfg) {
  return cfg.mode == ConvergenceMode::kStimuli ? run_convergence_stimuli(cfg)
                                               : run_convergence_neurons(cfg);
}

Table convergence_table(const std::vector<ConvergenceRow>& rows) {
  Table t;
  t.columns = {"mode", "size", "trial", "rho", "b", "truth", "abs_error", "pair_diff"};
  for (const auto& r : rows) {
    t.add_row({std::string(mode_name(r.mode)), std::int64_t{r.size}, std::int64_t{r.trial}, r.rho,
               r.b, r.truth, r.abs_error, r.pair_diff});
  }
  return t;
}

ConvergenceSummary summarize(const std::vector<ConvergenceRow>& rows) {
  ConvergenceSummary s;
  std::vector<Index> sizes;
  for (const auto& r : rows) {
    if (std::find(sizes.begin(), sizes.end(), r.size) == sizes.end()) sizes.push_back(r.size);
  }
  std::sort(sizes.begin(), sizes.end());
  for (Index size : sizes) {
    ConvergencePoint p;
    p.size = size;
    std::vector<double> errors;
    for (const auto& r : rows) {
      if (r.size != size) continue;
      errors.push_back(r.abs_error);
      p.max_pair_diff = std::max(p.max_pair_diff, r.pair_diff);
    }
    p.median_abs_error = median(std::move(errors));
    s.max_pair_diff = std::max(s.max_pair_diff, p.max_pair_diff);
    s.points.push_back(p);
  }
  if (!rows.empty()) s.truth = rows.front().truth;
  s.strictly_decreasing = !s.points.empty();
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    if (!(s.points[i].median_abs_error < s.points[i - 1].median_abs_error)) {
      s.strictly_decreasing = false;
    }
  }
  if (!s.points.empty()) {
    const double last = s.points.back().median_abs_error;
    s.final_relative_error = s.truth > 0.0 ? last / s.truth : last;
  }
  return s;
}

}  // namespace repsim
