#pragma once

// Seeded experiment harnesses: the Wishart scatter behind the CKA/NBS
// envelopes and the large-sample convergence of the normalized distances.
// Every trial draws from its own stream derive_seed(seed, trial), so rows do
// not depend on thread count or execution order.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "repsim/duality.hpp"
#include "repsim/table.hpp"

namespace repsim {

enum class EnvelopeScheme { kIndependent, kPerturbed };

std::string_view scheme_name(EnvelopeScheme s);
std::optional<EnvelopeScheme> parse_scheme(std::string_view name);

struct EnvelopeConfig {
  Index dim = 10;
  Index dof_x = 1;
  Index dof_y = 5;
  Index dof_eps = 4;
  Index trials = 1000;
  std::uint64_t seed = 0;
  EnvelopeScheme scheme = EnvelopeScheme::kIndependent;
  unsigned threads = 0;  // 0: hardware concurrency

  // Throws InputError on trials < 1 or any dimension / dof < 1.
  void validate() const;
};

struct EnvelopeRow {
  Index trial = 0;
  EnvelopeScheme scheme = EnvelopeScheme::kIndependent;
  double cka = 0.0;
  double nbs = 0.0;
  double sqrt_cka = 0.0;
  Index rank_x = 0;
  Index rank_y = 0;
  BoundReport envelope;  // lower <= NBS^2 <= upper
  BoundReport fidelity;  // 1 - NBS <= 1 - sqrt_cka <= sqrt(1 - NBS^2)

  bool valid() const { return envelope.valid && fidelity.valid; }
};

// The kernel pair of one trial. Independent: Kx^{1/2} ~ W(I, dof_x) and
// Ky^{1/2} ~ W(I, dof_y). Perturbed: Ky^{1/2} = Kx^{1/2} + eps with
// eps ~ W(I, dof_eps). The kernels are the squares of these roots and are
// not centered.
KernelPair sample_envelope_pair(const EnvelopeConfig& cfg, Index trial);

std::vector<EnvelopeRow> run_envelope(const EnvelopeConfig& cfg);
Table envelope_table(const std::vector<EnvelopeRow>& rows);

struct EnvelopeSummary {
  Index trials = 0;
  Index violations = 0;
  double min_slack = 0.0;  // smallest of the four slacks over all rows
};

EnvelopeSummary summarize(const std::vector<EnvelopeRow>& rows);

// ---------------------------------------------------------------------------

enum class ConvergenceMode { kStimuli, kNeurons };

std::string_view mode_name(ConvergenceMode m);
std::optional<ConvergenceMode> parse_mode(std::string_view name);

std::vector<Index> geometric_grid(Index first, Index last, Index factor = 2);

struct ConvergenceConfig {
  ConvergenceMode mode = ConvergenceMode::kStimuli;
  // Neurons per network in stimuli mode, stimuli in neurons mode.
  Index fixed_dim = 10;
  std::vector<Index> sizes = geometric_grid(16, 4096);
  Index trials = 200;
  std::uint64_t seed = 0;
  std::uint64_t truth_seed = 1;
  // Stimuli mode: identical networks. Neurons mode: K*_X = K*_Y with
  // independently drawn columns. Both make the limit zero.
  bool shared_truth = false;
  unsigned threads = 0;
  // Above this many stimuli the kernel side uses eigen-factored kernels.
  Index dense_kernel_limit = 128;

  // Throws InputError unless sizes are nonempty, >= 2 and strictly
  // increasing, trials >= 1 and fixed_dim >= 2.
  void validate() const;
};

// Ground truth as a sampling factor. Stimuli mode: each stimulus row is
// z^T F with z ~ N(0, I), so the joint neuron covariance is F^T F with X in
// the first fixed_dim columns. Neurons mode: each neuron column of X is
// F_x z, likewise for Y, so K* = F F^T with F centered.
struct ConvergenceTruth {
  ConvergenceMode mode = ConvergenceMode::kStimuli;
  Matrix factor;    // stimuli mode
  Matrix factor_x;  // neurons mode
  Matrix factor_y;  // neurons mode
  double limit = 0.0;
};

ConvergenceTruth make_truth(const ConvergenceConfig& cfg);

struct ConvergenceRow {
  ConvergenceMode mode = ConvergenceMode::kStimuli;
  Index size = 0;
  Index trial = 0;
  double rho = 0.0;  // normalized Procrustes, covariance path
  double b = 0.0;    // normalized Bures, kernel path
  double truth = 0.0;
  double abs_error = 0.0;  // |estimate - truth|, estimate = rho in stimuli mode, b in neurons mode
  double pair_diff = 0.0;  // |rho - b|
};

// Rows are ordered by trial, then size.
std::vector<ConvergenceRow> run_convergence_stimuli(const ConvergenceConfig& cfg);
std::vector<ConvergenceRow> run_convergence_neurons(const ConvergenceConfig& cfg);
std::vector<ConvergenceRow> run_convergence(const ConvergenceConfig& cfg);
Table convergence_table(const std::vector<ConvergenceRow>& rows);

struct ConvergencePoint {
  Index size = 0;
  double median_abs_error = 0.0;
  double max_pair_diff = 0.0;
};

struct ConvergenceSummary {
  std::vector<ConvergencePoint> points;  // in grid order
  double truth = 0.0;
  bool strictly_decreasing = false;
  // Final median error divided by the truth; the absolute error when the
  // truth is zero.
  double final_relative_error = 0.0;
  double max_pair_diff = 0.0;
};

ConvergenceSummary summarize(const std::vector<ConvergenceRow>& rows);

// ---------------------------------------------------------------------------

// Centered linear kernels of two independent Gaussian stimuli x neurons
// matrices drawn from `seed`. With neurons < stimuli both are rank deficient.
KernelPair extrapolation_pair(std::uint64_t seed, Index stimuli, Index neurons);

struct ExtrapolationSearch {
  std::uint64_t seed = 0;
  double min_eigenvalue = 0.0;
  Index tried = 0;
  bool found = false;
};

// First seed in [first_seed, first_seed + max_tries) whose pair, extrapolated
// at `alpha`, has min eigenvalue below -threshold.
ExtrapolationSearch find_extrapolation_seed(std::uint64_t first_seed, Index stimuli, Index neurons,
                                            double alpha, double threshold, Index max_tries);

// Symmetrizes and clamps negative eigenvalues to zero.
Matrix project_psd(const Matrix& a);

}  // namespace repsim
