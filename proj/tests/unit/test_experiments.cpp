#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "repsim/experiments.hpp"
#include "support.hpp"

namespace repsim {
namespace {

EnvelopeConfig small_envelope(EnvelopeScheme scheme, Index trials = 200) {
  EnvelopeConfig cfg;
  cfg.trials = trials;
  cfg.seed = 17;
  cfg.scheme = scheme;
  return cfg;
}

std::string csv_of(const Table& t) {
  std::ostringstream os;
  write_csv(t, os);
  return os.str();
}

TEST(EnvelopeConfig, Validation) {
  EnvelopeConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.trials = 1;
  cfg.dof_eps = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  EXPECT_THROW(run_envelope(cfg), InputError);
}

TEST(SampleEnvelopePair, RanksFollowDegreesOfFreedom) {
  const EnvelopeConfig cfg = small_envelope(EnvelopeScheme::kIndependent);
  const KernelPair k = sample_envelope_pair(cfg, 0);
  EXPECT_EQ(numerical_rank(k.k_x.values()), 1);
  EXPECT_EQ(numerical_rank(k.k_y.values()), 5);

  const EnvelopeConfig pcfg = small_envelope(EnvelopeScheme::kPerturbed);
  const KernelPair p = sample_envelope_pair(pcfg, 0);
  // Same stream, so the perturbed pair shares Kx with the independent one.
  EXPECT_EQ(p.k_x.values(), k.k_x.values());
  EXPECT_EQ(numerical_rank(p.k_y.values()), 5);
}

TEST(RunEnvelope, EveryRowWithinBoundsForBothSchemes) {
  for (EnvelopeScheme s : {EnvelopeScheme::kIndependent, EnvelopeScheme::kPerturbed}) {
    const auto rows = run_envelope(small_envelope(s));
    ASSERT_EQ(rows.size(), 200u);
    for (const auto& r : rows) {
      EXPECT_TRUE(r.valid()) << scheme_name(s) << " trial " << r.trial;
      EXPECT_GE(r.envelope.slack_lower, -1e-8);
      EXPECT_GE(r.fidelity.slack_upper, -1e-8);
      EXPECT_LE(r.sqrt_cka, r.nbs + 1e-8);
    }
    EXPECT_EQ(summarize(rows).violations, 0);
  }
}

TEST(RunEnvelope, PerturbedSchemeIsPositivelyAssociated) {
  const auto rows = run_envelope(small_envelope(EnvelopeScheme::kPerturbed, 500));
  double mx = 0, my = 0;
  for (const auto& r : rows) {
    mx += r.nbs;
    my += r.sqrt_cka;
  }
  mx /= rows.size();
  my /= rows.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& r : rows) {
    sxy += (r.nbs - mx) * (r.sqrt_cka - my);
    sxx += (r.nbs - mx) * (r.nbs - mx);
    syy += (r.sqrt_cka - my) * (r.sqrt_cka - my);
  }
  EXPECT_GT(sxy / std::sqrt(sxx * syy), 0.5);
}

TEST(RunEnvelope, DeterministicAcrossThreadCounts) {
  EnvelopeConfig one = small_envelope(EnvelopeScheme::kIndependent, 50);
  one.threads = 1;
  EnvelopeConfig four = one;
  four.threads = 4;
  EXPECT_EQ(csv_of(envelope_table(run_envelope(one))), csv_of(envelope_table(run_envelope(four))));

  EnvelopeConfig single = small_envelope(EnvelopeScheme::kIndependent, 1);
  EXPECT_EQ(csv_of(envelope_table(run_envelope(single))), csv_of(envelope_table(run_envelope(single))));
}

TEST(RunEnvelope, TrialsDoNotShareState) {
  // Trial t of a long run equals trial t of any run that reaches it.
  const auto longer = run_envelope(small_envelope(EnvelopeScheme::kIndependent, 40));
  const auto shorter = run_envelope(small_envelope(EnvelopeScheme::kIndependent, 10));
  for (std::size_t i = 0; i < shorter.size(); ++i) {
    EXPECT_EQ(longer[i].cka, shorter[i].cka);
    EXPECT_EQ(longer[i].nbs, shorter[i].nbs);
  }
}

TEST(EnvelopeTable, ColumnsAndRows) {
  const auto rows = run_envelope(small_envelope(EnvelopeScheme::kPerturbed, 3));
  const Table t = envelope_table(rows);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.columns[2], "cka");
  EXPECT_EQ(t.columns[3], "nbs");
  EXPECT_EQ(std::get<std::string>(t.rows[0][1]), "perturbed");
}

TEST(GeometricGrid, Doubling) {
  const std::vector<Index> g = geometric_grid(16, 4096);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g.front(), 16);
  EXPECT_EQ(g.back(), 4096);
  EXPECT_THROW(geometric_grid(0, 10), InputError);
}

TEST(ConvergenceConfig, Validation) {
  ConvergenceConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.sizes = {16, 16, 32};
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.sizes = {};
  EXPECT_THROW(cfg.validate(), InputError);
  cfg.sizes = {8, 16};
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(ProjectPsd, ClampsNegativeEigenvalues) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;
  const Matrix p = project_psd(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(p);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-14);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), 3.0, 1e-12);
}

TEST(MakeTruth, StimuliLimitMatchesCovarianceFormula) {
  ConvergenceConfig cfg;
  cfg.fixed_dim = 4;
  const ConvergenceTruth t = make_truth(cfg);
  const Matrix j = t.factor.transpose() * t.factor;
  const double tx = j.topLeftCorner(4, 4).trace();
  const double ty = j.bottomRightCorner(4, 4).trace();
  const double nuc = nuclear_norm(j.topRightCorner(4, 4));
  EXPECT_NEAR(t.limit, std::sqrt((tx + ty - 2 * nuc) / 4.0), 1e-12);
  EXPECT_GT(t.limit, 0.0);
}

TEST(MakeTruth, NeuronsKernelsAreCentered) {
  ConvergenceConfig cfg;
  cfg.mode = ConvergenceMode::kNeurons;
  cfg.fixed_dim = 6;
  const ConvergenceTruth t = make_truth(cfg);
  const Matrix k = t.factor_x * t.factor_x.transpose();
  EXPECT_LT((k * Vector::Ones(6)).norm(), 1e-12);
  const PsdMatrix kx = PsdMatrix::gram(t.factor_x);
  const PsdMatrix ky = PsdMatrix::gram(t.factor_y);
  EXPECT_NEAR(t.limit, bures_distance(kx, ky) / std::sqrt(6.0), 1e-10);
}

TEST(MakeTruth, SharedTruthGivesZeroLimit) {
  ConvergenceConfig cfg;
  cfg.shared_truth = true;
  EXPECT_EQ(make_truth(cfg).limit, 0.0);
  cfg.mode = ConvergenceMode::kNeurons;
  EXPECT_NEAR(make_truth(cfg).limit, 0.0, 1e-7);
}

ConvergenceConfig small_convergence(ConvergenceMode mode) {
  ConvergenceConfig cfg;
  cfg.mode = mode;
  cfg.sizes = geometric_grid(16, 1024, 4);
  cfg.trials = 40;
  cfg.seed = 5;
  return cfg;
}

TEST(RunConvergence, StimuliModeConvergesAndPairs) {
  const auto rows = run_convergence_stimuli(small_convergence(ConvergenceMode::kStimuli));
  ASSERT_EQ(rows.size(), 40u * 4u);
  const ConvergenceSummary s = summarize(rows);
  EXPECT_TRUE(s.strictly_decreasing);
  EXPECT_LT(s.final_relative_error, 0.1);
  EXPECT_LE(s.max_pair_diff, 1e-8);
  EXPECT_EQ(rows[1].trial, 0);
  EXPECT_EQ(rows[1].size, 64);
}

TEST(RunConvergence, NeuronsModeConvergesAndPairs) {
  const auto rows = run_convergence_neurons(small_convergence(ConvergenceMode::kNeurons));
  const ConvergenceSummary s = summarize(rows);
  EXPECT_TRUE(s.strictly_decreasing);
  EXPECT_LT(s.final_relative_error, 0.1);
  EXPECT_LE(s.max_pair_diff, 1e-8);
}

TEST(RunConvergence, SharedTruthEstimatesVanish) {
  ConvergenceConfig cfg = small_convergence(ConvergenceMode::kStimuli);
  cfg.shared_truth = true;
  for (const auto& r : run_convergence(cfg)) EXPECT_LE(r.rho, 1e-7);

  cfg.mode = ConvergenceMode::kNeurons;
  const ConvergenceSummary s = summarize(run_convergence(cfg));
  EXPECT_TRUE(s.strictly_decreasing);
  EXPECT_LT(s.points.back().median_abs_error, 0.05);
}

TEST(RunConvergence, WrongModeIsRejected) {
  EXPECT_THROW(run_convergence_stimuli(small_convergence(ConvergenceMode::kNeurons)), InputError);
  EXPECT_THROW(run_convergence_neurons(small_convergence(ConvergenceMode::kStimuli)), InputError);
}

TEST(RunConvergence, DeterministicAcrossThreads) {
  ConvergenceConfig a = small_convergence(ConvergenceMode::kNeurons);
  a.trials = 8;
  a.threads = 1;
  ConvergenceConfig b = a;
  b.threads = 3;
  EXPECT_EQ(csv_of(convergence_table(run_convergence(a))), csv_of(convergence_table(run_convergence(b))));
}

TEST(RunConvergence, FactoredKernelPathAgreesWithDense) {
  ConvergenceConfig dense = small_convergence(ConvergenceMode::kStimuli);
  dense.trials = 3;
  dense.dense_kernel_limit = 100000;
  ConvergenceConfig factored = dense;
  factored.dense_kernel_limit = 1;
  const auto a = run_convergence(dense);
  const auto b = run_convergence(factored);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].b, b[i].b, 1e-10);
}

TEST(Summarize, MedianAndMonotonicity) {
  std::vector<ConvergenceRow> rows;
  const double errs[2][3] = {{0.5, 0.1, 0.3}, {0.2, 0.4, 0.3}};
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 3; ++t) {
      ConvergenceRow r;
      r.size = 10 * (s + 1);
      r.trial = t;
      r.truth = 2.0;
      r.abs_error = errs[s][t];
      rows.push_back(r);
    }
  }
  ConvergenceSummary s = summarize(rows);
  ASSERT_EQ(s.points.size(), 2u);
  EXPECT_DOUBLE_EQ(s.points[0].median_abs_error, 0.3);
  EXPECT_DOUBLE_EQ(s.points[1].median_abs_error, 0.3);
  EXPECT_FALSE(s.strictly_decreasing);
  EXPECT_DOUBLE_EQ(s.final_relative_error, 0.15);
}

TEST(ConvergenceTable, Columns) {
  ConvergenceConfig cfg = small_convergence(ConvergenceMode::kNeurons);
  cfg.trials = 1;
  const Table t = convergence_table(run_convergence(cfg));
  const std::vector<std::string> expected{"mode", "size", "trial", "rho", "b", "truth", "abs_error", "pair_diff"};
  EXPECT_EQ(t.columns, expected);
  EXPECT_EQ(t.rows.size(), cfg.sizes.size());
}

TEST(ExtrapolationSearch, FindsNegativeEigenvalue) {
  const ExtrapolationSearch s = find_extrapolation_seed(0, 8, 2, 3.0, 1e-6, 100);
  ASSERT_TRUE(s.found);
  const KernelPair k = extrapolation_pair(s.seed, 8, 2);
  EXPECT_EQ(euclidean_extrapolation(k.k_x, k.k_y, 3.0).min_eigenvalue, s.min_eigenvalue);
}

}  // namespace
}  // namespace repsim
