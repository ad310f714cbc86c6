// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "json.hpp"
#include "repsim/duality.hpp"
#include "repsim/experiments.hpp"
#include "repsim/measures.hpp"
#include "support.hpp"

namespace {

using namespace repsim;
using repsim::testing::correlated_pair;
using repsim::testing::uniform_index;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Worst observed value against a limit; fails on NaN.
struct Worst {
  double value = 0.0;
  void see(double v) {
    if (std::isnan(v) || v > value) value = std::isnan(v) ? INFINITY : v;
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// (M in [3, 40], Nx, Ny in [1, 25]) pair drawn from its own stream.
std::pair<DataMatrix, DataMatrix> random_instance(std::uint64_t master, Index i, bool equal_widths = false) {
  Rng rng(derive_seed(master, static_cast<std::uint64_t>(i)));
  const Index m = uniform_index(3, 40, rng);
  const Index nx = uniform_index(1, 25, rng);
  const Index ny = equal_widths ? nx : uniform_index(1, 25, rng);
  return correlated_pair(m, nx, ny, rng);
}

Outcome duality() {
  const auto t0 = std::chrono::steady_clock::now();
  Worst bures, nbs;
  int passed = 0;
  for (Index i = 0; i < 500; ++i) {
    const auto [x, y] = random_instance(101, i);
    const DualityReport r = verify_duality(x, y);
    bures.see(r.bures_vs_procrustes_abs_err / (1.0 + r.procrustes));
    nbs.see(r.nbs_vs_cos_theta_abs_err);
    if (!r.error && r.bures_vs_procrustes_abs_err <= 1e-8 * (1.0 + r.procrustes) &&
        r.nbs_vs_cos_theta_abs_err <= 1e-8) {
      ++passed;
    }
  }
  const double secs = seconds_since(t0);
  return {passed == 500 && secs < 30.0,
          std::to_string(passed) + "/500 pass, max |B-P|/(1+P)=" + sci(bures.value) +
              ", max |NBS-cos|=" + sci(nbs.value) + ", " + sci(secs) + " s"};
}

Outcome lemma_one() {
  Worst equal, padded;
  for (Index i = 0; i < 200; ++i) {
    const auto [x, y] = random_instance(202, i, true);
    const double cov = procrustes_distance(x, y);
    equal.see(std::abs(procrustes_distance_by_alignment(x, y) - cov) / cov);
  }
  for (Index i = 0; i < 200; ++i) {
    auto [x, y] = random_instance(203, i);
    if (x.neurons() == y.neurons()) continue;
    if (x.neurons() > y.neurons()) std::swap(x, y);
    const double cov = procrustes_distance(x, y);
    const DataMatrix xp = zero_pad(x, y.neurons());
    padded.see(std::abs(procrustes_distance_by_alignment(xp, y) - cov) / cov);
    padded.see(std::abs(procrustes_distance(xp, y) - cov) / cov);
  }
  return {equal.value <= 1e-8 && padded.value <= 1e-8,
          "max rel gap equal dims=" + sci(equal.value) + ", zero padded=" + sci(padded.value)};
}

Outcome lemma_two() {
  Worst rel, spectra;
  int spectra_pass = 0;
  for (Index i = 0; i < 500; ++i) {
    const auto [x, y] = random_instance(303, i);
    const KernelPair k = linear_kernels(x, y);
    const double nuc = nuclear_norm(cross_covariances(x, y).sigma_xy);
    rel.see(std::abs(fidelity(k.k_x, k.k_y) - nuc) / nuc);
    const SpectraReport s = product_spectra(center_columns(x.values()), center_columns(y.values()));
    spectra.see(s.max_abs_diff / s.scale);
    if (s.pass) ++spectra_pass;
  }
  return {rel.value <= 1e-8 && spectra_pass == 500,
          "max |F-||Sxy||*|/||Sxy||*=" + sci(rel.value) + ", spectra " + std::to_string(spectra_pass) +
              "/500 pass (max rel diff " + sci(spectra.value) + ")"};
}

double nbs_angle(const DataMatrix& a, const DataMatrix& b) {
  return safe_acos(nbs(linear_kernels(a, b)));
}

Outcome metric_axioms() {
  Worst asym, tri_p, tri_a;
  int unequal = 0;
  for (Index i = 0; i < 500; ++i) {
    Rng rng(derive_seed(404, static_cast<std::uint64_t>(i)));
    const Index m = uniform_index(3, 40, rng);
    const DataMatrix x = testing::gaussian_data(m, uniform_index(1, 25, rng), rng);
    const DataMatrix y = testing::gaussian_data(m, uniform_index(1, 25, rng), rng);
    const DataMatrix z = testing::gaussian_data(m, uniform_index(1, 25, rng), rng);
    if (x.neurons() != y.neurons() || y.neurons() != z.neurons()) ++unequal;

    const double pxy = procrustes_distance(x, y);
    const double axy = nbs_angle(x, y);
    asym.see(std::abs(pxy - procrustes_distance(y, x)) / (1.0 + pxy));
    asym.see(std::abs(axy - nbs_angle(y, x)));
    tri_p.see(pxy - procrustes_distance(x, z) - procrustes_distance(z, y));
    tri_a.see(axy - nbs_angle(x, z) - nbs_angle(z, y));
  }
  return {asym.value <= 1e-8 && tri_p.value <= 1e-8 && tri_a.value <= 1e-8 && unequal > 0,
          "max asymmetry=" + sci(asym.value) + ", worst triangle excess P=" + sci(tri_p.value) +
              " arccos NBS=" + sci(tri_a.value) + ", " + std::to_string(unequal) + " unequal-width triples"};
}

Outcome invariances() {
  Worst proc, shape, kern;
  for (Index i = 0; i < 200; ++i) {
    Rng rng(derive_seed(505, static_cast<std::uint64_t>(i)));
    const auto [x, y] = random_instance(506, i);
    const Index n = y.neurons();
    const Matrix q = random_orthogonal(n, rng);
    const Eigen::RowVectorXd t = 5.0 * standard_normal(1, n, rng);
    const double c = std::exp(std::normal_distribution<double>(0.0, 1.5)(rng));
    const DataMatrix moved((y.values() * q).rowwise() + t);
    const DataMatrix scaled(c * moved.values());

    const double p = procrustes_distance(x, y);
    proc.see(std::abs(procrustes_distance(x, moved) - p) / p);
    const double th = riemannian_shape_distance(x, y);
    shape.see(std::abs(riemannian_shape_distance(x, scaled) - th) / th);
    const DataMatrix rotated(y.values() * q);
    const KernelPair k0 = linear_kernels(x, y);
    const KernelPair k1 = linear_kernels(x, rotated);
    kern.see(std::abs(cka(k1) - cka(k0)));
    kern.see(std::abs(nbs(k1) - nbs(k0)));
  }
  return {proc.value <= 1e-8 && shape.value <= 1e-8 && kern.value <= 1e-8,
          "max rel change Procrustes=" + sci(proc.value) + ", Riemannian under scaling=" + sci(shape.value) +
              ", CKA/NBS under Y->YQ=" + sci(kern.value)};
}

Outcome identities() {
  Worst eq5, cka_id, bures_id;
  for (Index i = 0; i < 200; ++i) {
    const auto [x, y] = random_instance(606, i);
    const Matrix xc = center_columns(x.values());
    const Matrix yc = center_columns(y.values());
    const DataMatrix xn(xc / xc.norm());
    const DataMatrix yn(yc / yc.norm());
    const double p = procrustes_distance(xn, yn);
    eq5.see(std::abs(std::cos(riemannian_shape_distance(x, y)) - (1.0 - 0.5 * p * p)));

    const KernelPair k = linear_kernels(x, y);
    const Matrix a = k.k_x.values() / k.k_x.values().norm();
    const Matrix b = k.k_y.values() / k.k_y.values().norm();
    cka_id.see(std::abs(cka(k) - (1.0 - 0.5 * (a - b).squaredNorm())));

    const PsdMatrix ux(k.k_x.values() / k.k_x.trace());
    const PsdMatrix uy(k.k_y.values() / k.k_y.trace());
    const double bu = bures_distance(ux, uy);
    bures_id.see(std::abs(nbs(k) - (1.0 - 0.5 * bu * bu)));
  }
  return {eq5.value <= 1e-8 && cka_id.value <= 1e-8 && bures_id.value <= 1e-8,
          "max gap shape-angle/Procrustes=" + sci(eq5.value) + ", CKA/Euclidean=" + sci(cka_id.value) +
              ", NBS/Bures=" + sci(bures_id.value)};
}

Outcome bounds() {
  const auto t0 = std::chrono::steady_clock::now();
  Index violations = 0;
  double min_slack = INFINITY;
  for (EnvelopeScheme s : {EnvelopeScheme::kIndependent, EnvelopeScheme::kPerturbed}) {
    EnvelopeConfig cfg;  // p = 10, dofs 1 and 5, perturbation dof 4, 1000 trials
    cfg.seed = 707;
    cfg.scheme = s;
    const EnvelopeSummary sum = summarize(run_envelope(cfg));
    violations += sum.violations;
    min_slack = std::min(min_slack, sum.min_slack);
  }

  EnvelopeConfig rank_one;
  rank_one.dof_y = 1;
  rank_one.seed = 708;
  Index unsaturated = 0;
  for (const auto& r : run_envelope(rank_one)) {
    if (!(r.envelope.saturated_lower && r.envelope.saturated_upper)) ++unsaturated;
  }

  Worst commuting;
  Rng rng(709);
  for (int i = 0; i < 200; ++i) {
    const Matrix q = random_orthogonal(10, rng);
    const Vector dx = standard_normal(10, 1, rng).cwiseAbs2();
    const Vector dy = standard_normal(10, 1, rng).cwiseAbs2();
    const PsdMatrix kx(q * dx.asDiagonal() * q.transpose());
    const PsdMatrix ky(q * dy.asDiagonal() * q.transpose());
    commuting.see(std::abs(sqrt_cka(kx, ky) - nbs(kx, ky)));
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && unsaturated == 0 && commuting.value <= 1e-8 && secs < 60.0,
          std::to_string(violations) + " violations in 2x1000 trials (min slack " + sci(min_slack) + "), " +
              std::to_string(unsaturated) + "/1000 rank-1 pairs unsaturated, commuting |sqrt_cka-NBS|<=" +
              sci(commuting.value) + ", " + sci(secs) + " s"};
}

Outcome extrapolation() {
  const std::string path = std::string(REPSIM_FIXTURE_DIR) + "/extrapolation_seed.json";
  std::ifstream in(path);
  if (!in) return {false, "cannot read " + path};
  const nlohmann::json fx = nlohmann::json::parse(in);
  const KernelPair k = extrapolation_pair(fx["seed"].get<std::uint64_t>(), fx["stimuli"].get<Index>(),
                                          fx["neurons"].get<Index>());
  const double at3 = euclidean_extrapolation(k.k_x, k.k_y, 3.0).min_eigenvalue;
  int non_psd = 0;
  for (int i = 0; i <= 100; ++i) {
    if (!euclidean_extrapolation(k.k_x, k.k_y, i / 100.0).is_psd) ++non_psd;
  }
  return {at3 < -1e-6 && non_psd == 0,
          "seed " + std::to_string(fx["seed"].get<std::uint64_t>()) + ": min eigenvalue at alpha=3 is " +
              sci(at3) + ", " + std::to_string(non_psd) + "/101 alpha in [0,1] non-PSD"};
}

Outcome convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (ConvergenceMode mode : {ConvergenceMode::kStimuli, ConvergenceMode::kNeurons}) {
    ConvergenceConfig cfg;  // 16..4096 doubling, 200 trials per size
    cfg.mode = mode;
    cfg.seed = 909;
    const ConvergenceSummary s = summarize(run_convergence(cfg));
    const bool mode_ok = s.strictly_decreasing && s.final_relative_error < 0.1 && s.max_pair_diff <= 1e-8 &&
                         s.points.size() == 9 && cfg.trials >= 20;
    ok = ok && mode_ok;
    detail += std::string(mode_name(mode)) + ": monotone=" + (s.strictly_decreasing ? "yes" : "no") +
              " final err/truth=" + sci(s.final_relative_error) + " max |rho-b|=" + sci(s.max_pair_diff) + "; ";
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 300.0, detail + sci(secs) + " s"};
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "repsim_acceptance_determinism";
  fs::create_directories(dir);
  const std::string bin = REPSIM_BINARY;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"envelope", "envelope --seed 5"},
      {"envelope_json", "envelope --seed 5 --format json"},
      {"converge_stimuli", "converge --mode stimuli --seed 5"},
      {"converge_neurons", "converge --mode neurons --seed 5"},
      {"converge_threads", "converge --mode neurons --seed 5 --threads 3"},
  };
  bool ok = true;
  int identical = 0;
  std::string first_run_of_threads;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / (name + "_" + std::to_string(run) + ".out");
      const int code = shell(bin + " " + args + " --out " + out.string() + " 2> /dev/null");
      ok = ok && code == 0;
      outputs[run] = slurp(out);
    }
    if (!outputs[0].empty() && outputs[0] == outputs[1]) ++identical;
  }
  // Thread count does not change the rows.
  const bool threads_match = slurp(dir / "converge_neurons_0.out") == slurp(dir / "converge_threads_0.out");
  fs::remove_all(dir);
  const int total = static_cast<int>(commands.size());
  return {ok && identical == total && threads_match,
          std::to_string(identical) + "/" + std::to_string(total) +
              " commands byte-identical across runs, thread-count independent=" + (threads_match ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"duality", duality},
      {"equal-dimension alignment and zero padding", lemma_one},
      {"fidelity equals cross-covariance nuclear norm", lemma_two},
      {"metric axioms", metric_axioms},
      {"invariances", invariances},
      {"identities", identities},
      {"CKA/NBS bounds on Wishart samples", bounds},
      {"Euclidean extrapolation leaves the PSD cone", extrapolation},
      {"convergence with sample size", convergence},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
