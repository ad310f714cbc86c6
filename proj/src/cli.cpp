#include "repsim/cli.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "repsim/duality.hpp"
#include "repsim/experiments.hpp"
#include "repsim/measures.hpp"
#include "repsim/table.hpp"

namespace repsim::cli {

namespace {

using Json = nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNone:
      return kExitOk;
    case ErrorKind::kDimensionMismatch:
      return kExitDimension;
    case ErrorKind::kDegenerateInput:
      return kExitDegenerate;
    case ErrorKind::kNotPsd:
    case ErrorKind::kNumerical:
      return kExitNumerical;
    case ErrorKind::kInput:
      return kExitInput;
  }
  return kExitNumerical;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("REPSIM_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || errno == ERANGE || env[0] == '-') {
    throw InputError(std::string("REPSIM_SEED is not an unsigned integer: '") + env + "'");
  }
  return v;
}

TableFormat parse_format(const std::string& s) {
  return s == "csv" ? TableFormat::kCsv : TableFormat::kJson;
}

// Writes through `out` or into `path` when one is given.
void deliver(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("cannot open '" + path + "' for writing");
  write(file);
  file.flush();
  if (!file) throw InputError("failed writing '" + path + "'");
}

DataMatrix load_data(const std::string& path, const char* label, std::ostream& err) {
  DataMatrix d(read_matrix_csv(std::filesystem::path(path)));
  err << label << ": " << d.stimuli() << " stimuli x " << d.neurons() << " neurons (" << path << ")\n";
  return d;
}

PsdMatrix load_kernel(const std::string& path, const char* label, std::ostream& err) {
  const Matrix m = read_matrix_csv(std::filesystem::path(path));
  err << label << ": " << m.rows() << " x " << m.cols() << " kernel (" << path << ")\n";
  return PsdMatrix(m);
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json bound_json(const BoundReport& b) {
  return Json{{"lower", b.lower},
              {"value", b.value},
              {"upper", b.upper},
              {"slack_lower", b.slack_lower},
              {"slack_upper", b.slack_upper},
              {"saturated_lower", b.saturated_lower},
              {"saturated_upper", b.saturated_upper},
              {"valid", b.valid}};
}

Json envelope_json(const EnvelopeReport& r) {
  return Json{{"cka", r.cka},         {"nbs", r.nbs},           {"rank_x", r.rank_x},
              {"rank_y", r.rank_y},   {"rank_tol", r.rank_tol}, {"bounds", bound_json(r.bounds)}};
}

Json fidelity_bound_json(const FidelityBoundReport& r) {
  return Json{{"nbs", r.nbs}, {"sqrt_cka", r.sqrt_cka}, {"bounds", bound_json(r.bounds)}};
}

Json duality_json(const DualityReport& r) {
  Json j{{"procrustes", r.procrustes},
         {"bures", r.bures},
         {"cos_theta", r.cos_theta},
         {"nbs", r.nbs},
         {"nuclear", r.nuclear},
         {"fidelity", r.fidelity},
         {"bures_vs_procrustes_abs_err", r.bures_vs_procrustes_abs_err},
         {"nbs_vs_cos_theta_abs_err", r.nbs_vs_cos_theta_abs_err},
         {"fidelity_vs_nuclear_abs_err", r.fidelity_vs_nuclear_abs_err},
         {"pass", r.pass}};
  if (r.error) j["error"] = *r.error;
  return j;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json spectra_json(const SpectraReport& r) {
  return Json{{"a", vector_json(r.a)},   {"b", vector_json(r.b)},         {"c", vector_json(r.c)},
              {"scale", r.scale},        {"max_abs_diff", r.max_abs_diff}, {"pass", r.pass}};
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::string x;
  std::string y;
  std::string measures = "all";
  std::string format = "json";
  std::string out;
};

std::vector<Measure> parse_measure_list(const std::string& list) {
  if (list == "all") return all_measures();
  std::vector<Measure> ms;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const auto m = parse_measure(name);
    if (!m) throw InputError("unknown measure '" + name + "'");
    ms.push_back(*m);
  }
  if (ms.empty()) throw InputError("no measures requested");
  return ms;
}

int cmd_compare(const CompareOptions& o, std::ostream& out, std::ostream& err) {
  const std::vector<Measure> measures = parse_measure_list(o.measures);
  const DataMatrix x = load_data(o.x, "x", err);
  const DataMatrix y = load_data(o.y, "y", err);
  const SimilarityReport report = compare(x, y, measures);

  int code = kExitOk;
  for (const auto& r : report.results) {
    if (!r.ok()) {
      err << "measure " << measure_name(r.measure) << ": " << error_kind_name(r.error) << ": "
          << r.message << "\n";
      if (code == kExitOk) code = exit_code_for(r.error);
    }
  }

  if (parse_format(o.format) == TableFormat::kCsv) {
    Table t;
    t.columns = {"measure", "value", "error", "message"};
    for (const auto& r : report.results) {
      t.add_row({std::string(measure_name(r.measure)),
                 r.value ? Cell{*r.value} : Cell{std::string()},
                 std::string(r.ok() ? "" : error_kind_name(r.error)), r.message});
    }
    deliver(o.out, out, [&](std::ostream& s) { write_csv(t, s); });
  } else {
    Json results = Json::array();
    for (const auto& r : report.results) {
      Json j{{"measure", measure_name(r.measure)}};
      j["value"] = r.value ? Json(*r.value) : Json(nullptr);
      if (r.matrix_x) j["matrix_x"] = matrix_json(*r.matrix_x);
      if (r.matrix_y) j["matrix_y"] = matrix_json(*r.matrix_y);
      if (!r.ok()) {
        j["error"] = error_kind_name(r.error);
        j["message"] = r.message;
      }
      results.push_back(std::move(j));
    }
    Json doc{{"stimuli", report.stimuli},
             {"neurons_x", report.neurons_x},
             {"neurons_y", report.neurons_y},
             {"results", std::move(results)}};
    deliver(o.out, out, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
  }
  return code;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  std::string x;
  std::string y;
  std::vector<std::string> kernels;
  Index random = 0;
  std::uint64_t seed = 0;
  Index max_stimuli = 40;
  Index max_neurons = 25;
  std::string out;
};

// Checks on one data pair. Appends the names of failing checks to `failures`.
Json verify_pair(const DataMatrix& x, const DataMatrix& y, std::vector<std::string>& failures) {
  Json j;
  const DualityReport d = verify_duality(x, y);
  j["duality"] = duality_json(d);
  if (!d.pass) failures.push_back(d.error ? "duality: " + *d.error : "duality");
  if (d.error) return j;

  const KernelPair k = linear_kernels(x, y);
  const EnvelopeReport env = envelope_bounds(k);
  const FidelityBoundReport fvg = fuchs_van_de_graaf(k);
  j["envelope"] = envelope_json(env);
  j["fidelity_bounds"] = fidelity_bound_json(fvg);
  if (!env.bounds.valid) failures.push_back("envelope bounds");
  if (!fvg.bounds.valid) failures.push_back("fidelity bounds");

  const SpectraReport sp = product_spectra(center_columns(x.values()), center_columns(y.values()));
  j["spectra"] = spectra_json(sp);
  if (!sp.pass) failures.push_back("product spectra");
  return j;
}

Json verify_kernels(const PsdMatrix& kx, const PsdMatrix& ky, std::vector<std::string>& failures) {
  Json j;
  const EnvelopeReport env = envelope_bounds(kx, ky);
  const FidelityBoundReport fvg = fuchs_van_de_graaf(kx, ky);
  j["envelope"] = envelope_json(env);
  j["fidelity_bounds"] = fidelity_bound_json(fvg);
  if (!env.bounds.valid) failures.push_back("envelope bounds");
  if (!fvg.bounds.valid) failures.push_back("fidelity bounds");
  return j;
}

// Random pair with correlated but distinct representations.
std::pair<DataMatrix, DataMatrix> random_pair(std::uint64_t seed, Index max_m, Index max_n) {
  Rng rng(seed);
  std::uniform_int_distribution<Index> m_dist(3, max_m);
  std::uniform_int_distribution<Index> n_dist(1, max_n);
  const Index m = m_dist(rng);
  const Index nx = n_dist(rng);
  const Index ny = n_dist(rng);
  const Matrix x = standard_normal(m, nx, rng);
  const Matrix mix = standard_normal(nx, ny, rng) / std::sqrt(static_cast<double>(nx));
  const Matrix y = x * mix + 0.5 * standard_normal(m, ny, rng);
  return {DataMatrix(x), DataMatrix(y)};
}

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> failures;
  Json doc;
  if (o.random > 0) {
    if (o.max_stimuli < 3 || o.max_neurons < 1) {
      throw InputError("--max-stimuli must be >= 3 and --max-neurons >= 1");
    }
    Json trials = Json::array();
    Index passed = 0;
    for (Index t = 0; t < o.random; ++t) {
      const auto [x, y] = random_pair(derive_seed(o.seed, static_cast<std::uint64_t>(t)),
                                      o.max_stimuli, o.max_neurons);
      std::vector<std::string> trial_failures;
      Json j = verify_pair(x, y, trial_failures);
      j = Json{{"trial", t}, {"stimuli", x.stimuli()}, {"neurons_x", x.neurons()},
               {"neurons_y", y.neurons()}, {"checks", std::move(j)}, {"pass", trial_failures.empty()}};
      if (trial_failures.empty()) ++passed;
      for (const auto& f : trial_failures) failures.push_back("trial " + std::to_string(t) + ": " + f);
      trials.push_back(std::move(j));
    }
    doc = Json{{"mode", "random"}, {"seed", o.seed}, {"trials", o.random}, {"passed", passed},
               {"results", std::move(trials)}};
  } else if (!o.kernels.empty()) {
    if (o.kernels.size() != 2) throw InputError("--kernels takes exactly two files");
    const PsdMatrix kx = load_kernel(o.kernels[0], "k_x", err);
    const PsdMatrix ky = load_kernel(o.kernels[1], "k_y", err);
    doc = Json{{"mode", "kernels"}, {"checks", verify_kernels(kx, ky, failures)}};
  } else {
    if (o.x.empty() || o.y.empty()) throw InputError("verify needs --x and --y, --kernels, or --random");
    const DataMatrix x = load_data(o.x, "x", err);
    const DataMatrix y = load_data(o.y, "y", err);
    if (x.stimuli() != y.stimuli()) {
      throw DimensionMismatch("x has " + std::to_string(x.stimuli()) + " stimuli but y has " +
                              std::to_string(y.stimuli()));
    }
    doc = Json{{"mode", "files"}, {"checks", verify_pair(x, y, failures)}};
  }
  doc["pass"] = failures.empty();
  doc["first_failure"] = failures.empty() ? Json(nullptr) : Json(failures.front());
  deliver(o.out, out, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
  if (!failures.empty()) {
    err << "verification failed: " << failures.front() << " (" << failures.size()
        << " failing checks)\n";
    return kExitVerification;
  }
  err << "verification passed\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// envelope / converge

struct EnvelopeOptions {
  EnvelopeConfig cfg;
  std::string scheme = "both";
  std::string format = "csv";
  std::string out;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int cmd_envelope(const EnvelopeOptions& o, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  std::vector<EnvelopeScheme> schemes;
  if (o.scheme == "both") {
    schemes = {EnvelopeScheme::kIndependent, EnvelopeScheme::kPerturbed};
  } else {
    schemes = {*parse_scheme(o.scheme)};
  }
  std::vector<EnvelopeRow> rows;
  for (EnvelopeScheme s : schemes) {
    EnvelopeConfig cfg = o.cfg;
    cfg.scheme = s;
    const auto part = run_envelope(cfg);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const Table t = envelope_table(rows);
  deliver(o.out, out, [&](std::ostream& s) { write_table(t, parse_format(o.format), s); });
  const EnvelopeSummary s = summarize(rows);
  err << "envelope: trials=" << s.trials << " violations=" << s.violations
      << " min_slack=" << format_double(s.min_slack) << " runtime=" << std::fixed
      << std::setprecision(3) << seconds_since(start) << "s\n";
  return s.violations == 0 ? kExitOk : kExitVerification;
}

struct ConvergeOptions {
  ConvergenceConfig cfg;
  std::string mode = "stimuli";
  std::string sizes;
  std::string format = "csv";
  std::string out;
};

std::vector<Index> parse_sizes(const std::string& list) {
  std::vector<Index> sizes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw InputError("bad size '" + item + "' in --sizes");
    sizes.push_back(static_cast<Index>(v));
  }
  return sizes;
}

int cmd_converge(ConvergeOptions o, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  o.cfg.mode = *parse_mode(o.mode);
  if (!o.sizes.empty()) o.cfg.sizes = parse_sizes(o.sizes);
  const auto rows = run_convergence(o.cfg);
  const Table t = convergence_table(rows);
  deliver(o.out, out, [&](std::ostream& s) { write_table(t, parse_format(o.format), s); });

  const ConvergenceSummary s = summarize(rows);
  err << "converge " << o.mode << ": truth=" << format_double(s.truth) << "\n";
  for (const auto& p : s.points) {
    err << "  size=" << p.size << " median_abs_error=" << format_double(p.median_abs_error)
        << " max_pair_diff=" << format_double(p.max_pair_diff) << "\n";
  }
  // Exactly reproduced limits (identical networks) have nothing left to shrink.
  bool exact = true;
  for (const auto& p : s.points) exact = exact && p.median_abs_error <= 1e-12;
  const bool monotone = s.strictly_decreasing || exact;
  const bool paired = s.max_pair_diff <= 1e-8;
  err << "converge " << o.mode << ": trials=" << o.cfg.trials
      << " monotone=" << (monotone ? "yes" : "no") << " paired=" << (paired ? "yes" : "no")
      << " final_relative_error=" << format_double(s.final_relative_error) << " runtime="
      << std::fixed << std::setprecision(3) << seconds_since(start) << "s\n";
  return monotone && paired ? kExitOk : kExitVerification;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Representational similarity measures and duality checks"};
  app.name("repsim");
  app.require_subcommand(1);
  const std::vector<std::string> formats{"json", "csv"};

  std::uint64_t seed_default = 0;
  try {
    seed_default = default_seed();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  CompareOptions compare_opts;
  auto* compare_cmd = app.add_subcommand("compare", "Compute a suite of measures between two matrices");
  compare_cmd->add_option("--x", compare_opts.x, "CSV matrix, rows = stimuli")->required();
  compare_cmd->add_option("--y", compare_opts.y, "CSV matrix, rows = stimuli")->required();
  compare_cmd->add_option("--measures", compare_opts.measures,
                          "Comma separated subset of angular, procrustes, riemannian, cka, nbs, "
                          "bures, fidelity, normalized_procrustes, normalized_bures, rdm, or 'all'")
      ->capture_default_str();
  compare_cmd->add_option("--format", compare_opts.format, "Report format")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
  compare_cmd->add_option("--out", compare_opts.out, "Output file (default stdout)");

  VerifyOptions verify_opts;
  verify_opts.seed = seed_default;
  auto* verify_cmd = app.add_subcommand("verify", "Check the duality identities and bounds (JSON report)");
  verify_cmd->add_option("--x", verify_opts.x, "CSV matrix, rows = stimuli");
  verify_cmd->add_option("--y", verify_opts.y, "CSV matrix, rows = stimuli");
  verify_cmd->add_option("--kernels", verify_opts.kernels, "Two CSV kernel matrices")->expected(2);
  verify_cmd->add_option("--random", verify_opts.random, "Number of seeded random pairs")
      ->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--seed", verify_opts.seed, "Master seed (REPSIM_SEED sets the default)")
      ->capture_default_str();
  verify_cmd->add_option("--max-stimuli", verify_opts.max_stimuli, "Random pairs: stimuli in [3, max]")
      ->capture_default_str();
  verify_cmd->add_option("--max-neurons", verify_opts.max_neurons, "Random pairs: neurons in [1, max]")
      ->capture_default_str();
  verify_cmd->add_option("--out", verify_opts.out, "Output file (default stdout)");

  EnvelopeOptions env_opts;
  env_opts.cfg.seed = seed_default;
  auto* env_cmd = app.add_subcommand("envelope", "Wishart scatter of CKA, NBS and sqrt CKA with bounds");
  env_cmd->add_option("--dim", env_opts.cfg.dim, "Kernel size p")->capture_default_str();
  env_cmd->add_option("--dof-x", env_opts.cfg.dof_x, "Degrees of freedom of sqrt(K_X)")->capture_default_str();
  env_cmd->add_option("--dof-y", env_opts.cfg.dof_y, "Degrees of freedom of sqrt(K_Y), independent scheme")
      ->capture_default_str();
  env_cmd->add_option("--dof-eps", env_opts.cfg.dof_eps, "Degrees of freedom of the perturbation")
      ->capture_default_str();
  env_cmd->add_option("--trials", env_opts.cfg.trials, "Trials per scheme")->capture_default_str();
  env_cmd->add_option("--seed", env_opts.cfg.seed, "Master seed (REPSIM_SEED sets the default)")
      ->capture_default_str();
  env_cmd->add_option("--scheme", env_opts.scheme, "independent, perturbed or both")
      ->check(CLI::IsMember({"independent", "perturbed", "both"}))
      ->capture_default_str();
  env_cmd->add_option("--threads", env_opts.cfg.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  env_cmd->add_option("--format", env_opts.format, "Table format")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
  env_cmd->add_option("--out", env_opts.out, "Output file (default stdout)");

  ConvergeOptions conv_opts;
  conv_opts.cfg.seed = seed_default;
  auto* conv_cmd = app.add_subcommand("converge", "Convergence of normalized distances with sample size");
  conv_cmd->add_option("--mode", conv_opts.mode, "stimuli (M grows) or neurons (N grows)")
      ->check(CLI::IsMember({"stimuli", "neurons"}))
      ->capture_default_str();
  conv_cmd->add_option("--sizes", conv_opts.sizes, "Comma separated increasing sizes (default 16,32,...,4096)");
  conv_cmd->add_option("--dim", conv_opts.cfg.fixed_dim, "Neurons (stimuli mode) or stimuli (neurons mode)")
      ->capture_default_str();
  conv_cmd->add_option("--trials", conv_opts.cfg.trials, "Trials per size")->capture_default_str();
  conv_cmd->add_option("--seed", conv_opts.cfg.seed, "Master seed (REPSIM_SEED sets the default)")
      ->capture_default_str();
  conv_cmd->add_option("--truth-seed", conv_opts.cfg.truth_seed, "Seed of the ground-truth covariances")
      ->capture_default_str();
  conv_cmd->add_flag("--shared-truth", conv_opts.cfg.shared_truth, "Make the limiting distance zero");
  conv_cmd->add_option("--threads", conv_opts.cfg.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  conv_cmd->add_option("--format", conv_opts.format, "Table format")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
  conv_cmd->add_option("--out", conv_opts.out, "Output file (default stdout)");

  std::vector<std::string> argv_store{"repsim"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*compare_cmd) return cmd_compare(compare_opts, out, err);
    if (*verify_cmd) return cmd_verify(verify_opts, out, err);
    if (*env_cmd) return cmd_envelope(env_opts, out, err);
    if (*conv_cmd) return cmd_converge(conv_opts, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DimensionMismatch& e) {
    err << "dimension mismatch: " << e.what() << "\n";
    return kExitDimension;
  } catch (const DegenerateInput& e) {
    err << "degenerate input: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const NotPsd& e) {
    err << "not PSD: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace repsim::cli
