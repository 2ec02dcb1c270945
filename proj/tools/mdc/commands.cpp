#include "mdc/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>

#include "mdc/config.hpp"
#include "mdc/mdc.hpp"

namespace mdc::cli {

namespace {

struct Run {
  ScenarioConfig cfg;
  std::uint64_t seed;
  std::uint64_t budget;
  std::uint64_t samples;
};

Run load(const CliOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("config", "no config given (use --config or MDC_CONFIG)");
  Run r{load_config(opts.config_path), 0, 0, 0};
  r.seed = opts.seed.value_or(r.cfg.seed);
  r.budget = opts.budget.value_or(r.cfg.budget);
  r.samples = opts.n_samples.value_or(r.cfg.samples);
  if (r.budget == 0) throw ConfigError("budget", "budget must be positive");
  if (r.samples < kMinTailSamples)
    throw ConfigError("samples", "sample count must be at least " + std::to_string(kMinTailSamples));
  if (opts.t) r.cfg.t = *opts.t;
  return r;
}

std::ofstream open_output(const CliOptions& opts, const std::string& name, std::ostream& out) {
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  const auto path = std::filesystem::path(opts.out_dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("out", "cannot write " + path.string());
  out << "wrote " << path.string() << "\n";
  return os;
}

// Sparse 1-based triplets, zeros omitted.
void write_matrix_csv(std::ostream& os, const Matrix& m) {
  os << "i,j,value\n";
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) os << i + 1 << ',' << j + 1 << ',' << format_real(m(i, j)) << '\n';
}

std::string signature_text(std::span<const std::size_t> sig) {
  std::string s = "{";
  for (std::size_t i = 0; i < sig.size(); ++i) s += (i ? "," : "") + std::to_string(sig[i] + 1);
  return s + "}";
}

const char* sensitivity_mode_name(SensitivityMode m) {
  switch (m) {
    case SensitivityMode::declared:
      return "declared";
    case SensitivityMode::oracle:
      return "oracle";
    case SensitivityMode::vector:
      return "explicit";
  }
  return "?";
}

void summarize(const VerificationReport& rep, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> groups;
  std::map<std::string, double> worst;
  for (const auto& r : rep.rows()) {
    auto& g = groups[r.check];
    ++g.first;
    if (!r.pass) ++g.second;
    auto it = worst.find(r.check);
    if (it == worst.end() || r.slack < it->second) worst[r.check] = r.slack;
  }
  for (const auto& [name, g] : groups)
    out << std::left << std::setw(28) << name << "rows=" << std::setw(6) << g.first << "failures=" << std::setw(4)
        << g.second << "worst_slack=" << format_real(worst[name]) << "\n";
  for (const auto& r : rep.rows()) {
    if (r.pass) continue;
    err << "FAIL " << r.check << " k=" << (r.k < 0 ? std::string("-") : std::to_string(r.k))
        << " j=" << (r.j < 0 ? std::string("-") : std::to_string(r.j)) << " observed=" << format_real(r.observed)
        << " bound=" << format_real(r.bound) << " slack=" << format_real(r.slack);
    if (!r.witness.empty()) err << " (" << r.witness << ")";
    err << "\n";
  }
}

}  // namespace

int cmd_describe(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  const Run run = load(opts);
  const ScenarioConfig& cfg = run.cfg;
  const ProcessSpec spec = build_structure(cfg);
  const std::size_t n = spec.horizon();

  out << "config: " << cfg.source << "\n";
  out << "family: " << cfg.family << "\n";
  out << "horizon N: " << n << "\n";
  out << "alphabet size: " << spec.alphabet_size() << "\n";
  if (cfg.family == "markov") out << "dobrushin alpha: " << format_real(dobrushin_alpha(*cfg.transition)) << "\n";
  if (cfg.family == "tree") {
    double alpha = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (cfg.parents[j])
        alpha = std::max(alpha, dobrushin_alpha(cfg.edge_kernels.size() == 1 ? cfg.edge_kernels.front()
                                                                                : cfg.edge_kernels[j]));
    out << "max edge alpha: " << format_real(alpha) << "\n";
    out << "max out-degree D: " << spec.structure().max_out_degree << "\n";
  }
  if (cfg.family == "window") {
    out << "window width W: " << cfg.window_width << "\n";
    out << "calibration target alpha: " << format_real(cfg.window_alpha) << "\n";
  }
  out << "target: " << cfg.target.kind << "\n";
  out << "sensitivity: " << sensitivity_mode_name(cfg.sensitivity_mode) << "\n";
  out << "seed: " << run.seed << "  samples: " << run.samples << "\n";
  if (!cfg.sweep_horizons.empty()) {
    out << "sweep horizons:";
    for (auto h : cfg.sweep_horizons) out << ' ' << h;
    out << "\n";
  }
  out << "context signatures (1-based):\n";
  for (std::size_t j = 0; j < n; ++j)
    out << "  step " << j + 1 << ": " << signature_text(spec.context_signature(j)) << "\n";

  std::uint64_t cost = interdependence_cost(spec, true);
  if (cfg.family == "window") cost = detail::saturating_mul(cost, 2);  // probe plus calibrated pass
  out << "exact H cost: " << cost << " kernel evaluations (budget " << run.budget << ")\n";
  if (cost > run.budget)
    err << "warning: exact H exceeds the budget by " << format_real(static_cast<double>(cost) / run.budget)
        << "x; matrix, bounds and verify will stop with exit code 3\n";
  return kExitOk;
}

int cmd_matrix(const CliOptions& opts, std::ostream& out, std::ostream&) {
  const Run run = load(opts);
  const ProcessSpec spec = build_spec(run.cfg);
  const InterdependenceMatrix H = compute_interdependence(spec, {run.budget, true});
  const Resolvent gamma = resolvent(H);
  {
    auto os = open_output(opts, "H.csv", out);
    write_matrix_csv(os, H.matrix());
  }
  {
    auto os = open_output(opts, "Gamma.csv", out);
    write_matrix_csv(os, gamma.matrix());
  }
  const OperatorNorms hn = operator_norms(H.matrix());
  out << "||H||_1   = " << format_real(hn.l1) << "\n";
  out << "||H||_inf = " << format_real(hn.linf) << "\n";
  out << "||H||_2   = " << format_real(hn.l2) << "\n";
  out << "kappa     = " << format_real(spectral_kappa(gamma)) << "\n";
  return kExitOk;
}

int cmd_bounds(const CliOptions& opts, std::ostream& out, std::ostream&) {
  const Run run = load(opts);
  const std::size_t n = run.cfg.horizon;
  const ProcessSpec spec = build_spec(run.cfg);
  const TargetFunction f = build_target(run.cfg, n);
  const SensitivityVector c = resolve_sensitivity(run.cfg, f, n, run.budget);
  const BoundReport rep = compare_bounds(spec, f, c, run.budget);
  const auto t = run.cfg.t.empty() ? default_t_grid(c, 5) : run.cfg.t;
  {
    auto os = open_output(opts, "bounds.csv", out);
    write_bounds_csv(os, rep, t);
  }
  print_bounds_table(out, rep, t);
  return kExitOk;
}

int cmd_verify(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  const Run run = load(opts);
  const std::size_t n = run.cfg.horizon;
  const std::size_t a = run.cfg.alphabet;
  const ProcessSpec spec = build_spec(run.cfg);
  const TargetFunction f = build_target(run.cfg, n);
  const SensitivityVector c = resolve_sensitivity(run.cfg, f, n, run.budget);

  VerificationReport rep = verify_oscillation_bound(spec, f, c, run.budget);
  const bool condition_ok = rep.passed();
  rep.append(verify_discrepancy_recursion(spec, run.budget));

  if (a >= 2) {
    const Trajectory empty;
    rep.append(verify_discrepancy_sampler(spec, 0, empty, 0, 1, run.samples, run.seed, run.budget));
    if (n >= 2) {
      const auto mu = kernel_at(spec, 1, Trajectory{0});
      const auto nu = kernel_at(spec, 1, Trajectory{1});
      rep.append(verify_maximal_coupling(mu, nu, run.samples, run.seed ^ 0x636f75706c65ULL));
    }
  }

  // Tail domination needs a valid c; with a failed sensitivity check the
  // bounds themselves are not certified.
  if (condition_ok) {
    const BoundReport bounds = compare_bounds(spec, f, c, run.budget);
    const auto t = run.cfg.t.empty() ? default_t_grid(c) : run.cfg.t;
    const TailEstimate est = empirical_tail(spec, f, t, run.samples, run.seed, run.budget);
    rep.append(check_tail_domination(est, bounds));
    auto os = open_output(opts, "tail.csv", out);
    write_tail_csv(os, est, bounds.bounds);
  }

  {
    auto os = open_output(opts, "verify.csv", out);
    rep.write_csv(os);
  }
  summarize(rep, out, err);
  out << "verify: " << (rep.passed() ? "PASS" : "FAIL") << " (" << rep.rows().size() << " checks, "
      << rep.failures() << " failed)\n";
  return rep.passed() ? kExitOk : kExitVerificationFailed;
}

int cmd_sweep(const CliOptions& opts, std::ostream& out, std::ostream&) {
  const Run run = load(opts);
  const ScenarioConfig& cfg = run.cfg;
  if (cfg.family != "window") throw ConfigError("family", "sweep needs the window family with a calibration target");
  const std::vector<std::size_t> horizons =
      cfg.sweep_horizons.empty() ? std::vector<std::size_t>{cfg.horizon} : cfg.sweep_horizons;

  std::ostringstream csv;
  csv << "N,mdc_proxy,scalar_collapse_proxy,sparse_terminal_proxy\n";
  for (std::size_t n : horizons) {
    const CalibratedWindow cw = calibrate_window(Alphabet(cfg.alphabet), cfg.window_width, n, cfg.window_alpha,
                                                 run.budget);
    const Resolvent gamma = resolvent(compute_interdependence(cw.spec, {run.budget, true}));
    const TargetFunction f = build_target(cfg, n);
    const SensitivityVector c = resolve_sensitivity(cfg, f, n, run.budget);
    const double sparse =
        c.terminal_sparse() ? sparse_terminal_tail(cw.achieved_alpha, c[n - 1]).proxy : std::nan("");
    csv << n << ',' << format_real(variance_proxy(gamma, c)) << ','
        << format_real(scalar_collapse_tail(gamma, c).proxy) << ',' << format_real(sparse) << '\n';
  }
  {
    auto os = open_output(opts, "sweep.csv", out);
    os << csv.str();
  }
  out << csv.str();
  return kExitOk;
}

int run_command(const std::string& name, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (name == "describe") return cmd_describe(opts, out, err);
    if (name == "matrix") return cmd_matrix(opts, out, err);
    if (name == "bounds") return cmd_bounds(opts, out, err);
    if (name == "verify") return cmd_verify(opts, out, err);
    if (name == "sweep") return cmd_sweep(opts, out, err);
    err << "error: unknown command '" << name << "'\n";
    return kExitConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const BudgetError& e) {
    err << "budget error: " << e.what() << "\n";
    return kExitBudgetError;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << "\n";
    return kExitCalibrationError;
  } catch (const ArgumentError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerificationFailed;
  }
}

}  // namespace mdc::cli
