// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "../oracles.hpp"
#include "mdc/commands.hpp"
#include "mdc/config.hpp"
#include "mdc/mdc.hpp"

using namespace mdc;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const Matrix kP = Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});

// Shared by criteria 4 and 5.
struct RandomInstance {
  ProcessSpec spec;
  TargetFunction f;
};

std::vector<RandomInstance> random_instances() {
  std::mt19937_64 rng(20240501);
  std::vector<RandomInstance> out;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 1 + rng() % 5, a = 1 + rng() % 3;
    auto spec = oracle::random_table_spec(rng, n, a);
    auto f = oracle::random_table_target(rng, n, a);
    out.push_back({std::move(spec), std::move(f)});
  }
  return out;
}

Outcome mcdiarmid() {
  const auto spec = build_independent(Alphabet(2), 10, {{0.5, 0.5}});
  const auto H = compute_interdependence(spec);
  const auto g = resolvent(H);
  const double proxy = variance_proxy(g, SensitivityVector::unit(10));
  const bool ok = H.matrix() == Matrix(10, 10) && g.matrix() == Matrix::identity(10) && std::abs(proxy - 10) <= 1e-12;
  return {ok, "H = 0, Gamma = I, proxy = " + format_real(proxy)};
}

Outcome markov_structure() {
  const std::size_t n = 8;
  const auto H = compute_interdependence(build_markov(kP, {0.5, 0.5}, n));
  bool ok = true;
  double worst_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i + 1) {
        worst_diag = std::max(worst_diag, std::abs(H(i, j) - 0.7));
      } else if (H(i, j) != 0.0) {
        ok = false;
      }
    }
  ok = ok && worst_diag <= 1e-12;
  const auto g = resolvent(H);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  int violations = 0;
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> c(n);
    for (auto& v : c) v = u(rng);
    const SensitivityVector cv(c);
    const double bound = cv.l2_squared() / (0.3 * 0.3);
    const double proxy = variance_proxy(g, cv);
    worst_ratio = std::max(worst_ratio, proxy / bound);
    if (proxy > bound) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, "superdiagonal error " + format_real(worst_diag) + ", max proxy/bound " + fmt("%.4f", worst_ratio) +
                  " over 100 c"};
}

Outcome tree_separation() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int structure_errors = 0, bound_checks = 0, bound_violations = 0, trees = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng() % 14;
    const std::size_t dmax = 1 + rng() % 4;
    const std::size_t a = 2 + rng() % 2;
    std::vector<std::optional<std::size_t>> parents(n);
    std::vector<std::size_t> degree(n, 0);
    for (std::size_t j = 1; j < n; ++j) {
      std::vector<std::size_t> open;
      for (std::size_t p = 0; p < j; ++p)
        if (degree[p] < dmax) open.push_back(p);
      if (open.empty() || u(rng) < 0.1) continue;  // occasional extra root
      const std::size_t p = open[rng() % open.size()];
      parents[j] = p;
      ++degree[p];
    }
    // Edge kernels mix a shared row with a random kernel, so alpha stays small.
    const double lambda = 0.35 * u(rng);
    const auto base = oracle::random_distribution(rng, a, false);
    std::vector<Matrix> kernels;
    for (std::size_t j = 0; j < n; ++j) {
      const auto R = oracle::random_stochastic(rng, a);
      Matrix K(a, a);
      for (std::size_t r = 0; r < a; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c + 1 < a; ++c) s += K(r, c) = lambda * R(r, c) + (1 - lambda) * base[c];
        K(r, a - 1) = 1.0 - s;
      }
      kernels.push_back(K);
    }
    const auto spec = build_causal_tree(parents, kernels, oracle::random_distribution(rng, a, false));
    const auto H = compute_interdependence(spec);
    ++trees;
    double alpha = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const bool edge = parents[j] && *parents[j] == i;
        if (!edge && H(i, j) != 0.0) ++structure_errors;
        if (edge && std::abs(H(i, j) - dobrushin_alpha(kernels[j])) > 1e-12) ++structure_errors;
        alpha = std::max(alpha, H(i, j));
      }
    const std::size_t d = std::max<std::size_t>(1, spec.structure().max_out_degree);
    if (alpha * static_cast<double>(d) < 1.0) {
      ++bound_checks;
      const double proxy = variance_proxy(resolvent(H), SensitivityVector::unit(n));
      const double bound = static_cast<double>(n) / std::pow(1.0 - alpha * static_cast<double>(d), 2);
      if (proxy > bound + 1e-9) ++bound_violations;
    }
  }
  return {structure_errors == 0 && bound_violations == 0 && bound_checks > 0,
          std::to_string(trees) + " trees, " + std::to_string(structure_errors) + " structure errors, " +
              std::to_string(bound_violations) + "/" + std::to_string(bound_checks) + " bound violations"};
}

Outcome oscillation_core(const std::vector<RandomInstance>& inst) {
  std::size_t rows = 0, violations = 0;
  double worst = INFINITY;
  for (const auto& [spec, f] : inst) {
    const auto c = lipschitz_vector_oracle(f, spec.alphabet(), spec.horizon());
    const auto rep = verify_oscillation_bound(spec, f, c);
    rows += rep.rows().size();
    violations += rep.failures();
    worst = std::min(worst, rep.worst_slack());
  }
  return {violations == 0, "50 specs, " + std::to_string(rows) + " pivot steps (worst prefix each), " + std::to_string(violations) +
                               " violations, min slack " + format_real(worst)};
}

Outcome discrepancy_recursion(const std::vector<RandomInstance>& inst) {
  std::size_t exact_rows = 0, exact_fail = 0, mc_rows = 0, mc_fail = 0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto& spec = inst[i].spec;
    const auto rep = verify_discrepancy_recursion(spec);
    exact_rows += rep.rows().size();
    exact_fail += rep.failures();
    if (spec.alphabet_size() < 2) continue;
    const auto mc = verify_discrepancy_sampler(spec, 0, Trajectory{}, 0, 1, 100'000, 500 + i);
    for (const auto& r : mc.rows()) {
      if (r.check != "discrepancy_mc_vs_exact") continue;
      ++mc_rows;
      if (!r.pass) ++mc_fail;
    }
  }
  return {exact_fail == 0 && mc_fail == 0, "exact " + std::to_string(exact_fail) + "/" + std::to_string(exact_rows) +
                                               " violations; Monte Carlo " + std::to_string(mc_fail) + "/" +
                                               std::to_string(mc_rows) + " outside 3 stderr"};
}

Outcome coupling_optimality() {
  std::mt19937_64 rng(6);
  std::size_t rows = 0, fails = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t a = 2 + rng() % 4;
    const auto mu = oracle::random_distribution(rng, a), nu = oracle::random_distribution(rng, a);
    const auto r = verify_maximal_coupling(mu, nu, 1'000'000, 1000 + rep, 4.0);
    rows += r.rows().size();
    fails += r.failures();
  }
  return {fails == 0, "100 pairs at 1e6 draws, " + std::to_string(fails) + "/" + std::to_string(rows) +
                          " comparisons outside 4 stderr"};
}

Outcome window_sweep(const std::filesystem::path& out_dir) {
  const std::vector<std::size_t> horizons{10, 20, 50, 100, 200};
  bool ok = true;
  double lo = INFINITY, hi = 0.0, worst_alpha = 0.0;
  for (std::size_t n : horizons) {
    const auto cw = calibrate_window(Alphabet(2), 5, n, 0.8);
    const auto H = compute_interdependence(cw.spec);
    const double l1 = operator_norms(H.matrix()).l1;
    worst_alpha = std::max(worst_alpha, std::abs(l1 - 0.8));
    const auto g = resolvent(H);
    const auto c = SensitivityVector::terminal(n);
    const double proxy = variance_proxy(g, c);
    const double scalar = scalar_collapse_tail(g, c).proxy;
    lo = std::min(lo, proxy);
    hi = std::max(hi, proxy);
    ok = ok && proxy <= 25.0 && scalar >= static_cast<double>(n);
  }
  ok = ok && worst_alpha <= 1e-3 && (hi - lo) / lo < 0.05;

  // The CLI sweep must emit the same curve as CSV.
  cli::CliOptions opts;
  opts.config_path = std::string(MDC_CONFIG_DIR) + "/sweep.yaml";
  opts.out_dir = out_dir.string();
  std::ostringstream out, err;
  const int rc = cli::run_command("sweep", opts, out, err);
  std::ifstream csv(out_dir / "sweep.csv");
  std::string header, line;
  std::getline(csv, header);
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  ok = ok && rc == 0 && header == "N,mdc_proxy,scalar_collapse_proxy,sparse_terminal_proxy" && rows == horizons.size();
  return {ok, "mdc proxy in [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "], spread " +
                  fmt("%.2f%%", 100 * (hi - lo) / lo) + ", |alpha - 0.8| <= " + format_real(worst_alpha) +
                  ", sweep.csv rows " + std::to_string(rows)};
}

Outcome kontorovich_divergence() {
  const auto c = SensitivityVector::unit(50);
  bool ok = true;
  for (double a : {0.5, 0.6, 0.9}) ok = ok && kontorovich_baseline(a, c).divergent;
  double worst = 0.0;
  for (double a : {0.1, 0.4, 0.49}) {
    const auto k = kontorovich_baseline(a, c);
    const double expected = std::pow((1 - a) / (1 - 2 * a), 2);
    worst = std::max(worst, std::abs(k.multiplier - expected));
    ok = ok && !k.divergent && std::isfinite(k.bound.proxy);
  }
  const double m4 = kontorovich_baseline(0.4, c).multiplier;
  ok = ok && worst <= 1e-12 && std::abs(m4 - 9.0) <= 1e-12;
  return {ok, "multiplier at 0.4 = " + format_real(m4) + ", max formula error " + format_real(worst)};
}

Outcome spectral_decay() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int kappa_fail = 0, schur_fail = 0, matrices = 0;
  double min_gap = INFINITY;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng() % 40;
    std::vector<double> phi(n - 1);
    double s = 0.0;
    for (auto& v : phi) s += v = u(rng) * (u(rng) < 0.5 ? 1.0 : 0.0);
    const double target = 0.99 * u(rng);
    if (s > 0)
      for (auto& v : phi) v *= target / s;
    Matrix H(n, n);
    for (std::size_t k = 1; k < n; ++k)
      for (std::size_t i = 0; i + k < n; ++i) H(i, i + k) = phi[k - 1] * (u(rng) < 0.3 ? u(rng) : 1.0);
    const InterdependenceMatrix Hm(H);
    const auto profile = uniform_decay_profile(Hm);
    const auto g = resolvent(Hm);
    const auto lb = kappa_lower_bound(profile.phi);
    if (!lb) {
      ++kappa_fail;
      continue;
    }
    const double gap = spectral_kappa(g) - *lb;
    min_gap = std::min(min_gap, gap);
    if (gap < -1e-9) ++kappa_fail;
    for (const Matrix* m : std::initializer_list<const Matrix*>{&H, &g.matrix()}) {
      const auto norms = operator_norms(*m);
      ++matrices;
      if (norms.l2 > std::sqrt(norms.l1 * norms.linf) + 1e-9) ++schur_fail;
    }
  }
  return {kappa_fail == 0 && schur_fail == 0, "kappa - (1-S)^2 >= " + format_real(min_gap) + ", " +
                                                  std::to_string(kappa_fail) + " kappa failures, " +
                                                  std::to_string(schur_fail) + "/" + std::to_string(matrices) +
                                                  " Schur failures"};
}

Outcome tail_domination() {
  std::size_t rows = 0, fails = 0;
  double worst = INFINITY;
  for (const char* name : {"independent", "markov", "tree"}) {
    const auto cfg = cli::load_config(std::string(MDC_CONFIG_DIR) + "/" + name + ".yaml");
    const auto spec = cli::build_spec(cfg);
    const auto f = cli::build_target(cfg, cfg.horizon);
    const auto c = cli::resolve_sensitivity(cfg, f, cfg.horizon, cfg.budget);
    const auto bounds = compare_bounds(spec, f, c);
    const auto est = empirical_tail(spec, f, default_t_grid(c), cfg.samples, cfg.seed);
    const auto rep = check_tail_domination(est, bounds);
    rows += rep.rows().size();
    fails += rep.failures();
    worst = std::min(worst, rep.worst_slack());
  }
  return {fails == 0, "3 scenarios x 20 t values, " + std::to_string(fails) + "/" + std::to_string(rows) +
                          " exceedances beyond 3 stderr, min slack " + format_real(worst)};
}

}  // namespace

int main() {
  const auto out_dir = std::filesystem::current_path() / "acceptance_out";
  std::filesystem::create_directories(out_dir);
  const auto instances = random_instances();

  const std::vector<Criterion> criteria{
      {1, "McDiarmid recovery", 1.0, mcdiarmid},
      {2, "Markov structure and constant", 5.0, markov_structure},
      {3, "Causal-tree separation", 30.0, tree_separation},
      {4, "Oscillation core", 300.0, [&] { return oscillation_core(instances); }},
      {5, "Discrepancy recursion", 600.0, [&] { return discrepancy_recursion(instances); }},
      {6, "Maximal-coupling optimality", 120.0, coupling_optimality},
      {7, "Window sweep reproduction", 300.0, [&] { return window_sweep(out_dir); }},
      {8, "Baseline divergence", 1.0, kontorovich_divergence},
      {9, "Spectral decay coefficient", 60.0, spectral_decay},
      {10, "Tail domination", 600.0, tail_domination},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %2d %s  %s: %s (%.2f s%s)\n", c.id, pass ? "PASS" : "FAIL", c.title, o.detail.c_str(),
                secs, in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
