#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mdc/dependency_matrix.hpp"
#include "mdc/errors.hpp"
#include "mdc/matrix.hpp"
#include "mdc/process_model.hpp"
#include "mdc/report.hpp"
#include "mdc/resolvent.hpp"
#include "mdc/rng.hpp"

namespace mdc {

namespace detail {

// Walks the cumulative sum of weight(a) and returns the first symbol whose
// running total exceeds target; the last positive-weight symbol otherwise.
template <class Weight>
Symbol walk(std::size_t n, double target, Weight&& weight) {
  double acc = 0.0;
  Symbol last = 0;
  for (std::size_t a = 0; a < n; ++a) {
    const double w = weight(a);
    if (w <= 0.0) continue;
    last = static_cast<Symbol>(a);
    acc += w;
    if (target < acc) return last;
  }
  return last;
}

}  // namespace detail

/// One draw (y, z) from the maximal coupling of mu and nu: y ~ mu, z ~ nu and
/// P(y != z) = TV(mu, nu). With probability 1 - TV a shared symbol comes from
/// the overlap min(mu, nu); otherwise y and z come independently from the
/// disjoint residuals (mu - nu)+ and (nu - mu)+.
template <class URBG>
std::pair<Symbol, Symbol> maximal_coupling_step(std::span<const double> mu, std::span<const double> nu, URBG& rng) {
  detail::require(mu.size() == nu.size(), "maximal_coupling_step: length mismatch");
  const std::size_t n = mu.size();
  double overlap = 0.0;
  for (std::size_t a = 0; a < n; ++a) overlap += std::min(mu[a], nu[a]);

  const double u = uniform01(rng);
  if (overlap > 0.0 && u < overlap) {
    const Symbol s = detail::walk(n, u, [&](std::size_t a) { return std::min(mu[a], nu[a]); });
    return {s, s};
  }
  auto pos = [&](std::size_t a) { return std::max(mu[a] - nu[a], 0.0); };
  auto neg = [&](std::size_t a) { return std::max(nu[a] - mu[a], 0.0); };
  double pos_mass = 0.0, neg_mass = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    pos_mass += pos(a);
    neg_mass += neg(a);
  }
  if (pos_mass <= 0.0 || neg_mass <= 0.0) {
    // overlap == 1 up to rounding and u landed in the sliver above it
    const Symbol s = detail::walk(n, u * overlap, [&](std::size_t a) { return std::min(mu[a], nu[a]); });
    return {s, s};
  }
  const Symbol y = detail::walk(n, uniform01(rng) * pos_mass, pos);
  const Symbol z = detail::walk(n, uniform01(rng) * neg_mass, neg);
  return {y, z};
}

/// Exact joint law of the maximal coupling: pi(a, a) = min(mu_a, nu_a) and
/// pi(a, b) = (mu - nu)+_a (nu - mu)+_b / TV off the diagonal.
inline Matrix maximal_coupling_joint(std::span<const double> mu, std::span<const double> nu) {
  detail::require(mu.size() == nu.size(), "maximal_coupling_joint: length mismatch");
  const std::size_t n = mu.size();
  Matrix pi(n, n);
  double pos_mass = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    pi(a, a) = std::min(mu[a], nu[a]);
    pos_mass += std::max(mu[a] - nu[a], 0.0);
  }
  if (pos_mass <= 0.0) return pi;
  for (std::size_t a = 0; a < n; ++a) {
    const double p = std::max(mu[a] - nu[a], 0.0);
    if (p <= 0.0) continue;
    for (std::size_t b = 0; b < n; ++b) {
      const double q = std::max(nu[b] - mu[b], 0.0);
      if (q > 0.0) pi(a, b) += p * q / pos_mass;
    }
  }
  return pi;
}

/// Binomial standard error; counts of 0 or n report the rule-of-three 3/n.
inline double binomial_stderr(double p_hat, std::uint64_t n) {
  const double dn = static_cast<double>(n);
  if (p_hat <= 0.0 || p_hat >= 1.0) return 3.0 / dn;
  return std::sqrt(p_hat * (1.0 - p_hat) / dn);
}

/// One coupled rollout (Y, Z) pivoting at step k.
struct CouplingTrace {
  std::size_t pivot = 0;
  Trajectory prefix;
  Symbol x = 0;
  Symbol x_alt = 0;
  // Entries for steps pivot .. N-1.
  std::vector<Symbol> y;
  std::vector<Symbol> z;
  std::vector<bool> disagree;
};

struct DiscrepancyEstimate {
  std::vector<double> v_hat;
  std::vector<double> stderr;
  std::uint64_t n_samples = 0;
};

namespace detail {

inline void check_pivot(const ProcessSpec& spec, std::size_t k, std::span<const Symbol> prefix, Symbol x,
                        Symbol x_alt) {
  require(k < spec.horizon(), "pivot step " + std::to_string(k) + " outside horizon");
  require(prefix.size() == k, "prefix for pivot " + std::to_string(k) + " must have length " + std::to_string(k));
  for (Symbol s : prefix) require(s < spec.alphabet_size(), "prefix symbol out of range");
  require(x < spec.alphabet_size() && x_alt < spec.alphabet_size(), "pivot symbols out of range");
}

}  // namespace detail

/// Couples the continuations of (prefix, x) and (prefix, x_alt): at each later
/// step the two history-conditioned kernels are joined by a maximal coupling.
template <class URBG>
CouplingTrace coupled_rollout(const ProcessSpec& spec, std::size_t k, std::span<const Symbol> prefix, Symbol x,
                              Symbol x_alt, URBG& rng) {
  detail::check_pivot(spec, k, prefix, x, x_alt);
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  CouplingTrace tr;
  tr.pivot = k;
  tr.prefix.assign(prefix.begin(), prefix.end());
  tr.x = x;
  tr.x_alt = x_alt;

  Trajectory yh(prefix.begin(), prefix.end()), zh(prefix.begin(), prefix.end());
  yh.push_back(x);
  zh.push_back(x_alt);
  tr.y.push_back(x);
  tr.z.push_back(x_alt);
  tr.disagree.push_back(x != x_alt);
  ProbabilityVector mu(a), nu(a);
  for (std::size_t j = k + 1; j < n; ++j) {
    spec.evaluate(j, yh, mu);
    spec.evaluate(j, zh, nu);
    const auto [ys, zs] = maximal_coupling_step(mu, nu, rng);
    yh.push_back(ys);
    zh.push_back(zs);
    tr.y.push_back(ys);
    tr.z.push_back(zs);
    tr.disagree.push_back(ys != zs);
  }
  return tr;
}

/// Monte Carlo disagreement frequencies v_hat_j = P(Y_j != Z_j). Rollout s
/// draws from stream_for(seed, s).
inline DiscrepancyEstimate simulate_coupled_paths(const ProcessSpec& spec, std::size_t k,
                                                  std::span<const Symbol> prefix, Symbol x, Symbol x_alt,
                                                  std::uint64_t n_samples, std::uint64_t seed) {
  detail::check_pivot(spec, k, prefix, x, x_alt);
  detail::require(n_samples >= 1, "simulate_coupled_paths: need at least one rollout");
  const std::size_t n = spec.horizon();
  std::vector<std::uint64_t> counts(n, 0);
  for (std::uint64_t s = 0; s < n_samples; ++s) {
    Rng rng = stream_for(seed, s);
    const CouplingTrace tr = coupled_rollout(spec, k, prefix, x, x_alt, rng);
    for (std::size_t j = 0; j < tr.disagree.size(); ++j)
      if (tr.disagree[j]) ++counts[k + j];
  }
  DiscrepancyEstimate est;
  est.n_samples = n_samples;
  est.v_hat.resize(n);
  est.stderr.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    est.v_hat[j] = static_cast<double>(counts[j]) / static_cast<double>(n_samples);
    est.stderr[j] = binomial_stderr(est.v_hat[j], n_samples);
  }
  return est;
}

/// Gamma^T e_k: row k of the resolvent.
inline std::vector<double> discrepancy_bound(const Resolvent& gamma, std::size_t k) {
  detail::require(k < gamma.size(), "discrepancy_bound: pivot outside horizon");
  return gamma.row(k);
}

inline std::vector<double> discrepancy_bound(const InterdependenceMatrix& H, std::size_t k) {
  return discrepancy_bound(resolvent(H), k);
}

/// Kernel evaluations exact_discrepancy performs for pivot k.
inline std::uint64_t exact_discrepancy_cost(const ProcessSpec& spec, std::size_t k) {
  const std::uint64_t pairs = detail::saturating_mul(spec.alphabet_size(), spec.alphabet_size());
  std::uint64_t total = 0;
  for (std::size_t j = k + 1; j < spec.horizon(); ++j)
    total = detail::saturating_add(total, detail::saturating_mul(2, detail::saturating_pow(pairs, j - k - 1)));
  return total;
}

/// Exact v_j = P(Y_j != Z_j) for the maximal-coupling pair process, by forward
/// dynamic programming over the joint law of the coupled continuations.
inline std::vector<double> exact_discrepancy(const ProcessSpec& spec, std::size_t k, std::span<const Symbol> prefix,
                                             Symbol x, Symbol x_alt, std::uint64_t budget = kDefaultBudget) {
  detail::check_pivot(spec, k, prefix, x, x_alt);
  detail::check_budget("exact_discrepancy", exact_discrepancy_cost(spec, k), budget);
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();

  struct State {
    Trajectory y, z;  // continuation from step k
    double prob;
  };
  std::vector<State> states{{{x}, {x_alt}, 1.0}};
  std::vector<double> v(n, 0.0);
  v[k] = x != x_alt ? 1.0 : 0.0;

  Trajectory yh, zh;
  ProbabilityVector mu(a), nu(a);
  for (std::size_t j = k + 1; j < n; ++j) {
    std::vector<State> next;
    next.reserve(states.size() * a);
    for (const auto& st : states) {
      yh.assign(prefix.begin(), prefix.end());
      yh.insert(yh.end(), st.y.begin(), st.y.end());
      zh.assign(prefix.begin(), prefix.end());
      zh.insert(zh.end(), st.z.begin(), st.z.end());
      spec.evaluate(j, yh, mu);
      spec.evaluate(j, zh, nu);
      const Matrix pi = maximal_coupling_joint(mu, nu);
      for (std::size_t s = 0; s < a; ++s)
        for (std::size_t t = 0; t < a; ++t) {
          const double p = pi(s, t);
          if (p <= 0.0) continue;
          if (s != t) v[j] += st.prob * p;
          State ns{st.y, st.z, st.prob * p};
          ns.y.push_back(static_cast<Symbol>(s));
          ns.z.push_back(static_cast<Symbol>(t));
          next.push_back(std::move(ns));
        }
    }
    states = std::move(next);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Exact Doob martingale machinery

/// F_k(u) = E[f(X) | X_{<k} = u] by enumerating every continuation of u.
inline double integrate_continuations(const ProcessSpec& spec, const TargetFunction& f,
                                      std::span<const Symbol> history) {
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  Trajectory x(history.begin(), history.end());
  const std::size_t start = x.size();
  if (start == n) return f(x);
  x.resize(n, 0);
  std::vector<ProbabilityVector> probs(n, ProbabilityVector(a));
  std::vector<double> weight(n + 1, 1.0);
  std::size_t depth = start;
  spec.evaluate(depth, std::span<const Symbol>(x).first(depth), probs[depth]);
  double total = 0.0;
  while (true) {
    weight[depth + 1] = weight[depth] * probs[depth][x[depth]];
    if (weight[depth + 1] > 0.0) {
      if (depth + 1 == n) {
        total += weight[n] * f(x);
      } else {
        ++depth;
        spec.evaluate(depth, std::span<const Symbol>(x).first(depth), probs[depth]);
        x[depth] = 0;
        continue;
      }
    }
    while (true) {
      if (++x[depth] < a) break;
      x[depth] = 0;
      if (depth == start) return total;
      --depth;
    }
  }
}

/// delta_k(prefix) = max over x, x' of |F(prefix, x) - F(prefix, x')|.
inline double exact_oscillation(const ProcessSpec& spec, const TargetFunction& f, std::size_t k,
                                std::span<const Symbol> prefix, std::uint64_t budget = kDefaultBudget) {
  detail::check_pivot(spec, k, prefix, 0, 0);
  const std::size_t a = spec.alphabet_size();
  std::uint64_t required = 0;
  for (std::size_t len = k + 1; len <= spec.horizon(); ++len)
    required = detail::saturating_add(required, detail::trajectory_count(a, len - k));
  detail::check_budget("exact_oscillation", required, budget);

  double lo = INFINITY, hi = -INFINITY;
  Trajectory h(prefix.begin(), prefix.end());
  h.push_back(0);
  for (std::size_t s = 0; s < a; ++s) {
    h.back() = static_cast<Symbol>(s);
    const double v = integrate_continuations(spec, f, h);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

/// All levels of the integration function: value[k][code(u)] = F(u) for
/// u in A^k, and prob[k][code(u)] = P(X_{<k} = u).
struct IntegrationTable {
  std::vector<std::vector<double>> value;
  std::vector<std::vector<double>> prob;
};

inline std::uint64_t integration_table_cost(const ProcessSpec& spec) {
  std::uint64_t total = 0;
  for (std::size_t k = 0; k <= spec.horizon(); ++k)
    total = detail::saturating_add(total, detail::trajectory_count(spec.alphabet_size(), k));
  return total;
}

inline IntegrationTable integration_table(const ProcessSpec& spec, const TargetFunction& f,
                                          std::uint64_t budget = kDefaultBudget) {
  detail::check_budget("integration_table", integration_table_cost(spec), budget);
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  IntegrationTable t;
  t.value.resize(n + 1);
  t.prob.resize(n + 1);
  std::vector<std::vector<double>> kernels(n);  // kernels[k][code * a + s] = p_k(s | u)

  t.prob[0] = {1.0};
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t count = detail::trajectory_count(a, k);
    kernels[k].resize(count * a);
    t.prob[k + 1].assign(count * a, 0.0);
    for (std::uint64_t code = 0; code < count; ++code) {
      const Trajectory u = decode_sequence(code, k, a);
      std::span<double> p(kernels[k].data() + code * a, a);
      spec.evaluate(k, u, p);
      for (std::size_t s = 0; s < a; ++s) t.prob[k + 1][code * a + s] = t.prob[k][code] * p[s];
    }
  }
  const std::uint64_t leaves = detail::trajectory_count(a, n);
  t.value[n].resize(leaves);
  for (std::uint64_t code = 0; code < leaves; ++code) t.value[n][code] = f(decode_sequence(code, n, a));
  for (std::size_t k = n; k-- > 0;) {
    const std::uint64_t count = detail::trajectory_count(a, k);
    t.value[k].assign(count, 0.0);
    for (std::uint64_t code = 0; code < count; ++code) {
      double s = 0.0;
      for (std::size_t sym = 0; sym < a; ++sym)
        s += kernels[k][code * a + sym] * t.value[k + 1][code * a + sym];
      t.value[k][code] = s;
    }
  }
  return t;
}

namespace detail {

inline std::string format_sequence(std::span<const Symbol> x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace detail

inline constexpr double kExactTolerance = 1e-9;

/// Checks the declared c against the exhaustive oracle, then asserts
/// delta_k(prefix) <= (Gamma c)_k + 1e-9 for every pivot and every
/// positive-probability prefix. One "oscillation" row per pivot reports the
/// worst prefix; a too-small c yields "condition_2_1" failures and stops
/// before the bound check.
inline VerificationReport verify_oscillation_bound(const ProcessSpec& spec, const TargetFunction& f,
                                                   const SensitivityVector& c,
                                                   std::uint64_t budget = kDefaultBudget) {
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  detail::require(c.size() == n, "verify_oscillation_bound: sensitivity length must equal horizon");
  VerificationReport rep;

  const SensitivityVector oracle = lipschitz_vector_oracle(f, spec.alphabet(), n, budget);
  for (std::size_t j = 0; j < n; ++j) {
    if (c[j] + 1e-12 < oracle[j]) {
      rep.add({"condition_2_1", -1, static_cast<long>(j + 1), oracle[j], c[j], c[j] - oracle[j], false,
               "declared c_" + std::to_string(j + 1) + " = " + format_real(c[j]) +
                   " below exhaustive sensitivity " + format_real(oracle[j])});
    }
  }
  if (!rep.passed()) return rep;

  const Resolvent gamma = resolvent(compute_interdependence(spec, {budget, true}));
  const std::vector<double> gc = propagate(gamma, c);
  const IntegrationTable table = integration_table(spec, f, budget);

  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t count = detail::trajectory_count(a, k);
    double worst = 0.0;
    std::uint64_t worst_code = 0;
    for (std::uint64_t code = 0; code < count; ++code) {
      if (table.prob[k][code] <= 0.0) continue;
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t s = 0; s < a; ++s) {
        const double v = table.value[k + 1][code * a + s];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > worst) {
        worst = hi - lo;
        worst_code = code;
      }
    }
    const bool ok = worst <= gc[k] + kExactTolerance;
    rep.add({"oscillation", static_cast<long>(k + 1), -1, worst, gc[k], gc[k] - worst, ok,
             "prefix " + detail::format_sequence(decode_sequence(worst_code, k, a))});
  }
  return rep;
}

/// Exact pair-process check: for every pivot, prefix and pair x != x', the
/// coupled discrepancies satisfy v_j <= (Gamma^T e_k)_j + 1e-9. One row per
/// (k, j) with the worst case over prefixes and pairs.
inline VerificationReport verify_discrepancy_recursion(const ProcessSpec& spec,
                                                       std::uint64_t budget = kDefaultBudget) {
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  const Resolvent gamma = resolvent(compute_interdependence(spec, {budget, true}));

  std::uint64_t required = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t per = detail::saturating_mul(exact_discrepancy_cost(spec, k), a * (a - 1) / 2);
    required = detail::saturating_add(required, detail::saturating_mul(per, detail::trajectory_count(a, k)));
  }
  detail::check_budget("verify_discrepancy_recursion", required, budget);

  VerificationReport rep;
  for (std::size_t k = 0; k < n; ++k) {
    const auto bound = discrepancy_bound(gamma, k);
    std::vector<double> worst(n, 0.0);
    std::vector<std::string> witness(n);
    for_each_sequence(a, k, [&](std::span<const Symbol> prefix) {
      for (Symbol x = 0; x < a; ++x)
        for (Symbol y = x + 1; y < a; ++y) {
          const auto v = exact_discrepancy(spec, k, prefix, x, y, UINT64_MAX);
          for (std::size_t j = k + 1; j < n; ++j)
            if (witness[j].empty() || v[j] > worst[j]) {
              worst[j] = v[j];
              witness[j] = "prefix " + detail::format_sequence(prefix) + " pair (" + std::to_string(x) + "," +
                           std::to_string(y) + ")";
            }
        }
    });
    for (std::size_t j = k + 1; j < n; ++j) {
      const bool ok = worst[j] <= bound[j] + kExactTolerance;
      rep.add({"discrepancy_exact", static_cast<long>(k + 1), static_cast<long>(j + 1), worst[j], bound[j],
               bound[j] - worst[j], ok, witness[j]});
    }
  }
  return rep;
}

/// Empirical check of one maximal coupling: disagreement frequency against
/// TV and both empirical marginals against mu and nu, each within `z`
/// binomial standard errors.
inline VerificationReport verify_maximal_coupling(std::span<const double> mu, std::span<const double> nu,
                                                  std::uint64_t n_draws, std::uint64_t seed, double z = 4.0) {
  detail::require(mu.size() == nu.size(), "verify_maximal_coupling: length mismatch");
  detail::require(n_draws >= 1, "verify_maximal_coupling: need at least one draw");
  const std::size_t a = mu.size();
  std::vector<std::uint64_t> ycount(a, 0), zcount(a, 0);
  std::uint64_t disagree = 0;
  Rng rng = stream_for(seed, 0);
  for (std::uint64_t s = 0; s < n_draws; ++s) {
    const auto [y, w] = maximal_coupling_step(mu, nu, rng);
    ++ycount[y];
    ++zcount[w];
    if (y != w) ++disagree;
  }
  const double dn = static_cast<double>(n_draws);
  VerificationReport rep;
  auto row = [&](const std::string& name, long j, double observed, double expected) {
    const double se = binomial_stderr(observed, n_draws);
    const double gap = std::abs(observed - expected);
    rep.add({name, -1, j, observed, expected, z * se - gap, gap <= z * se, ""});
  };
  row("coupling_disagreement", -1, static_cast<double>(disagree) / dn, tv_distance(mu, nu));
  for (std::size_t s = 0; s < a; ++s) {
    row("coupling_marginal_y", static_cast<long>(s + 1), static_cast<double>(ycount[s]) / dn, mu[s]);
    row("coupling_marginal_z", static_cast<long>(s + 1), static_cast<double>(zcount[s]) / dn, nu[s]);
  }
  return rep;
}

/// Monte Carlo discrepancies against the exact pair process, entry-wise
/// within `z` standard errors, plus domination of Gamma^T e_k.
inline VerificationReport verify_discrepancy_sampler(const ProcessSpec& spec, std::size_t k,
                                                     std::span<const Symbol> prefix, Symbol x, Symbol x_alt,
                                                     std::uint64_t n_samples, std::uint64_t seed,
                                                     std::uint64_t budget = kDefaultBudget, double z = 3.0) {
  const auto exact = exact_discrepancy(spec, k, prefix, x, x_alt, budget);
  const auto est = simulate_coupled_paths(spec, k, prefix, x, x_alt, n_samples, seed);
  const auto bound = discrepancy_bound(compute_interdependence(spec, {budget, true}), k);
  VerificationReport rep;
  const std::string ctx = "prefix " + detail::format_sequence(prefix) + " pair (" + std::to_string(x) + "," +
                          std::to_string(x_alt) + ")";
  for (std::size_t j = k; j < spec.horizon(); ++j) {
    const double gap = std::abs(est.v_hat[j] - exact[j]);
    rep.add({"discrepancy_mc_vs_exact", static_cast<long>(k + 1), static_cast<long>(j + 1), est.v_hat[j], exact[j],
             z * est.stderr[j] - gap, gap <= z * est.stderr[j], ctx});
    const double lim = bound[j] + z * est.stderr[j];
    rep.add({"discrepancy_mc_vs_bound", static_cast<long>(k + 1), static_cast<long>(j + 1), est.v_hat[j], bound[j],
             lim - est.v_hat[j], est.v_hat[j] <= lim, ctx});
  }
  return rep;
}

}  // namespace mdc
