#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "mdc/bounds.hpp"
#include "mdc/coupling.hpp"
#include "mdc/errors.hpp"
#include "mdc/process_model.hpp"
#include "mdc/report.hpp"
#include "mdc/rng.hpp"

namespace mdc {

/// Forward (chain-rule) sample of one trajectory.
template <class URBG>
Trajectory sample_trajectory(const ProcessSpec& spec, URBG& rng) {
  const std::size_t n = spec.horizon();
  Trajectory x;
  x.reserve(n);
  ProbabilityVector p(spec.alphabet_size());
  for (std::size_t j = 0; j < n; ++j) {
    spec.evaluate(j, x, p);
    x.push_back(static_cast<Symbol>(sample_categorical(p, rng)));
  }
  return x;
}

struct TailEstimate {
  std::vector<double> t;
  std::vector<double> frequency;  // P_hat(|f - mean| >= t)
  std::vector<double> stderr;
  std::uint64_t n_samples = 0;
  double mean = 0.0;        // centering used
  bool exact_mean = false;  // mean came from exact enumeration
  double sample_mean = 0.0;
  double sample_std = 0.0;
};

/// 20 equally spaced points from 0 to sum_j c_j, the largest possible deviation.
inline std::vector<double> default_t_grid(const SensitivityVector& c, std::size_t points = 20) {
  std::vector<double> t(points);
  const double top = c.sum();
  for (std::size_t i = 0; i < points; ++i)
    t[i] = points == 1 ? top : top * static_cast<double>(i) / static_cast<double>(points - 1);
  return t;
}

inline constexpr std::uint64_t kMinTailSamples = 1000;

/// Empirical two-sided tail of f(X) - E f(X) on a t grid, centred by the
/// exact expectation when enumeration fits the budget and by the sample mean
/// otherwise. Sample s draws from stream_for(seed, s).
inline TailEstimate empirical_tail(const ProcessSpec& spec, const TargetFunction& f, const std::vector<double>& t_grid,
                                   std::uint64_t n_samples, std::uint64_t seed,
                                   std::uint64_t budget = kDefaultBudget) {
  detail::require(!t_grid.empty(), "empirical_tail: t grid must not be empty");
  detail::require(n_samples >= kMinTailSamples, "empirical_tail: need at least 1000 samples");

  TailEstimate est;
  est.t = t_grid;
  est.n_samples = n_samples;

  std::vector<double> values(n_samples);
  double sum = 0.0;
  for (std::uint64_t s = 0; s < n_samples; ++s) {
    Rng rng = stream_for(seed, s);
    values[s] = f(sample_trajectory(spec, rng));
    sum += values[s];
  }
  const double dn = static_cast<double>(n_samples);
  est.sample_mean = sum / dn;
  double ss = 0.0;
  for (double v : values) ss += (v - est.sample_mean) * (v - est.sample_mean);
  est.sample_std = std::sqrt(ss / (dn - 1.0));

  try {
    est.mean = exact_expectation(spec, f, budget);
    est.exact_mean = true;
  } catch (const BudgetError&) {
    est.mean = est.sample_mean;
    est.exact_mean = false;
  }

  // Closed tail; the small slack keeps deviations that equal t exactly from
  // being lost to rounding in the enumerated mean.
  est.frequency.resize(t_grid.size());
  est.stderr.resize(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const double thresh = t - 1e-12 * std::max(1.0, std::abs(t));
    std::uint64_t hits = 0;
    for (double v : values)
      if (std::abs(v - est.mean) >= thresh) ++hits;
    est.frequency[i] = static_cast<double>(hits) / dn;
    est.stderr[i] = binomial_stderr(est.frequency[i], n_samples);
  }
  return est;
}

inline constexpr double kTailStderrMultiplier = 3.0;

/// Empirical frequency <= bound.delta_at(t) + 3 stderr at every grid point.
/// Row `observed` is the frequency, `bound` the bound value, and the
/// tightness ratio is observed / bound.
inline VerificationReport check_tail_domination(const TailEstimate& est, const TailBound& bound) {
  VerificationReport rep;
  for (std::size_t i = 0; i < est.t.size(); ++i) {
    const double b = bound.delta_at(est.t[i]);
    const double lim = b + kTailStderrMultiplier * est.stderr[i];
    rep.add({"tail:" + bound.name, -1, static_cast<long>(i + 1), est.frequency[i], b, lim - est.frequency[i],
             est.frequency[i] <= lim, "t=" + format_real(est.t[i])});
  }
  return rep;
}

inline VerificationReport check_tail_domination(const TailEstimate& est, const BoundReport& report) {
  VerificationReport rep;
  for (const auto& b : report.bounds)
    if (b.applicable) rep.append(check_tail_domination(est, b));
  return rep;
}

/// TailEstimate against every applicable bound:
/// `t,empirical,stderr,bound_name,bound_value,pass`.
inline void write_tail_csv(std::ostream& os, const TailEstimate& est, const std::vector<TailBound>& bounds) {
  os << "t,empirical,stderr,bound_name,bound_value,pass\n";
  for (const auto& b : bounds) {
    if (!b.applicable) continue;
    for (std::size_t i = 0; i < est.t.size(); ++i) {
      const double bv = b.delta_at(est.t[i]);
      const bool ok = est.frequency[i] <= bv + kTailStderrMultiplier * est.stderr[i];
      os << format_real(est.t[i]) << ',' << format_real(est.frequency[i]) << ',' << format_real(est.stderr[i])
         << ',' << b.name << ',' << format_real(bv) << ',' << (ok ? "true" : "false") << '\n';
    }
  }
}

}  // namespace mdc
