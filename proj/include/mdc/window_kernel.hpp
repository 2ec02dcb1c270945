#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <vector>

#include "mdc/dependency_matrix.hpp"
#include "mdc/errors.hpp"
#include "mdc/process_model.hpp"

namespace mdc {

// Symbol the mixture kernel concentrates on. Any single-symbol change in the
// window changes the hash, so every window coordinate carries influence.
inline Symbol window_hash(std::size_t step, std::span<const Symbol> window, std::size_t alphabet_size) {
  std::size_t h = step;
  for (Symbol s : window) h += s;
  return static_cast<Symbol>(h % alphabet_size);
}

/// Sliding-window process with p_j(. | ctx) = (1 - b_j) * uniform + b_j * delta_{hash(j, ctx)}.
inline ProcessSpec mixture_window_spec(Alphabet alphabet, std::size_t width, std::size_t horizon,
                                       std::vector<double> weights) {
  detail::require(weights.size() == horizon, "mixture_window_spec: need one mixture weight per step");
  for (double b : weights) detail::require(b >= 0.0 && b <= 1.0, "mixture_window_spec: weights must lie in [0, 1]");
  const std::size_t a = alphabet.size;
  auto kernel = [weights, a](std::size_t step, std::span<const Symbol> window, std::span<double> out) {
    const double b = weights[step];
    std::fill(out.begin(), out.end(), (1.0 - b) / static_cast<double>(a));
    out[window_hash(step, window, a)] += b;
  };
  return build_sliding_window(alphabet, width, std::move(kernel), horizon, std::move(weights));
}

struct CalibratedWindow {
  ProcessSpec spec;
  double achieved_alpha;
};

inline constexpr double kCalibrationTolerance = 1e-3;

/// Chooses per-step mixture weights so that every column of the exact H sums
/// to target_alpha (capped at weight 1), then re-checks the maximum column
/// sum against the target.
///
/// TV between two mixtures sharing the uniform component is b times the TV of
/// the point masses, so column sums scale linearly in each step's weight.
inline CalibratedWindow calibrate_window(Alphabet alphabet, std::size_t width, std::size_t horizon,
                                         double target_alpha, std::uint64_t budget = kDefaultBudget) {
  if (!(target_alpha >= 0.0) || !std::isfinite(target_alpha))
    throw CalibrationError("calibrate_window: target alpha must be a finite nonnegative number");

  const ProcessSpec probe = mixture_window_spec(alphabet, width, horizon, std::vector<double>(horizon, 1.0));
  const InterdependenceMatrix h_probe = compute_interdependence(probe, {budget, true});

  std::vector<double> weights(horizon, 0.0);
  for (std::size_t j = 0; j < horizon; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < j; ++i) col += h_probe(i, j);
    weights[j] = col > 0.0 ? std::min(1.0, target_alpha / col) : 0.0;
  }

  ProcessSpec spec = mixture_window_spec(alphabet, width, horizon, std::move(weights));
  const double achieved = column_sum_alpha(compute_interdependence(spec, {budget, true}));
  if (std::abs(achieved - target_alpha) > kCalibrationTolerance) {
    std::ostringstream os;
    os << "calibrate_window: cannot reach column sum " << target_alpha << " (achieved " << achieved
       << ", window " << width << ", alphabet " << alphabet.size << ", horizon " << horizon << ")";
    throw CalibrationError(os.str());
  }
  return {std::move(spec), achieved};
}

}  // namespace mdc
