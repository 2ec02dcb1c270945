#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mdc/errors.hpp"
#include "mdc/process_model.hpp"

// Built-in target functions with their declared sensitivity vectors.

namespace mdc::targets {

inline TargetFunction constant(std::size_t horizon, double value = 0.0) {
  return {"constant", [value](std::span<const Symbol>) { return value; },
          SensitivityVector(std::vector<double>(horizon, 0.0))};
}

/// sum_i x_i over symbol indices.
inline TargetFunction symbol_sum(std::size_t horizon, std::size_t alphabet_size) {
  return {"sum",
          [](std::span<const Symbol> x) {
            double s = 0.0;
            for (Symbol v : x) s += v;
            return s;
          },
          SensitivityVector(std::vector<double>(horizon, static_cast<double>(alphabet_size - 1)))};
}

/// sum_i 1{x_i == symbol}.
inline TargetFunction symbol_count(std::size_t horizon, Symbol symbol) {
  return {"count",
          [symbol](std::span<const Symbol> x) {
            double s = 0.0;
            for (Symbol v : x) s += v == symbol ? 1.0 : 0.0;
            return s;
          },
          SensitivityVector::unit(horizon)};
}

/// sum_i w_i x_i.
inline TargetFunction linear(std::vector<double> weights, std::size_t alphabet_size) {
  std::vector<double> c(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    c[i] = std::abs(weights[i]) * static_cast<double>(alphabet_size - 1);
  return {"linear",
          [w = std::move(weights)](std::span<const Symbol> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
            return s;
          },
          SensitivityVector(std::move(c))};
}

/// 1{x_N == symbol}: only the final step matters.
inline TargetFunction terminal_indicator(std::size_t horizon, Symbol symbol = 1) {
  return {"terminal", [symbol](std::span<const Symbol> x) { return x.back() == symbol ? 1.0 : 0.0; },
          SensitivityVector::terminal(horizon, 1.0)};
}

/// (sum_i x_i) mod 2; XOR for bits.
inline TargetFunction parity(std::size_t horizon) {
  return {"parity",
          [](std::span<const Symbol> x) {
            std::size_t s = 0;
            for (Symbol v : x) s += v;
            return static_cast<double>(s % 2);
          },
          SensitivityVector::unit(horizon)};
}

/// Explicit value table indexed by sequence_code(x). No declared sensitivity.
inline TargetFunction table(std::size_t horizon, std::size_t alphabet_size, std::vector<double> values) {
  detail::require(values.size() == detail::trajectory_count(alphabet_size, horizon),
                  "targets::table: need one value per trajectory (" +
                      std::to_string(detail::trajectory_count(alphabet_size, horizon)) + ")");
  return {"table",
          [v = std::move(values), alphabet_size](std::span<const Symbol> x) {
            return v[sequence_code(x, alphabet_size)];
          },
          std::nullopt};
}

}  // namespace mdc::targets
