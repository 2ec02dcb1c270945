#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mdc/errors.hpp"
#include "mdc/matrix.hpp"
#include "mdc/rng.hpp"

namespace mdc {

using Symbol = std::uint32_t;
using Trajectory = std::vector<Symbol>;
using ProbabilityVector = std::vector<double>;

inline constexpr double kProbabilityTolerance = 1e-12;

struct Alphabet {
  explicit Alphabet(std::size_t n) : size(n) {
    detail::require(n >= 1, "Alphabet: size must be at least 1");
  }
  std::size_t size;

  bool operator==(const Alphabet&) const = default;
};

inline void validate_probability_vector(std::span<const double> p, std::size_t expected_size,
                                        const std::string& what) {
  detail::require(p.size() == expected_size,
                  what + ": expected " + std::to_string(expected_size) + " entries, got " +
                      std::to_string(p.size()));
  double sum = 0.0;
  for (double v : p) {
    detail::require(std::isfinite(v) && v >= 0.0, what + ": entries must be finite and nonnegative");
    sum += v;
  }
  detail::require(std::abs(sum - 1.0) <= kProbabilityTolerance,
                  what + ": entries sum to " + std::to_string(sum) + ", not 1");
}

enum class Family { independent, markov, tree, window, table, custom };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::independent: return "independent";
    case Family::markov: return "markov";
    case Family::tree: return "tree";
    case Family::window: return "window";
    case Family::table: return "table";
    case Family::custom: return "custom";
  }
  return "custom";
}

/// Writes p_step(. | history) into `out`. `history` holds the symbols of steps
/// 0..step-1 (0-based), so history.size() == step.
using KernelFn =
    std::function<void(std::size_t step, std::span<const Symbol> history, std::span<double> out)>;

/// Structural metadata recorded by the family builders.
struct Structure {
  Family family = Family::custom;
  std::optional<Matrix> transition;                      // markov
  std::vector<std::optional<std::size_t>> parents;       // tree
  std::size_t max_out_degree = 0;                        // tree
  std::size_t window = 0;                                // window
  std::vector<double> mixture_weights;                   // calibrated window
};

/// A finite-horizon sequential process over a finite alphabet, given by its
/// per-step transition kernels. Immutable after construction.
///
/// Steps are 0-based. context_signature(j) lists the history coordinates the
/// kernel at step j actually reads; the kernel must be constant in all other
/// coordinates. Exact computations rely on this to prune enumeration.
class ProcessSpec {
 public:
  ProcessSpec(Alphabet alphabet, std::size_t horizon, KernelFn kernel,
              std::vector<std::vector<std::size_t>> signatures, Structure structure = {})
      : alphabet_(alphabet),
        horizon_(horizon),
        kernel_(std::make_shared<const KernelFn>(std::move(kernel))),
        signatures_(std::move(signatures)),
        structure_(std::move(structure)) {
    detail::require(horizon_ >= 1, "ProcessSpec: horizon must be at least 1");
    detail::require(signatures_.size() == horizon_,
                    "ProcessSpec: need one context signature per step");
    for (std::size_t j = 0; j < horizon_; ++j) {
      auto& sig = signatures_[j];
      std::sort(sig.begin(), sig.end());
      sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
      detail::require(sig.empty() || sig.back() < j,
                      "ProcessSpec: signature of step " + std::to_string(j) +
                          " reads a non-causal coordinate");
    }
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t alphabet_size() const noexcept { return alphabet_.size; }
  std::size_t horizon() const noexcept { return horizon_; }
  Family family() const noexcept { return structure_.family; }
  const Structure& structure() const noexcept { return structure_; }

  std::span<const std::size_t> context_signature(std::size_t step) const {
    return signatures_.at(step);
  }

  bool reads(std::size_t step, std::size_t coordinate) const {
    const auto& sig = signatures_.at(step);
    return std::binary_search(sig.begin(), sig.end(), coordinate);
  }

  // Unchecked evaluation for enumeration loops.
  void evaluate(std::size_t step, std::span<const Symbol> history, std::span<double> out) const {
    (*kernel_)(step, history, out);
  }

 private:
  Alphabet alphabet_;
  std::size_t horizon_;
  std::shared_ptr<const KernelFn> kernel_;
  std::vector<std::vector<std::size_t>> signatures_;
  Structure structure_;
};

/// Coordinate-wise bounded-difference constants c_j >= 0.
class SensitivityVector {
 public:
  SensitivityVector() = default;
  explicit SensitivityVector(std::vector<double> c) : c_(std::move(c)) {
    for (double v : c_)
      detail::require(std::isfinite(v) && v >= 0.0, "SensitivityVector: entries must be finite and >= 0");
  }

  static SensitivityVector unit(std::size_t n) { return SensitivityVector(std::vector<double>(n, 1.0)); }
  static SensitivityVector terminal(std::size_t n, double c_last = 1.0) {
    std::vector<double> c(n, 0.0);
    if (n > 0) c.back() = c_last;
    return SensitivityVector(std::move(c));
  }

  std::size_t size() const noexcept { return c_.size(); }
  double operator[](std::size_t j) const { return c_[j]; }
  std::span<const double> values() const noexcept { return c_; }

  double l2_squared() const {
    return std::inner_product(c_.begin(), c_.end(), c_.begin(), 0.0);
  }
  double max_norm() const { return c_.empty() ? 0.0 : *std::max_element(c_.begin(), c_.end()); }
  double sum() const { return std::accumulate(c_.begin(), c_.end(), 0.0); }

  // Only the last coordinate may be nonzero.
  bool terminal_sparse() const {
    return std::all_of(c_.begin(), c_.end() - (c_.empty() ? 0 : 1), [](double v) { return v == 0.0; });
  }

  bool operator==(const SensitivityVector&) const = default;

 private:
  std::vector<double> c_;
};

struct TargetFunction {
  std::string name;
  std::function<double(std::span<const Symbol>)> evaluate;
  std::optional<SensitivityVector> declared_sensitivity;

  double operator()(std::span<const Symbol> x) const { return evaluate(x); }
};

// ---------------------------------------------------------------------------
// Enumeration helpers

namespace detail {

inline std::uint64_t trajectory_count(std::size_t alphabet_size, std::size_t length) {
  return saturating_pow(alphabet_size, length);
}

// Advances x as an odometer over alphabet^n (last coordinate fastest).
// Returns false after the final element.
inline bool next_sequence(std::span<Symbol> x, std::size_t alphabet_size) {
  for (std::size_t i = x.size(); i-- > 0;) {
    if (++x[i] < alphabet_size) return true;
    x[i] = 0;
  }
  return false;
}

}  // namespace detail

/// Lexicographic index of a sequence (first symbol most significant).
inline std::uint64_t sequence_code(std::span<const Symbol> x, std::size_t alphabet_size) {
  std::uint64_t code = 0;
  for (Symbol s : x) code = code * alphabet_size + s;
  return code;
}

inline Trajectory decode_sequence(std::uint64_t code, std::size_t length, std::size_t alphabet_size) {
  Trajectory x(length, 0);
  for (std::size_t i = length; i-- > 0;) {
    x[i] = static_cast<Symbol>(code % alphabet_size);
    code /= alphabet_size;
  }
  return x;
}

/// Calls fn(x) for every x in alphabet^length in lexicographic order.
template <class Fn>
void for_each_sequence(std::size_t alphabet_size, std::size_t length, Fn&& fn) {
  Trajectory x(length, 0);
  do {
    fn(std::span<const Symbol>(x));
  } while (length > 0 && detail::next_sequence(x, alphabet_size));
}

// ---------------------------------------------------------------------------
// Kernel access

inline void check_history(const ProcessSpec& spec, std::size_t step, std::span<const Symbol> history) {
  detail::require(step < spec.horizon(), "step " + std::to_string(step) + " outside horizon " +
                                             std::to_string(spec.horizon()));
  detail::require(history.size() == step, "history for step " + std::to_string(step) +
                                              " must have length " + std::to_string(step) +
                                              ", got " + std::to_string(history.size()));
  for (Symbol s : history)
    detail::require(s < spec.alphabet_size(), "history symbol " + std::to_string(s) + " out of range");
}

/// p_step(. | history), validated.
inline ProbabilityVector kernel_at(const ProcessSpec& spec, std::size_t step,
                                   std::span<const Symbol> history) {
  check_history(spec, step, history);
  ProbabilityVector out(spec.alphabet_size(), 0.0);
  spec.evaluate(step, history, out);
  validate_probability_vector(out, spec.alphabet_size(), "kernel output at step " + std::to_string(step));
  return out;
}

/// Chain-rule product prod_i p_i(x_i | x_{<i}).
inline double joint_probability(const ProcessSpec& spec, std::span<const Symbol> trajectory) {
  detail::require(trajectory.size() == spec.horizon(),
                  "joint_probability: trajectory length " + std::to_string(trajectory.size()) +
                      " != horizon " + std::to_string(spec.horizon()));
  for (Symbol s : trajectory)
    detail::require(s < spec.alphabet_size(), "joint_probability: symbol out of range");
  ProbabilityVector p(spec.alphabet_size());
  double prob = 1.0;
  for (std::size_t i = 0; i < spec.horizon() && prob > 0.0; ++i) {
    spec.evaluate(i, trajectory.first(i), p);
    prob *= p[trajectory[i]];
  }
  return prob;
}

/// Randomized check that kernels ignore coordinates outside their signature.
/// Returns a description of the first violation found, if any.
inline std::optional<std::string> check_context_honesty(const ProcessSpec& spec, std::size_t probes,
                                                        std::uint64_t seed) {
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  ProbabilityVector p(a), q(a);
  for (std::size_t probe = 0; probe < probes; ++probe) {
    Rng rng = stream_for(seed, probe);
    const std::size_t step = static_cast<std::size_t>(rng() % n);
    Trajectory h(step), g(step);
    for (auto& s : h) s = static_cast<Symbol>(rng() % a);
    g = h;
    for (std::size_t m = 0; m < step; ++m)
      if (!spec.reads(step, m)) g[m] = static_cast<Symbol>(rng() % a);
    spec.evaluate(step, h, p);
    spec.evaluate(step, g, q);
    for (std::size_t s = 0; s < a; ++s) {
      if (std::abs(p[s] - q[s]) > 1e-15) {
        std::ostringstream os;
        os << "step " << step << " output changed under out-of-signature perturbation (symbol " << s
           << ": " << p[s] << " vs " << q[s] << ")";
        return os.str();
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Family builders

inline ProcessSpec build_independent(Alphabet alphabet, std::size_t horizon,
                                     std::vector<ProbabilityVector> marginals) {
  detail::require(horizon >= 1, "build_independent: horizon must be at least 1");
  detail::require(marginals.size() == 1 || marginals.size() == horizon,
                  "build_independent: give one shared marginal or one per step");
  for (std::size_t i = 0; i < marginals.size(); ++i)
    validate_probability_vector(marginals[i], alphabet.size, "marginal " + std::to_string(i));
  auto kernel = [m = std::move(marginals)](std::size_t step, std::span<const Symbol>, std::span<double> out) {
    const auto& src = m.size() == 1 ? m.front() : m[step];
    std::copy(src.begin(), src.end(), out.begin());
  };
  Structure st;
  st.family = Family::independent;
  return ProcessSpec(alphabet, horizon, std::move(kernel), std::vector<std::vector<std::size_t>>(horizon), st);
}

inline void validate_stochastic(const Matrix& P, std::size_t alphabet_size, const std::string& what) {
  detail::require(P.rows() == alphabet_size && P.cols() == alphabet_size,
                  what + ": must be " + std::to_string(alphabet_size) + "x" + std::to_string(alphabet_size));
  for (std::size_t r = 0; r < P.rows(); ++r)
    validate_probability_vector(P.row(r), alphabet_size, what + " row " + std::to_string(r));
}

/// Time-homogeneous chain: X_0 ~ init, X_j ~ P(. | X_{j-1}).
inline ProcessSpec build_markov(const Matrix& P, ProbabilityVector init, std::size_t horizon) {
  detail::require(horizon >= 1, "build_markov: horizon must be at least 1");
  detail::require(P.square() && P.rows() >= 1, "build_markov: transition matrix must be square");
  const Alphabet alphabet(P.rows());
  validate_stochastic(P, alphabet.size, "build_markov: transition matrix");
  validate_probability_vector(init, alphabet.size, "build_markov: initial distribution");

  std::vector<std::vector<std::size_t>> sig(horizon);
  for (std::size_t j = 1; j < horizon; ++j) sig[j] = {j - 1};
  auto kernel = [P, init = std::move(init)](std::size_t step, std::span<const Symbol> h, std::span<double> out) {
    if (step == 0) {
      std::copy(init.begin(), init.end(), out.begin());
    } else {
      auto row = P.row(h[step - 1]);
      std::copy(row.begin(), row.end(), out.begin());
    }
  };
  Structure st;
  st.family = Family::markov;
  st.transition = P;
  return ProcessSpec(alphabet, horizon, std::move(kernel), std::move(sig), std::move(st));
}

/// Directed forest: node j (0-based) draws from edge_kernels[j] given its
/// parent's symbol, or from root_marginal if it has no parent. Parents must
/// precede their children.
inline ProcessSpec build_causal_tree(std::vector<std::optional<std::size_t>> parents,
                                     std::vector<Matrix> edge_kernels, ProbabilityVector root_marginal) {
  const std::size_t horizon = parents.size();
  detail::require(horizon >= 1, "build_causal_tree: need at least one node");
  const Alphabet alphabet(root_marginal.size());
  validate_probability_vector(root_marginal, alphabet.size, "build_causal_tree: root marginal");
  detail::require(edge_kernels.size() == 1 || edge_kernels.size() == horizon,
                  "build_causal_tree: give one shared edge kernel or one per node");

  std::vector<std::size_t> out_degree(horizon, 0);
  std::vector<std::vector<std::size_t>> sig(horizon);
  for (std::size_t j = 0; j < horizon; ++j) {
    if (!parents[j]) continue;
    const std::size_t p = *parents[j];
    detail::require(p < j, "build_causal_tree: parent(" + std::to_string(j) + ") = " + std::to_string(p) +
                               " violates topological order");
    ++out_degree[p];
    sig[j] = {p};
    const auto& K = edge_kernels.size() == 1 ? edge_kernels.front() : edge_kernels[j];
    validate_stochastic(K, alphabet.size, "build_causal_tree: edge kernel of node " + std::to_string(j));
  }

  Structure st;
  st.family = Family::tree;
  st.parents = parents;
  st.max_out_degree = *std::max_element(out_degree.begin(), out_degree.end());

  auto kernel = [parents = std::move(parents), kernels = std::move(edge_kernels),
                 root = std::move(root_marginal)](std::size_t step, std::span<const Symbol> h, std::span<double> out) {
    if (!parents[step]) {
      std::copy(root.begin(), root.end(), out.begin());
      return;
    }
    const auto& K = kernels.size() == 1 ? kernels.front() : kernels[step];
    auto row = K.row(h[*parents[step]]);
    std::copy(row.begin(), row.end(), out.begin());
  };
  return ProcessSpec(alphabet, horizon, std::move(kernel), std::move(sig), std::move(st));
}

/// Kernel of a sliding-window process: receives the step and the last
/// min(W, step) symbols (oldest first).
using WindowKernelFn =
    std::function<void(std::size_t step, std::span<const Symbol> window, std::span<double> out)>;

// Step j reads coordinates max(0, j - width) .. j - 1.
inline std::vector<std::vector<std::size_t>> window_signatures(std::size_t width, std::size_t horizon) {
  std::vector<std::vector<std::size_t>> sig(horizon);
  for (std::size_t j = 0; j < horizon; ++j)
    for (std::size_t m = j > width ? j - width : 0; m < j; ++m) sig[j].push_back(m);
  return sig;
}

inline ProcessSpec build_sliding_window(Alphabet alphabet, std::size_t width, WindowKernelFn window_kernel,
                                       std::size_t horizon, std::vector<double> mixture_weights = {}) {
  detail::require(width >= 1, "build_sliding_window: window width must be positive");
  detail::require(horizon >= 1, "build_sliding_window: horizon must be at least 1");
  auto sig = window_signatures(width, horizon);
  auto kernel = [width, wk = std::move(window_kernel)](std::size_t step, std::span<const Symbol> h,
                                                      std::span<double> out) {
    const std::size_t lo = step > width ? step - width : 0;
    wk(step, h.subspan(lo), out);
  };
  Structure st;
  st.family = Family::window;
  st.window = width;
  st.mixture_weights = std::move(mixture_weights);
  return ProcessSpec(alphabet, horizon, std::move(kernel), std::move(sig), std::move(st));
}

/// Fully tabulated kernels: tables[j][sequence_code(history)] is p_j(. | history).
/// Every step reads its full history.
inline ProcessSpec build_table(Alphabet alphabet, std::vector<std::vector<ProbabilityVector>> tables) {
  const std::size_t horizon = tables.size();
  detail::require(horizon >= 1, "build_table: need at least one step");
  std::vector<std::vector<std::size_t>> sig(horizon);
  for (std::size_t j = 0; j < horizon; ++j) {
    const auto expected = detail::trajectory_count(alphabet.size, j);
    detail::require(tables[j].size() == expected,
                    "build_table: step " + std::to_string(j) + " needs " + std::to_string(expected) + " rows");
    for (std::size_t r = 0; r < tables[j].size(); ++r)
      validate_probability_vector(tables[j][r], alphabet.size,
                                  "build_table: step " + std::to_string(j) + " row " + std::to_string(r));
    sig[j].resize(j);
    std::iota(sig[j].begin(), sig[j].end(), std::size_t{0});
  }
  const std::size_t a = alphabet.size;
  auto kernel = [t = std::move(tables), a](std::size_t step, std::span<const Symbol> h, std::span<double> out) {
    const auto& row = t[step][sequence_code(h, a)];
    std::copy(row.begin(), row.end(), out.begin());
  };
  Structure st;
  st.family = Family::table;
  return ProcessSpec(alphabet, horizon, std::move(kernel), std::move(sig), std::move(st));
}

// ---------------------------------------------------------------------------
// Exact integration

/// E[f(X)] by exhaustive depth-first enumeration of the path space.
inline double exact_expectation(const ProcessSpec& spec, const TargetFunction& f,
                                std::uint64_t budget = kDefaultBudget) {
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  std::uint64_t required = 0;
  for (std::size_t k = 0; k <= n; ++k) required = detail::saturating_add(required, detail::trajectory_count(a, k));
  detail::check_budget("exact_expectation", required, budget);

  Trajectory x(n, 0);
  std::vector<ProbabilityVector> probs(n, ProbabilityVector(a));
  // Iterative DFS: weight[k] = P(X_{<k} = x_{<k}).
  std::vector<double> weight(n + 1, 1.0);
  double total = 0.0;
  std::size_t depth = 0;
  spec.evaluate(0, std::span<const Symbol>(x).first(0), probs[0]);
  x[0] = 0;
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
    // advance to next sibling, backtracking as needed
    while (true) {
      if (++x[depth] < a) break;
      x[depth] = 0;
      if (depth == 0) return total;
      --depth;
    }
  }
}

/// Minimal single-coordinate sensitivity vector, by exhaustion:
/// c_j = max |f(x) - f(x')| over x, x' differing only at j.
inline SensitivityVector lipschitz_vector_oracle(const TargetFunction& f, Alphabet alphabet, std::size_t horizon,
                                                 std::uint64_t budget = kDefaultBudget) {
  const std::size_t a = alphabet.size;
  const std::uint64_t count = detail::trajectory_count(a, horizon);
  const std::uint64_t required = detail::saturating_mul(detail::saturating_mul(count, horizon), a);
  detail::check_budget("lipschitz_vector_oracle", required, budget);

  std::vector<double> values;
  values.reserve(count);
  for_each_sequence(a, horizon, [&](std::span<const Symbol> x) { values.push_back(f(x)); });

  std::vector<std::uint64_t> stride(horizon, 1);
  for (std::size_t j = horizon; j-- > 1;) stride[j - 1] = stride[j] * a;

  std::vector<double> c(horizon, 0.0);
  Trajectory x(horizon, 0);
  std::uint64_t code = 0;
  do {
    for (std::size_t j = 0; j < horizon; ++j) {
      for (Symbol s = x[j] + 1; s < a; ++s) {
        const double d = std::abs(values[code] - values[code + (s - x[j]) * stride[j]]);
        c[j] = std::max(c[j], d);
      }
    }
    ++code;
  } while (detail::next_sequence(x, a));
  return SensitivityVector(std::move(c));
}

}  // namespace mdc
