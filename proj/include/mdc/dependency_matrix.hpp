#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdc/errors.hpp"
#include "mdc/matrix.hpp"
#include "mdc/process_model.hpp"

namespace mdc {

/// Half the L1 distance between two probability vectors.
inline double tv_distance(std::span<const double> mu, std::span<const double> nu) {
  detail::require(mu.size() == nu.size(), "tv_distance: length mismatch (" + std::to_string(mu.size()) +
                                              " vs " + std::to_string(nu.size()) + ")");
  double s = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) s += std::abs(mu[a] - nu[a]);
  return 0.5 * s;
}

/// Max TV distance between any two rows of a row-stochastic matrix.
inline double dobrushin_alpha(const Matrix& P) {
  double alpha = 0.0;
  for (std::size_t r = 0; r < P.rows(); ++r)
    for (std::size_t s = r + 1; s < P.rows(); ++s) alpha = std::max(alpha, tv_distance(P.row(r), P.row(s)));
  return alpha;
}

/// Strictly upper-triangular matrix of one-step TV influence bounds, with
/// entries in [0, 1].
class InterdependenceMatrix {
 public:
  InterdependenceMatrix() = default;
  explicit InterdependenceMatrix(std::size_t n) : m_(n, n) {}
  explicit InterdependenceMatrix(Matrix m) : m_(std::move(m)) {
    detail::require(m_.strictly_upper_triangular(), "InterdependenceMatrix: must be strictly upper triangular");
    for (double v : m_.data())
      detail::require(v >= 0.0 && v <= 1.0, "InterdependenceMatrix: entries must lie in [0, 1]");
  }

  std::size_t size() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

  void set(std::size_t i, std::size_t j, double v) {
    detail::require(i < j && j < size(), "InterdependenceMatrix: entry must be strictly upper triangular");
    detail::require(v >= 0.0 && v <= 1.0, "InterdependenceMatrix: entries must lie in [0, 1]");
    m_(i, j) = v;
  }

 private:
  Matrix m_;
};

struct InterdependenceOptions {
  std::uint64_t budget = kDefaultBudget;
  // false re-enables the full supremum over every history coordinate, for
  // cross-checking the pruned result.
  bool prune = true;
};

/// Kernel evaluations compute_interdependence will perform.
inline std::uint64_t interdependence_cost(const ProcessSpec& spec, bool prune = true) {
  std::uint64_t total = 0;
  for (std::size_t j = 0; j < spec.horizon(); ++j) {
    const std::size_t s = prune ? spec.context_signature(j).size() : j;
    total = detail::saturating_add(total, detail::trajectory_count(spec.alphabet_size(), s));
  }
  return total;
}

/// Exact H: H(i, j) = max over prefixes, pairs (x, x') at i and shared
/// intermediates of TV(p_j(. | z, x, w), p_j(. | z, x', w)).
///
/// With pruning the supremum runs only over the coordinates in
/// context_signature(j); every other coordinate is held at symbol 0, and
/// H(i, j) is exactly 0 for i outside the signature.
inline InterdependenceMatrix compute_interdependence(const ProcessSpec& spec,
                                                     const InterdependenceOptions& opts = {}) {
  const std::size_t n = spec.horizon();
  const std::size_t a = spec.alphabet_size();
  detail::check_budget("compute_interdependence", interdependence_cost(spec, opts.prune), opts.budget);

  InterdependenceMatrix H(n);
  std::vector<std::size_t> coords;
  std::vector<double> dists;
  Trajectory history;
  for (std::size_t j = 1; j < n; ++j) {
    coords.clear();
    if (opts.prune) {
      auto sig = spec.context_signature(j);
      coords.assign(sig.begin(), sig.end());
    } else {
      for (std::size_t m = 0; m < j; ++m) coords.push_back(m);
    }
    const std::size_t s = coords.size();
    if (s == 0) continue;

    // Tabulate the kernel over all assignments of the read coordinates;
    // assignment digit p (most significant first) is the symbol at coords[p].
    const std::uint64_t contexts = detail::trajectory_count(a, s);
    dists.assign(contexts * a, 0.0);
    history.assign(j, 0);
    Trajectory digits(s, 0);
    for (std::uint64_t code = 0; code < contexts; ++code) {
      for (std::size_t p = 0; p < s; ++p) history[coords[p]] = digits[p];
      spec.evaluate(j, history, std::span<double>(dists.data() + code * a, a));
      detail::next_sequence(digits, a);
    }

    std::uint64_t stride = 1;
    for (std::size_t p = s; p-- > 0;) {
      double best = 0.0;
      for (std::uint64_t code = 0; code < contexts; ++code) {
        const std::uint64_t digit = (code / stride) % a;
        const std::span<const double> mu(dists.data() + code * a, a);
        for (std::uint64_t other = digit + 1; other < a; ++other) {
          const std::uint64_t code2 = code + (other - digit) * stride;
          best = std::max(best, tv_distance(mu, std::span<const double>(dists.data() + code2 * a, a)));
        }
      }
      H.set(coords[p], j, std::min(best, 1.0));
      stride *= a;
    }
  }
  return H;
}

/// max_j sum_{i<j} H(i, j).
inline double column_sum_alpha(const InterdependenceMatrix& H) {
  double best = 0.0;
  for (std::size_t j = 0; j < H.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += H(i, j);
    best = std::max(best, s);
  }
  return best;
}

struct DecayProfile {
  std::vector<double> phi;  // phi[k-1] = max_i H(i, i+k)
  double total = 0.0;       // S
  bool subcritical = false; // S < 1
};

inline DecayProfile uniform_decay_profile(const InterdependenceMatrix& H) {
  const std::size_t n = H.size();
  DecayProfile prof;
  prof.phi.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) m = std::max(m, H(i, i + k));
    prof.phi[k - 1] = m;
    prof.total += m;
  }
  prof.subcritical = prof.total < 1.0;
  return prof;
}

}  // namespace mdc
