#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "mdc/dependency_matrix.hpp"
#include "mdc/errors.hpp"
#include "mdc/matrix.hpp"
#include "mdc/process_model.hpp"

namespace mdc {

/// Gamma = (I - H)^{-1}: unit upper triangular and entry-wise nonnegative.
class Resolvent {
 public:
  Resolvent() = default;
  std::size_t size() const noexcept { return g_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return g_(i, j); }
  const Matrix& matrix() const noexcept { return g_; }

  std::vector<double> row(std::size_t k) const {
    auto r = g_.row(k);
    return {r.begin(), r.end()};
  }

 private:
  explicit Resolvent(Matrix g) : g_(std::move(g)) {}
  friend Resolvent resolvent(const Matrix& H);
  Matrix g_;
};

/// Column-by-column back substitution, skipping zero entries of H:
/// Gamma(i, j) = [i == j] + sum_{m > i} H(i, m) Gamma(m, j).
inline Resolvent resolvent(const Matrix& H) {
  detail::require(H.strictly_upper_triangular(), "resolvent: H must be strictly upper triangular");
  const std::size_t n = H.rows();
  std::vector<std::vector<std::pair<std::size_t, double>>> row_nz(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t m = i + 1; m < n; ++m)
      if (H(i, m) != 0.0) row_nz[i].emplace_back(m, H(i, m));

  Matrix g(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    g(j, j) = 1.0;
    for (std::size_t i = j; i-- > 0;) {
      double s = 0.0;
      for (auto [m, h] : row_nz[i]) {
        if (m > j) break;
        s += h * g(m, j);
      }
      g(i, j) = s;
    }
  }
  return Resolvent(std::move(g));
}

inline Resolvent resolvent(const InterdependenceMatrix& H) { return resolvent(H.matrix()); }

/// Gamma * c.
inline std::vector<double> propagate(const Resolvent& gamma, const SensitivityVector& c) {
  detail::require(gamma.size() == c.size(), "variance_proxy: dimension mismatch (" +
                                                std::to_string(gamma.size()) + " vs " +
                                                std::to_string(c.size()) + ")");
  return gamma.matrix().apply(c.values());
}

/// ||Gamma c||_2^2.
inline double variance_proxy(const Resolvent& gamma, const SensitivityVector& c) {
  const auto v = propagate(gamma, c);
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

struct OperatorNorms {
  double l1 = 0.0;    // max column abs-sum
  double linf = 0.0;  // max row abs-sum
  double l2 = 0.0;    // largest singular value
};

namespace detail {

inline double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Power iteration on M^T M. Starts from the all-ones vector and restarts
// once from a fixed pseudo-random vector if that start stagnates at zero.
inline double spectral_norm(const Matrix& M, double rel_tol = 1e-10, std::size_t max_iter = 10'000) {
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  double max_abs = 0.0;
  for (double v : M.data()) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0.0) return 0.0;

  auto run = [&](std::vector<double> x) -> double {
    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
      const double nx = norm2(x);
      if (nx == 0.0) return 0.0;
      for (double& v : x) v /= nx;
      const auto y = M.apply(x);
      auto z = M.apply_transpose(y);
      const double next = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
      if (it > 0 && std::abs(next - lambda) <= rel_tol * next) return next;
      lambda = next;
      x = std::move(z);
    }
    return lambda;
  };

  double lambda = run(std::vector<double>(M.cols(), 1.0));
  if (lambda <= 1e-300) {
    std::vector<double> x(M.cols());
    Rng rng(0x5eed);
    for (double& v : x) v = uniform01(rng) - 0.5;
    lambda = run(std::move(x));
  }
  return std::sqrt(lambda);
}

}  // namespace detail

inline OperatorNorms operator_norms(const Matrix& M) {
  OperatorNorms out;
  for (std::size_t i = 0; i < M.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < M.cols(); ++j) s += std::abs(M(i, j));
    out.linf = std::max(out.linf, s);
  }
  for (std::size_t j = 0; j < M.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < M.rows(); ++i) s += std::abs(M(i, j));
    out.l1 = std::max(out.l1, s);
  }
  out.l2 = detail::spectral_norm(M);
  return out;
}

/// kappa = ||Gamma||_2^{-2}.
inline double spectral_kappa(const Resolvent& gamma) {
  const double s = detail::spectral_norm(gamma.matrix());
  return 1.0 / (s * s);
}

/// (1 - S)^2 when S = sum phi_k < 1; empty otherwise.
inline std::optional<double> kappa_lower_bound(std::span<const double> phi) {
  double s = 0.0;
  for (double v : phi) {
    detail::require(v >= 0.0, "kappa_lower_bound: decay profile entries must be nonnegative");
    s += v;
  }
  if (s >= 1.0) return std::nullopt;
  return (1.0 - s) * (1.0 - s);
}

}  // namespace mdc
