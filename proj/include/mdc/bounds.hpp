#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdc/dependency_matrix.hpp"
#include "mdc/process_model.hpp"
#include "mdc/report.hpp"
#include "mdc/resolvent.hpp"

namespace mdc {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A sub-Gaussian tail bound P(|f - Ef| >= t) <= min(1, 2 exp(-2 t^2 / proxy)).
///
/// Inapplicable bounds keep their row (with the reason) so reports can show
/// why a bound does not apply. Non-certified rows are literature multipliers
/// reported for comparison only.
struct TailBound {
  std::string name;
  double proxy = 0.0;
  bool applicable = true;
  std::string reason;
  bool certified = true;

  double delta_at(double t) const {
    if (!applicable || t <= 0.0) return 1.0;
    if (proxy == 0.0) return 0.0;
    return std::min(1.0, 2.0 * std::exp(-2.0 * t * t / proxy));
  }
};

namespace detail {

inline TailBound inapplicable(std::string name, std::string reason, bool certified = true) {
  return TailBound{std::move(name), kInfinity, false, std::move(reason), certified};
}

}  // namespace detail

/// proxy = ||Gamma c||^2; always applicable.
inline TailBound mdc_tail(const Resolvent& gamma, const SensitivityVector& c) {
  return TailBound{"mdc", variance_proxy(gamma, c), true, "exact resolvent-sensitivity product", true};
}

inline TailBound mdc_tail(const InterdependenceMatrix& H, const SensitivityVector& c) {
  detail::require(H.size() == c.size(), "mdc_tail: dimension mismatch");
  return mdc_tail(resolvent(H), c);
}

/// proxy = ||c||^2 / kappa with kappa = ||Gamma||_2^{-2}.
inline TailBound kappa_tail(const Resolvent& gamma, const SensitivityVector& c) {
  detail::require(gamma.size() == c.size(), "kappa_tail: dimension mismatch");
  return TailBound{"kappa", c.l2_squared() / spectral_kappa(gamma), true, "spectral decay coefficient", true};
}

/// proxy = ||c||^2 / (1 - S)^2 for a uniform decay profile with S < 1.
inline TailBound decay_profile_tail(const DecayProfile& profile, const SensitivityVector& c) {
  const auto kappa_lb = kappa_lower_bound(profile.phi);
  if (!kappa_lb) return detail::inapplicable("uniform_decay", "decay profile sum S >= 1");
  return TailBound{"uniform_decay", c.l2_squared() / *kappa_lb, true, "kappa >= (1 - S)^2", true};
}

/// Contracting Markov chain: proxy = ||c||^2 / (1 - alpha)^2.
inline TailBound markov_tail(double alpha, const SensitivityVector& c) {
  detail::require(alpha >= 0.0, "markov_tail: alpha must be nonnegative");
  if (alpha >= 1.0) return detail::inapplicable("markov", "Dobrushin coefficient alpha >= 1");
  return TailBound{"markov", c.l2_squared() / ((1.0 - alpha) * (1.0 - alpha)), true, "alpha < 1", true};
}

/// Sub-critical causal tree with additive target: proxy = N c_max^2 / (1 - alpha D)^2.
inline TailBound tree_tail(double alpha, std::size_t max_out_degree, std::size_t horizon, double c_max = 1.0) {
  detail::require(max_out_degree >= 1, "tree_tail: out-degree bound D must be at least 1");
  detail::require(alpha >= 0.0, "tree_tail: alpha must be nonnegative");
  const double ad = alpha * static_cast<double>(max_out_degree);
  if (ad >= 1.0) return detail::inapplicable("tree", "alpha * D >= 1 (not sub-critical)");
  return TailBound{"tree", static_cast<double>(horizon) * c_max * c_max / ((1.0 - ad) * (1.0 - ad)), true,
                   "alpha * D < 1", true};
}

/// Terminal-only sensitivity under a column-sum bound: proxy = c_N^2 / (1 - alpha)^2.
inline TailBound sparse_terminal_tail(double alpha, double c_last) {
  detail::require(alpha >= 0.0, "sparse_terminal_tail: alpha must be nonnegative");
  if (alpha >= 1.0) return detail::inapplicable("sparse_terminal", "column-sum alpha >= 1");
  return TailBound{"sparse_terminal", c_last * c_last / ((1.0 - alpha) * (1.0 - alpha)), true,
                   "column-sum alpha < 1", true};
}

/// Scalar-collapse relaxation N ||Gamma||_inf^2 ||c||_inf^2.
inline TailBound scalar_collapse_tail(const Resolvent& gamma, const SensitivityVector& c) {
  detail::require(gamma.size() == c.size(), "scalar_collapse_tail: dimension mismatch");
  double row_max = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = i; j < gamma.size(); ++j) s += gamma(i, j);
    row_max = std::max(row_max, s);
  }
  const double cm = c.max_norm();
  return TailBound{"scalar_collapse", static_cast<double>(c.size()) * row_max * row_max * cm * cm, true,
                   "sub-multiplicative norm relaxation", true};
}

struct KontorovichBaseline {
  TailBound bound;
  double delta_inf_norm = 0.0;  // sum_{k=1}^{N-1} alpha^k for the unconditional matrix alpha^{j-i}
  double multiplier = 0.0;      // ((1 - alpha) / (1 - 2 alpha))^2
  bool divergent = false;       // alpha >= 1/2
};

/// Unconditional-influence baseline: resolvent multiplier (1 - ||Delta||_inf)^{-2}
/// with ||Delta||_inf -> alpha / (1 - alpha), scaled by N ||c||_inf^2.
inline KontorovichBaseline kontorovich_baseline(double alpha, const SensitivityVector& c) {
  detail::require(alpha >= 0.0, "kontorovich_baseline: alpha must be nonnegative");
  const std::size_t n = c.size();
  KontorovichBaseline out;
  double pw = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    pw *= alpha;
    out.delta_inf_norm += pw;
  }
  out.divergent = alpha >= 0.5;
  if (out.divergent) {
    out.multiplier = kInfinity;
    out.bound = detail::inapplicable("kontorovich", "divergent: alpha >= 1/2", false);
    return out;
  }
  const double r = (1.0 - alpha) / (1.0 - 2.0 * alpha);
  out.multiplier = r * r;
  const double cm = c.max_norm();
  out.bound = TailBound{"kontorovich", static_cast<double>(n) * out.multiplier * cm * cm, true,
                        "comparison-only multiplier", false};
  return out;
}

/// L2 transport baseline multiplier: proxy = ||c||^2 / (1 - sqrt(alpha))^2.
inline TailBound samson_baseline(double alpha, const SensitivityVector& c) {
  detail::require(alpha >= 0.0, "samson_baseline: alpha must be nonnegative");
  if (alpha >= 1.0) return detail::inapplicable("samson", "alpha >= 1", false);
  const double d = 1.0 - std::sqrt(alpha);
  return TailBound{"samson", c.l2_squared() / (d * d), true, "comparison-only multiplier", false};
}

struct BoundReport {
  std::vector<TailBound> bounds;
  std::size_t horizon = 0;
  std::size_t alphabet_size = 0;
  std::string family;
  std::string target;
  std::string sensitivity;
  double column_alpha = 0.0;
  std::optional<double> markov_alpha;
  std::optional<std::size_t> max_out_degree;
  double kappa = 0.0;
  std::optional<double> kappa_lower;

  const TailBound* find(const std::string& name) const {
    for (const auto& b : bounds)
      if (b.name == name) return &b;
    return nullptr;
  }
};

namespace detail {

// Support of H inside the first superdiagonal.
inline bool chain_supported(const InterdependenceMatrix& H) {
  for (std::size_t i = 0; i < H.size(); ++i)
    for (std::size_t j = i + 2; j < H.size(); ++j)
      if (H(i, j) != 0.0) return false;
  return true;
}

inline std::string describe(const SensitivityVector& c) {
  std::ostringstream os;
  os << "n=" << c.size() << " l2^2=" << format_real(c.l2_squared()) << " max=" << format_real(c.max_norm());
  if (c.terminal_sparse()) os << " terminal";
  return os.str();
}

}  // namespace detail

/// Every applicable bound for one scenario, sorted by proxy. Throws
/// std::logic_error if the exact proxy is not the smallest applicable one.
inline BoundReport compare_bounds(const ProcessSpec& spec, const TargetFunction& f, const SensitivityVector& c,
                                  std::uint64_t budget = kDefaultBudget) {
  detail::require(c.size() == spec.horizon(), "compare_bounds: sensitivity length must equal horizon");
  const InterdependenceMatrix H = compute_interdependence(spec, {budget, true});
  const Resolvent gamma = resolvent(H);
  const DecayProfile profile = uniform_decay_profile(H);

  BoundReport rep;
  rep.horizon = spec.horizon();
  rep.alphabet_size = spec.alphabet_size();
  rep.family = to_string(spec.family());
  rep.target = f.name;
  rep.sensitivity = detail::describe(c);
  rep.column_alpha = column_sum_alpha(H);
  rep.kappa = spectral_kappa(gamma);
  rep.kappa_lower = kappa_lower_bound(profile.phi);

  rep.bounds.push_back(mdc_tail(gamma, c));
  TailBound kt{"kappa", c.l2_squared() / rep.kappa, true, "spectral decay coefficient", true};
  rep.bounds.push_back(kt);
  rep.bounds.push_back(decay_profile_tail(profile, c));
  rep.bounds.push_back(scalar_collapse_tail(gamma, c));

  if (detail::chain_supported(H)) {
    const double alpha = profile.phi.empty() ? 0.0 : profile.phi.front();
    rep.markov_alpha = alpha;
    rep.bounds.push_back(markov_tail(alpha, c));
    rep.bounds.push_back(samson_baseline(alpha, c));
    rep.bounds.push_back(kontorovich_baseline(alpha, c).bound);
  }
  if (spec.family() == Family::tree) {
    double alpha = 0.0;
    for (double v : H.matrix().data()) alpha = std::max(alpha, v);
    const std::size_t d = std::max<std::size_t>(1, spec.structure().max_out_degree);
    rep.max_out_degree = spec.structure().max_out_degree;
    rep.bounds.push_back(tree_tail(alpha, d, spec.horizon(), c.max_norm()));
  }
  if (c.terminal_sparse()) rep.bounds.push_back(sparse_terminal_tail(rep.column_alpha, c[c.size() - 1]));

  std::stable_sort(rep.bounds.begin(), rep.bounds.end(),
                   [](const TailBound& a, const TailBound& b) { return a.proxy < b.proxy; });

  const double exact = rep.find("mdc")->proxy;
  for (const auto& b : rep.bounds) {
    if (b.applicable && exact > b.proxy * (1.0 + 1e-9) + 1e-12)
      throw std::logic_error("compare_bounds: exact proxy " + format_real(exact) + " exceeds " + b.name +
                             " proxy " + format_real(b.proxy));
  }
  return rep;
}

inline void write_bounds_csv(std::ostream& os, const BoundReport& rep, const std::vector<double>& t_values) {
  os << "bound,proxy,applicable,reason,t,delta\n";
  for (const auto& b : rep.bounds)
    for (double t : t_values)
      os << b.name << ',' << format_real(b.proxy) << ',' << (b.applicable ? "true" : "false") << ','
         << csv_field(b.reason) << ',' << format_real(t) << ',' << format_real(b.delta_at(t)) << '\n';
}

inline void print_bounds_table(std::ostream& os, const BoundReport& rep, const std::vector<double>& t_values) {
  os << "N=" << rep.horizon << "  |A|=" << rep.alphabet_size << "  family=" << rep.family
     << "  target=" << rep.target << "\n";
  os << "c: " << rep.sensitivity << "\n";
  os << "column-sum alpha=" << format_real(rep.column_alpha);
  if (rep.markov_alpha) os << "  chain alpha=" << format_real(*rep.markov_alpha);
  if (rep.max_out_degree) os << "  D=" << *rep.max_out_degree;
  os << "  kappa=" << format_real(rep.kappa);
  if (rep.kappa_lower) os << "  (1-S)^2=" << format_real(*rep.kappa_lower);
  os << "\n\n";
  os << std::left << std::setw(18) << "bound" << std::setw(20) << "proxy" << std::setw(12) << "applicable";
  for (double t : t_values) os << std::setw(14) << ("t=" + format_real(t));
  os << "note\n";
  for (const auto& b : rep.bounds) {
    os << std::setw(18) << b.name << std::setw(20) << format_real(b.proxy) << std::setw(12)
       << (b.applicable ? "yes" : "no");
    for (double t : t_values) {
      std::ostringstream cell;
      cell << std::setprecision(6) << b.delta_at(t);
      os << std::setw(14) << cell.str();
    }
    os << b.reason << (b.certified ? "" : " [comparison-only]") << "\n";
  }
}

}  // namespace mdc
