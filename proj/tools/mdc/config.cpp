#include "mdc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mdc/montecarlo.hpp"
#include "mdc/targets.hpp"
#include "mdc/window_kernel.hpp"

namespace mdc::cli {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& field, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (at.IsDefined() && at.Mark().line >= 0) os << ':' << at.Mark().line + 1 << ':' << at.Mark().column + 1;
    os << ": field '" << field << "': " << msg;
    throw ConfigError(field, os.str());
  }

  void check_map(const YAML::Node& node, const std::string& path) const {
    if (!node.IsMap()) fail(node, path, "expected a mapping");
  }

  void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) const {
    check_map(node, path);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, join(path, key), "unknown key");
    }
  }

  YAML::Node required(const YAML::Node& node, const std::string& path, const std::string& key) const {
    YAML::Node child = node[key];
    if (!child.IsDefined() || child.IsNull()) fail(node, join(path, key), "missing required field");
    return child;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  double real(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a number");
    double v = 0.0;
    try {
      v = node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected a number, got '" + node.Scalar() + "'");
    }
    if (!std::isfinite(v)) fail(node, path, "must be finite");
    return v;
  }

  std::uint64_t unsigned_int(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a nonnegative integer");
    const std::string& s = node.Scalar();
    if (s.empty() || s.find_first_not_of("0123456789_") != std::string::npos)
      fail(node, path, "expected a nonnegative integer, got '" + s + "'");
    try {
      return node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(node, path, "integer out of range: '" + s + "'");
    }
  }

  std::size_t positive(const YAML::Node& node, const std::string& path) const {
    const auto v = unsigned_int(node, path);
    if (v == 0) fail(node, path, "must be at least 1");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> reals(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence()) fail(node, path, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(real(node[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  ProbabilityVector probability(const YAML::Node& node, const std::string& path, std::size_t size) const {
    auto p = reals(node, path);
    try {
      validate_probability_vector(p, size, path);
    } catch (const ArgumentError& e) {
      fail(node, path, e.what());
    }
    return p;
  }

  Matrix stochastic(const YAML::Node& node, const std::string& path, std::size_t size) const {
    if (!node.IsSequence() || node.size() != size)
      fail(node, path, "expected " + std::to_string(size) + " rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < size; ++r)
      rows.push_back(probability(node[r], path + "[" + std::to_string(r) + "]", size));
    return Matrix::from_rows(rows);
  }

 private:
  std::string source_;
};

void parse_family(const Reader& rd, const YAML::Node& root, ScenarioConfig& cfg) {
  const std::size_t a = cfg.alphabet;
  const std::size_t n = cfg.horizon;
  const std::string& fam = cfg.family;
  for (const char* other : {"independent", "markov", "tree", "window", "table"})
    if (fam != other && root[other].IsDefined())
      rd.fail(root[other], other, "section does not match family '" + fam + "'");

  if (fam == "independent") {
    const YAML::Node sec = rd.required(root, "", "independent");
    rd.check_keys(sec, "independent", {"marginal", "marginals"});
    if (sec["marginal"].IsDefined() == sec["marginals"].IsDefined())
      rd.fail(sec, "independent.marginal", "give exactly one of 'marginal' or 'marginals'");
    if (sec["marginal"].IsDefined()) {
      cfg.marginals.push_back(rd.probability(sec["marginal"], "independent.marginal", a));
    } else {
      const YAML::Node ms = sec["marginals"];
      if (!ms.IsSequence() || ms.size() != n) rd.fail(ms, "independent.marginals", "need one marginal per step");
      for (std::size_t j = 0; j < n; ++j)
        cfg.marginals.push_back(rd.probability(ms[j], "independent.marginals[" + std::to_string(j) + "]", a));
    }
  } else if (fam == "markov") {
    const YAML::Node sec = rd.required(root, "", "markov");
    rd.check_keys(sec, "markov", {"transition", "initial"});
    cfg.transition = rd.stochastic(rd.required(sec, "markov", "transition"), "markov.transition", a);
    cfg.initial = rd.probability(rd.required(sec, "markov", "initial"), "markov.initial", a);
  } else if (fam == "tree") {
    const YAML::Node sec = rd.required(root, "", "tree");
    rd.check_keys(sec, "tree", {"parents", "edge_kernel", "edge_kernels", "root_marginal"});
    const YAML::Node ps = rd.required(sec, "tree", "parents");
    if (!ps.IsSequence() || ps.size() != n) rd.fail(ps, "tree.parents", "need one entry per node");
    for (std::size_t j = 0; j < n; ++j) {
      const std::string path = "tree.parents[" + std::to_string(j) + "]";
      const auto p = rd.unsigned_int(ps[j], path);
      if (p > j) rd.fail(ps[j], path, "parent must be an earlier node (1-based) or 0 for a root");
      cfg.parents.push_back(p == 0 ? std::nullopt : std::optional<std::size_t>(p - 1));
    }
    if (sec["edge_kernel"].IsDefined() == sec["edge_kernels"].IsDefined())
      rd.fail(sec, "tree.edge_kernel", "give exactly one of 'edge_kernel' or 'edge_kernels'");
    if (sec["edge_kernel"].IsDefined()) {
      cfg.edge_kernels.push_back(rd.stochastic(sec["edge_kernel"], "tree.edge_kernel", a));
    } else {
      const YAML::Node ks = sec["edge_kernels"];
      if (!ks.IsSequence() || ks.size() != n) rd.fail(ks, "tree.edge_kernels", "need one kernel per node");
      for (std::size_t j = 0; j < n; ++j)
        cfg.edge_kernels.push_back(rd.stochastic(ks[j], "tree.edge_kernels[" + std::to_string(j) + "]", a));
    }
    cfg.root_marginal = rd.probability(rd.required(sec, "tree", "root_marginal"), "tree.root_marginal", a);
  } else if (fam == "window") {
    const YAML::Node sec = rd.required(root, "", "window");
    rd.check_keys(sec, "window", {"width", "alpha"});
    cfg.window_width = rd.positive(rd.required(sec, "window", "width"), "window.width");
    const YAML::Node al = rd.required(sec, "window", "alpha");
    cfg.window_alpha = rd.real(al, "window.alpha");
    if (cfg.window_alpha < 0.0) rd.fail(al, "window.alpha", "must be nonnegative");
  } else if (fam == "table") {
    const YAML::Node sec = rd.required(root, "", "table");
    rd.check_keys(sec, "table", {"kernels"});
    const YAML::Node ks = rd.required(sec, "table", "kernels");
    if (!ks.IsSequence() || ks.size() != n) rd.fail(ks, "table.kernels", "need one table per step");
    for (std::size_t j = 0; j < n; ++j) {
      const std::string path = "table.kernels[" + std::to_string(j) + "]";
      const auto rows = detail::trajectory_count(a, j);
      if (!ks[j].IsSequence() || ks[j].size() != rows)
        rd.fail(ks[j], path, "step " + std::to_string(j + 1) + " needs " + std::to_string(rows) + " rows");
      std::vector<ProbabilityVector> t;
      for (std::size_t r = 0; r < rows; ++r)
        t.push_back(rd.probability(ks[j][r], path + "[" + std::to_string(r) + "]", a));
      cfg.tables.push_back(std::move(t));
    }
  } else {
    rd.fail(root["family"], "family", "unknown family '" + fam + "' (independent, markov, tree, window, table)");
  }
}

void parse_target(const Reader& rd, const YAML::Node& root, ScenarioConfig& cfg) {
  const YAML::Node sec = root["target"];
  if (!sec.IsDefined()) return;
  rd.check_keys(sec, "target", {"kind", "symbol", "value", "weights", "values"});
  TargetConfig& t = cfg.target;
  const YAML::Node kind = rd.required(sec, "target", "kind");
  t.kind = kind.as<std::string>();
  static const std::set<std::string> kinds{"sum", "count", "terminal", "linear", "parity", "constant", "table"};
  if (!kinds.contains(t.kind)) rd.fail(kind, "target.kind", "unknown target '" + t.kind + "'");

  auto only = [&](const std::set<std::string>& params) {
    for (const char* p : {"symbol", "value", "weights", "values"})
      if (sec[p].IsDefined() && !params.contains(p))
        rd.fail(sec[p], std::string("target.") + p, "not a parameter of target '" + t.kind + "'");
  };
  if (t.kind == "count" || t.kind == "terminal") {
    only({"symbol"});
    if (sec["symbol"].IsDefined()) {
      const auto s = rd.unsigned_int(sec["symbol"], "target.symbol");
      if (s >= cfg.alphabet) rd.fail(sec["symbol"], "target.symbol", "must be below the alphabet size");
      t.symbol = static_cast<Symbol>(s);
    } else if (cfg.alphabet < 2) {
      t.symbol = 0;
    }
  } else if (t.kind == "constant") {
    only({"value"});
    if (sec["value"].IsDefined()) t.value = rd.real(sec["value"], "target.value");
  } else if (t.kind == "linear") {
    only({"weights"});
    const YAML::Node w = rd.required(sec, "target", "weights");
    t.weights = rd.reals(w, "target.weights");
    if (t.weights.size() != cfg.horizon) rd.fail(w, "target.weights", "need one weight per step");
  } else if (t.kind == "table") {
    only({"values"});
    const YAML::Node v = rd.required(sec, "target", "values");
    t.values = rd.reals(v, "target.values");
    const auto expected = detail::trajectory_count(cfg.alphabet, cfg.horizon);
    if (t.values.size() != expected)
      rd.fail(v, "target.values", "need " + std::to_string(expected) + " values (one per trajectory)");
  } else {
    only({});
  }
}

void parse_sensitivity(const Reader& rd, const YAML::Node& root, ScenarioConfig& cfg) {
  const YAML::Node s = root["sensitivity"];
  const bool has_declared = cfg.target.kind != "table";
  if (!s.IsDefined()) {
    cfg.sensitivity_mode = has_declared ? SensitivityMode::declared : SensitivityMode::oracle;
    return;
  }
  if (s.IsScalar()) {
    const auto mode = s.as<std::string>();
    if (mode == "oracle") {
      cfg.sensitivity_mode = SensitivityMode::oracle;
    } else if (mode == "declared") {
      if (!has_declared) rd.fail(s, "sensitivity", "target 'table' has no declared sensitivity");
      cfg.sensitivity_mode = SensitivityMode::declared;
    } else {
      rd.fail(s, "sensitivity", "expected 'declared', 'oracle' or a list of numbers");
    }
    return;
  }
  cfg.sensitivity_mode = SensitivityMode::vector;
  cfg.sensitivity = rd.reals(s, "sensitivity");
  if (cfg.sensitivity.size() != cfg.horizon) rd.fail(s, "sensitivity", "need one entry per step");
  for (double v : cfg.sensitivity)
    if (v < 0.0) rd.fail(s, "sensitivity", "entries must be nonnegative");
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": parse error: " << e.msg;
    throw ConfigError("", os.str());
  }
  if (!root.IsDefined() || root.IsNull()) throw ConfigError("", source + ": empty config");
  rd.check_keys(root, "",
                {"family", "horizon", "alphabet", "independent", "markov", "tree", "window", "table", "target",
                 "sensitivity", "seed", "budget", "samples", "t", "sweep"});

  ScenarioConfig cfg;
  cfg.source = source;
  cfg.family = rd.required(root, "", "family").as<std::string>();

  if (root["sweep"].IsDefined()) {
    const YAML::Node sw = root["sweep"];
    rd.check_keys(sw, "sweep", {"horizons"});
    const YAML::Node hs = rd.required(sw, "sweep", "horizons");
    if (!hs.IsSequence() || hs.size() == 0) rd.fail(hs, "sweep.horizons", "expected a nonempty list");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const auto n = rd.positive(hs[i], "sweep.horizons[" + std::to_string(i) + "]");
      if (!cfg.sweep_horizons.empty() && n <= cfg.sweep_horizons.back())
        rd.fail(hs[i], "sweep.horizons", "must be strictly increasing");
      cfg.sweep_horizons.push_back(n);
    }
  }

  if (root["horizon"].IsDefined())
    cfg.horizon = rd.positive(root["horizon"], "horizon");
  else if (!cfg.sweep_horizons.empty())
    cfg.horizon = cfg.sweep_horizons.front();
  else
    rd.required(root, "", "horizon");
  cfg.alphabet = rd.positive(rd.required(root, "", "alphabet"), "alphabet");

  parse_family(rd, root, cfg);
  parse_target(rd, root, cfg);
  parse_sensitivity(rd, root, cfg);

  if (root["seed"].IsDefined()) cfg.seed = rd.unsigned_int(root["seed"], "seed");
  if (root["budget"].IsDefined()) cfg.budget = rd.positive(root["budget"], "budget");
  if (root["samples"].IsDefined()) {
    cfg.samples = rd.unsigned_int(root["samples"], "samples");
    if (cfg.samples < kMinTailSamples)
      rd.fail(root["samples"], "samples", "must be at least " + std::to_string(kMinTailSamples));
  }
  if (root["t"].IsDefined()) {
    cfg.t = rd.reals(root["t"], "t");
    if (cfg.t.empty()) rd.fail(root["t"], "t", "expected a nonempty list");
    for (double v : cfg.t)
      if (v < 0.0) rd.fail(root["t"], "t", "deviations must be nonnegative");
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", path + ": cannot read config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

ProcessSpec build_structure(const ScenarioConfig& cfg) {
  if (cfg.family == "window")
    return mixture_window_spec(Alphabet(cfg.alphabet), cfg.window_width, cfg.horizon,
                               std::vector<double>(cfg.horizon, 1.0));
  return build_spec(cfg);
}

ProcessSpec build_spec(const ScenarioConfig& cfg, std::optional<std::size_t> horizon) {
  const std::size_t n = horizon.value_or(cfg.horizon);
  const Alphabet alphabet(cfg.alphabet);
  if (n != cfg.horizon && cfg.family != "window" && cfg.family != "markov" && cfg.family != "independent")
    throw ConfigError("horizon", cfg.source + ": family '" + cfg.family + "' cannot be re-run at another horizon");
  if (cfg.family == "independent") {
    auto m = cfg.marginals;
    if (m.size() != 1 && m.size() != n) throw ConfigError("horizon", "per-step marginals do not cover horizon");
    return build_independent(alphabet, n, std::move(m));
  }
  if (cfg.family == "markov") return build_markov(*cfg.transition, cfg.initial, n);
  if (cfg.family == "tree") return build_causal_tree(cfg.parents, cfg.edge_kernels, cfg.root_marginal);
  if (cfg.family == "window") return calibrate_window(alphabet, cfg.window_width, n, cfg.window_alpha, cfg.budget).spec;
  return build_table(alphabet, cfg.tables);
}

TargetFunction build_target(const ScenarioConfig& cfg, std::size_t n) {
  const TargetConfig& t = cfg.target;
  if (t.kind == "sum") return targets::symbol_sum(n, cfg.alphabet);
  if (t.kind == "count") return targets::symbol_count(n, t.symbol);
  if (t.kind == "terminal") return targets::terminal_indicator(n, t.symbol);
  if (t.kind == "parity") return targets::parity(n);
  if (t.kind == "constant") return targets::constant(n, t.value);
  if (t.kind == "linear") {
    if (t.weights.size() != n) throw ConfigError("target.weights", "linear weights do not cover horizon");
    return targets::linear(t.weights, cfg.alphabet);
  }
  if (n != cfg.horizon) throw ConfigError("target.values", "table target cannot be re-run at another horizon");
  return targets::table(n, cfg.alphabet, t.values);
}

SensitivityVector resolve_sensitivity(const ScenarioConfig& cfg, const TargetFunction& f, std::size_t n,
                                      std::uint64_t budget) {
  switch (cfg.sensitivity_mode) {
    case SensitivityMode::vector:
      if (cfg.sensitivity.size() != n) throw ConfigError("sensitivity", "sensitivity does not cover horizon");
      return SensitivityVector(cfg.sensitivity);
    case SensitivityMode::declared:
      if (f.declared_sensitivity) return *f.declared_sensitivity;
      throw ConfigError("sensitivity", "target '" + f.name + "' has no declared sensitivity");
    case SensitivityMode::oracle:
      break;
  }
  return lipschitz_vector_oracle(f, Alphabet(cfg.alphabet), n, budget);
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("t", "empty entry in t list '" + text + "'");
    item = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(v) || v < 0.0)
      throw ConfigError("t", "invalid deviation '" + item + "' in t list");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("t", "t list is empty");
  return out;
}

}  // namespace mdc::cli
