#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdc/errors.hpp"
#include "mdc/matrix.hpp"
#include "mdc/process_model.hpp"

namespace mdc::cli {

/// Schema or value error in a scenario file. The message carries
/// `source:line:column: field 'path': reason`.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what) : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct TargetConfig {
  std::string kind = "sum";  // sum | count | terminal | linear | parity | constant | table
  Symbol symbol = 1;
  double value = 0.0;
  std::vector<double> weights;
  std::vector<double> values;
};

enum class SensitivityMode { declared, oracle, vector };

struct ScenarioConfig {
  std::string source = "<config>";
  std::string family;
  std::size_t horizon = 0;
  std::size_t alphabet = 0;

  // independent
  std::vector<ProbabilityVector> marginals;
  // markov
  std::optional<Matrix> transition;
  ProbabilityVector initial;
  // tree; parents are 0-based here, converted from the 1-based file form
  std::vector<std::optional<std::size_t>> parents;
  std::vector<Matrix> edge_kernels;
  ProbabilityVector root_marginal;
  // window
  std::size_t window_width = 0;
  double window_alpha = 0.0;
  // table
  std::vector<std::vector<ProbabilityVector>> tables;

  TargetConfig target;
  SensitivityMode sensitivity_mode = SensitivityMode::declared;
  std::vector<double> sensitivity;

  std::uint64_t seed = 1;
  std::uint64_t budget = kDefaultBudget;
  std::uint64_t samples = 100'000;
  std::vector<double> t;
  std::vector<std::size_t> sweep_horizons;
};

ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::string& path);

/// Process for the configured family at horizon n (the configured one by
/// default). Window configs are calibrated to window.alpha.
ProcessSpec build_spec(const ScenarioConfig& cfg, std::optional<std::size_t> horizon = std::nullopt);

/// Uncalibrated window structure; used where only signatures are needed.
ProcessSpec build_structure(const ScenarioConfig& cfg);

TargetFunction build_target(const ScenarioConfig& cfg, std::size_t horizon);

/// Declared vector, explicit vector, or brute-force oracle, per the config.
SensitivityVector resolve_sensitivity(const ScenarioConfig& cfg, const TargetFunction& f, std::size_t horizon,
                                      std::uint64_t budget);

std::vector<double> parse_real_list(const std::string& text);

}  // namespace mdc::cli
