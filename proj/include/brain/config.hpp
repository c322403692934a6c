#pragma once

// Experiment configuration as JSON. Every object is parsed strictly: unknown
// keys are errors, missing keys keep their defaults. Overrides are
// `dotted.path=value` pairs applied to the effective JSON tree, so they can
// only replace keys that exist.

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "brain/genmodel.hpp"
#include "brain/harness.hpp"

namespace brain {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AgentSpecs {
  AgentSpec brain = default_agent_spec(AgentKind::kBrain);
  AgentSpec heuristic = default_agent_spec(AgentKind::kHeuristic);
  AgentSpec qlearn = default_agent_spec(AgentKind::kQLearn);
  AgentSpec reinforce = default_agent_spec(AgentKind::kReinforce);

  const AgentSpec& get(AgentKind k) const;
};

struct ExperimentConfig {
  ScenarioConfig scenario = ScenarioConfig::defaults();
  HarnessConfig harness;
  AgentSpecs agents;
  ShiftOptions shift;
  ForgettingOptions forgetting;
};

/// Pretty-printed JSON with a stable key order.
std::string to_json(const ExperimentConfig& config);
/// Parses on top of the defaults. Throws ConfigError naming the offending key.
ExperimentConfig experiment_from_json(std::string_view text);
ExperimentConfig load_experiment(const std::string& path);

/// Applies `path=value` overrides in order. Values are JSON literals; anything
/// that is not valid JSON is taken as a string.
ExperimentConfig apply_overrides(const ExperimentConfig& config, std::span<const std::string> overrides);

/// Scenario problems plus agent and harness parameter problems, prefixed by
/// their section.
std::vector<std::string> experiment_violations(const ExperimentConfig& config);

/// Generative model with row-major matrices:
/// {"A": [{"rows", "cols", "data"}...], "B": [...], "C": [ln P_pref], "D": [...],
///  "counts": null | {"a": [...], "b": [...]}}.
std::string to_json(const GenerativeModel& model);
GenerativeModel model_from_json(std::string_view text);

/// True when the JSON document looks like a generative model (has "A").
bool is_model_document(std::string_view text);

}  // namespace brain
