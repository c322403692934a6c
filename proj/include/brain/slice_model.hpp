#pragma once

// Builds the agent's per-slice generative model for the slicing task.
// Latent state per slice: demand level. Observation per slice: bin of the
// slice's primary KPM. A depends on the action (the PRB share decides how
// much of the demand shows up in the KPM) and on the last reported backlog.

#include <vector>

#include "brain/env.hpp"
#include "brain/genmodel.hpp"

namespace brain {

struct BrainModelConfig {
  /// Preferred distribution over each slice's KPM bins.
  PerSlice<std::vector<double>> preferences;
  /// Mass added to every likelihood entry before renormalizing columns.
  double likelihood_floor = 1e-6;
  /// Predict KPMs from the last reported backlog plus fresh arrivals.
  bool queue_aware = true;
  /// Misspecified-B mode: rows mixed toward uniform by this weight.
  double transition_perturbation = 0.0;
  /// Action-posterior precision (entropy reporting only).
  double precision = 4.0;

  static BrainModelConfig defaults();
};

class SliceModelBuilder {
 public:
  SliceModelBuilder(ScenarioConfig scenario, ObsBinning binning, std::vector<SliceAction> catalog,
                    BrainModelConfig config);

  /// Model for one decision step; `backlog` is the last reported buffer per slice.
  FactoredModel build(const PerSlice<double>& backlog) const;

  /// P(bin | demand) for one slice under one action, as an M x 3 matrix.
  Matrix observation_matrix(SliceKind slice, const SliceAction& action, double backlog) const;

  const ScenarioConfig& scenario() const { return scenario_; }
  const ObsBinning& binning() const { return binning_; }
  const std::vector<SliceAction>& catalog() const { return catalog_; }
  const BrainModelConfig& config() const { return config_; }

 private:
  ScenarioConfig scenario_;
  ObsBinning binning_;
  std::vector<SliceAction> catalog_;
  BrainModelConfig config_;
  PerSlice<Matrix> transitions_;
  PerSlice<PreferenceModel> preferences_;
};

}  // namespace brain
