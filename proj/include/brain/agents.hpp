#pragma once

// Controllers sharing one observation/action interface: a static heuristic,
// ε-greedy Q-learning with replay, REINFORCE, and an adapter exposing the
// active-inference loop through the same calls.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "brain/categorical.hpp"
#include "brain/env.hpp"
#include "brain/genmodel.hpp"
#include "brain/inference.hpp"
#include "brain/slice_model.hpp"

namespace brain {

/// Observation indices are joint bin indices (ObsBinning::joint_index).
struct Transition {
  std::size_t obs = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::size_t next_obs = 0;
  bool done = false;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string name() const = 0;
  /// Clears all learned and per-episode state and reseeds internal randomness.
  virtual void begin_run(std::uint64_t seed) = 0;
  /// Marks an episode boundary that does not reset the environment.
  virtual void begin_episode() {}
  virtual std::size_t act(const KpmObservation& obs) = 0;
  /// p_t(a) the agent would use on `obs` right now; does not change state.
  virtual Categorical action_distribution(const KpmObservation& obs) const = 0;
  /// Distribution behind the most recent act().
  virtual const Categorical& last_distribution() const = 0;
  /// Training loss for this step, if the agent produces one.
  virtual std::optional<double> learn(const Transition& t) = 0;
  /// Off: greedy actions and frozen parameters.
  virtual void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }
  virtual std::size_t num_actions() const = 0;

 protected:
  bool training_ = true;
};

/// p(a) = ε/|A| + (1-ε)·1[a = argmax q]; argmax ties go to the lowest index.
Categorical egreedy_distribution(std::span<const double> q_values, double epsilon);

/// Shannon entropy of one action distribution (floored logs).
double step_entropy(const Categorical& p);
/// Arithmetic mean of per-step entropies.
double episode_entropy(std::span<const Categorical> ps);
double episode_entropy(std::span<const double> step_entropies);

std::size_t argmax_lowest(std::span<const double> v);

// --- heuristic ---------------------------------------------------------------

/// Index of the catalog entry (all-RR, no probe) whose PRB template is
/// nearest in L1 to the normalized weights; ties go to the lowest index.
/// Throws std::invalid_argument when weights are negative, all zero, or no
/// all-RR entry exists.
std::size_t heuristic_act(std::span<const SliceAction> catalog, const PerSlice<double>& weights);

class HeuristicAgent final : public Agent {
 public:
  HeuristicAgent(std::vector<SliceAction> catalog, PerSlice<double> weights);

  std::string name() const override { return "heuristic"; }
  void begin_run(std::uint64_t) override {}
  std::size_t act(const KpmObservation&) override { return action_; }
  Categorical action_distribution(const KpmObservation&) const override { return dist_; }
  const Categorical& last_distribution() const override { return dist_; }
  std::optional<double> learn(const Transition&) override { return std::nullopt; }
  std::size_t num_actions() const override { return num_actions_; }
  std::size_t action() const { return action_; }

 private:
  std::size_t num_actions_;
  std::size_t action_;
  Categorical dist_;
};

// --- features shared by the learning baselines -------------------------------

enum class FeatureKind {
  kFactored,  // bias + one-hot bin per slice
  kJoint,     // one-hot joint observation index (tabular)
};

class ObsFeatures {
 public:
  ObsFeatures(ObsBinning binning, FeatureKind kind);

  std::size_t size() const { return size_; }
  std::size_t num_obs() const { return binning_.num_joint(); }
  /// Indices of the active (value 1) features for a joint observation index.
  std::vector<std::size_t> active(std::size_t obs) const;
  const ObsBinning& binning() const { return binning_; }

 private:
  ObsBinning binning_;
  FeatureKind kind_;
  std::size_t size_;
};

// --- Q-learning --------------------------------------------------------------

struct QAgentConfig {
  // plain SGD on one-hot features; 1e-3 barely moves the greedy policy here
  double learning_rate = 1e-2;
  double discount = 0.99;
  std::size_t replay_capacity = 100000;
  std::size_t batch_size = 32;
  std::size_t target_sync = 500;  // steps between target snapshots; 0 = no target copy
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_steps = 6000;
  FeatureKind features = FeatureKind::kFactored;

  std::vector<std::string> violations() const;
};

class QAgent final : public Agent {
 public:
  QAgent(std::size_t num_actions, ObsBinning binning, QAgentConfig config);

  std::string name() const override { return "qlearn"; }
  void begin_run(std::uint64_t seed) override;
  std::size_t act(const KpmObservation& obs) override;
  Categorical action_distribution(const KpmObservation& obs) const override;
  const Categorical& last_distribution() const override { return last_dist_; }
  std::optional<double> learn(const Transition& t) override;
  std::size_t num_actions() const override { return num_actions_; }

  double epsilon() const;
  std::vector<double> q_values(std::size_t obs) const;
  const std::vector<double>& weights() const { return w_; }
  const QAgentConfig& config() const { return config_; }

 private:
  double q(const std::vector<double>& w, std::span<const std::size_t> phi, std::size_t a) const;
  std::vector<double> q_row(const std::vector<double>& w, std::span<const std::size_t> phi) const;

  std::size_t num_actions_;
  ObsFeatures features_;
  QAgentConfig config_;
  std::vector<double> w_;         // [action][feature]
  std::vector<double> target_w_;  // periodic snapshot used for bootstrap targets
  std::vector<Transition> replay_;
  std::size_t replay_next_ = 0;
  std::int64_t steps_ = 0;
  std::mt19937_64 rng_;
  Categorical last_dist_;
};

// --- REINFORCE ---------------------------------------------------------------

struct PolicyAgentConfig {
  double learning_rate = 5e-4;
  double discount = 0.99;
  std::size_t batch_episodes = 1;  // episodes per gradient step
  bool normalize_returns = false;  // standardize returns within each update
  FeatureKind features = FeatureKind::kFactored;

  std::vector<std::string> violations() const;
};

struct EpisodeStep {
  std::size_t obs = 0;
  std::size_t action = 0;
  double reward = 0.0;
};

class ReinforceAgent final : public Agent {
 public:
  ReinforceAgent(std::size_t num_actions, ObsBinning binning, PolicyAgentConfig config);

  std::string name() const override { return "reinforce"; }
  void begin_run(std::uint64_t seed) override;
  std::size_t act(const KpmObservation& obs) override;
  Categorical action_distribution(const KpmObservation& obs) const override;
  const Categorical& last_distribution() const override { return last_dist_; }
  /// Buffers the step; returns the loss when an update happens.
  std::optional<double> learn(const Transition& t) override;
  std::size_t num_actions() const override { return num_actions_; }

  Categorical policy(std::size_t obs) const;
  std::size_t act_index(std::size_t obs);
  /// One gradient step on Σ_t -ln π(a_t|s_t) G_t over the given episodes.
  /// Returns the mean of -ln π(a_t|s_t) G_t.
  double reinforce_update(std::span<const std::vector<EpisodeStep>> episodes);
  const std::vector<double>& parameters() const { return theta_; }

 private:
  std::size_t num_actions_;
  ObsFeatures features_;
  PolicyAgentConfig config_;
  std::vector<double> theta_;  // [action][feature]
  std::vector<EpisodeStep> current_;
  std::vector<std::vector<EpisodeStep>> pending_;
  std::mt19937_64 rng_;
  Categorical last_dist_;
};

// --- active inference --------------------------------------------------------

struct BrainAgentConfig {
  BrainModelConfig model = BrainModelConfig::defaults();
  ExtrinsicForm form = ExtrinsicForm::kPreferenceKl;
  bool fallback_on_zero_evidence = true;
  /// Learn the demand transitions from belief pairs, starting from a flat
  /// Dirichlet prior with this much mass per entry. Off when unset.
  std::optional<double> learn_transitions;
  /// Weight of one step's expected transition counts.
  double transition_learning_rate = 1.0;
  /// Per-step decay of learned counts toward the prior; 1 keeps everything.
  double transition_forgetting = 1.0;
  /// When set, counts only decay while a slice's recent surprise (fast
  /// average of -ln evidence) exceeds its long-run average by this many nats.
  std::optional<double> forgetting_surprise_margin;
  double surprise_fast_decay = 0.98;
  double surprise_slow_decay = 0.999;
};

class BrainAgent final : public Agent {
 public:
  BrainAgent(const ScenarioConfig& scenario, std::vector<SliceAction> catalog, ObsBinning binning,
             BrainAgentConfig config);

  std::string name() const override { return "brain"; }
  void begin_run(std::uint64_t seed) override;
  std::size_t act(const KpmObservation& obs) override;
  Categorical action_distribution(const KpmObservation& obs) const override;
  const Categorical& last_distribution() const override { return last_.posterior.q_a; }
  /// Reports the last perception step's VFE; learning happens in act().
  std::optional<double> learn(const Transition& t) override;
  std::size_t num_actions() const override { return builder_.catalog().size(); }

  /// Drops the belief back to the prior (used before frozen evaluations).
  void reset_belief();
  const ExplanationRecord& last_record() const { return last_.record; }
  const FactoredBelief& belief() const { return belief_; }
  const SliceModelBuilder& builder() const { return builder_; }
  /// Current transition estimate per slice (true B unless learning is on).
  std::vector<Matrix> transitions() const;

 private:
  struct StepOutput {
    BrainStepResult result;
    std::vector<std::vector<double>> likelihoods;  // per slice; empty before the first observation
  };
  StepOutput run_step(const KpmObservation& obs) const;
  FactoredModel model_for(const PerSlice<double>& backlog) const;

  SliceModelBuilder builder_;
  BrainAgentConfig config_;
  FactoredBelief belief_;
  std::optional<std::size_t> last_action_;
  PerSlice<double> last_backlog_{};  // context the last action was planned under
  std::vector<Matrix> b_counts_;
  std::vector<double> surprise_fast_, surprise_slow_;  // per slice, -ln evidence averages
  BrainStepResult last_;
  std::int64_t step_ = 0;
};

}  // namespace brain
