#pragma once

// Experiment orchestration: seeded training runs, cross-seed curves with
// confidence intervals, per-slice CDFs, shift response and forgetting.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "brain/agents.hpp"
#include "brain/env.hpp"
#include "brain/genmodel.hpp"
#include "brain/inference.hpp"

namespace brain {

enum class AgentKind { kBrain, kHeuristic, kQLearn, kReinforce };

std::string_view to_string(AgentKind k);
/// Accepts brain, heuristic, qlearn (alias dqn) and reinforce.
AgentKind parse_agent(std::string_view name);

struct AgentSpec {
  AgentKind kind = AgentKind::kBrain;
  PerSlice<double> heuristic_weights = {2.0, 1.0, 1.0};
  QAgentConfig q;
  PolicyAgentConfig policy;
  BrainAgentConfig brain;
};

/// Default hyperparameters for each agent kind as used by the harness.
AgentSpec default_agent_spec(AgentKind kind);

struct HarnessConfig {
  std::int64_t episode_length = 200;
  ObsBinning binning = ObsBinning::defaults();
  /// ε decays linearly over this fraction of each run's steps.
  double epsilon_decay_fraction = 0.3;
  /// Keep one ExplanationRecord per step for agents that produce them.
  bool record_explanations = false;
  /// Seeds run on this many threads; 0 picks the hardware concurrency.
  std::size_t threads = 0;
};

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const ScenarioConfig& scenario,
                                  const std::vector<SliceAction>& catalog, const HarnessConfig& harness,
                                  std::int64_t training_steps);

struct StepRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  std::size_t obs = 0;  // joint bin index of the observation the action was chosen on
  std::size_t action = 0;
  double reward = 0.0;
  double qos_fraction = 0.0;
  bool qos_all = false;
  std::optional<double> loss;
  double entropy = 0.0;
  double embb_throughput = 0.0;  // noise-free
  double urllc_prb = 0.0;        // share given to URLLC by the executed action
  std::int64_t mmtc_tb = 0;      // noise-free

  friend bool operator==(const StepRow&, const StepRow&) = default;
};

struct EpisodeRow {
  std::int64_t episode = 0;
  std::int64_t first_step = 0;
  std::int64_t steps = 0;
  double cumulative_reward = 0.0;
  std::optional<double> mean_loss;  // over steps that reported a loss
  double entropy = 0.0;             // mean per-step entropy
  double qos_mean = 0.0;            // mean all-slices indicator

  friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct RunRecord {
  std::string agent;
  std::uint64_t seed = 0;
  std::vector<StepRow> steps;
  std::vector<EpisodeRow> episodes;
  std::vector<ExplanationRecord> explanations;

  friend bool operator==(const RunRecord& a, const RunRecord& b) {
    return a.agent == b.agent && a.seed == b.seed && a.steps == b.steps && a.episodes == b.episodes;
  }
};

/// Per-episode aggregates rebuilt from step rows.
std::vector<EpisodeRow> aggregate_episodes(std::span<const StepRow> steps);
/// Largest absolute difference between stored and recomputed aggregates
/// (infinity when the episode structure differs).
double aggregate_mismatch(const RunRecord& record);

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One continuous trajectory of `scenario.horizon` steps with the env seeded
/// by `seed`, split into fixed-length episodes (the environment is not reset
/// between episodes). Errors are rethrown as RunError naming agent and seed.
RunRecord run_single(const AgentSpec& spec, ScenarioConfig scenario, std::uint64_t seed,
                     const HarnessConfig& harness = {});

std::vector<RunRecord> run_experiment(const AgentSpec& spec, const ScenarioConfig& scenario,
                                      std::span<const std::uint64_t> seeds, const HarnessConfig& harness = {});

struct CurvePoint {
  std::int64_t episode = 0;
  std::int64_t step = 0;  // first step of the episode
  std::size_t n = 0;      // seeds contributing
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

enum class CurveMetric { kReward, kLoss, kEntropy, kQos };
std::string_view to_string(CurveMetric m);

/// Mean and normal-approximation 95% interval across runs, per episode.
std::vector<CurvePoint> curve(std::span<const RunRecord> runs, CurveMetric metric);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};
/// mean ± 1.96·s/√n with the sample standard deviation; half width 0 for n < 2.
MeanCi mean_ci95(std::span<const double> xs);

// --- CDFs --------------------------------------------------------------------

struct CdfRow {
  std::string slice;
  std::string metric;
  double value = 0.0;
  double quantile = 0.0;

  friend bool operator==(const CdfRow&, const CdfRow&) = default;
};

/// F(x) = #{v <= x} / n over the distinct observed values.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);
double cdf_at(std::span<const std::pair<double, double>> cdf, double x);

/// eMBB throughput, URLLC PRB ratio and mMTC TBs pooled over all runs.
std::vector<CdfRow> kpm_cdfs(std::span<const RunRecord> runs);

// --- shift response ----------------------------------------------------------

class NoShiftEvent : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ShiftOptions {
  std::int64_t window = 500;       // rolling window for the QoS indicator
  double recovery_fraction = 0.95;
};

struct ShiftReport {
  std::string agent;
  std::uint64_t seed = 0;
  std::int64_t shift_step = 0;
  double pre_mean = 0.0;     // last half of the pre-shift period
  double post_min = 0.0;     // lowest rolling mean after the shift
  double drop_depth = 0.0;   // max(0, pre_mean - post_min)
  std::optional<std::int64_t> recovery_time;  // empty when unrecovered
  double post_mean = 0.0;    // last half of the post-shift period

  friend bool operator==(const ShiftReport&, const ShiftReport&) = default;
};

/// Computes the report from one run's per-step all-slices indicator.
ShiftReport shift_report(const RunRecord& run, std::int64_t shift_step, const ShiftOptions& options = {});

/// Every agent runs the same shifted scenario on the same seeds.
std::vector<std::vector<ShiftReport>> stress_shift(std::span<const AgentSpec> agents, const ScenarioConfig& scenario,
                                                   std::span<const std::uint64_t> seeds,
                                                   const HarnessConfig& harness = {},
                                                   const ShiftOptions& options = {});

/// Median with unrecovered runs ranked after every recovered one; empty if
/// the median run is unrecovered.
std::optional<double> median_recovery(std::span<const ShiftReport> reports);
double median(std::vector<double> xs);

/// Default surge: URLLC demand turns persistently High at half the horizon.
ScenarioConfig surge_scenario(ScenarioConfig base = ScenarioConfig::defaults());

// --- forgetting --------------------------------------------------------------

struct ForgettingOptions {
  std::int64_t phase_steps = 6000;
  std::int64_t eval_steps = 600;
  std::vector<std::uint64_t> eval_seeds = {1001, 1002};
};

struct ForgettingReport {
  std::string agent;
  std::uint64_t seed = 0;
  std::vector<std::string> phases;  // training schedule, also the evaluation profiles
  /// performance[i][j]: mean reward per step on phase i's traffic after training phase j.
  std::vector<std::vector<double>> performance;

  /// (perf on phase 0 after phase 0 - after `phase`) / |after phase 0|.
  double retention_gap(std::size_t phase) const;

  friend bool operator==(const ForgettingReport&, const ForgettingReport&) = default;
};

struct ForgettingPhase {
  std::string name;
  ScenarioConfig scenario;
};

/// eMBB-, URLLC-, mMTC-dominant traffic, then eMBB again.
std::vector<ForgettingPhase> forgetting_phases(const ScenarioConfig& base = ScenarioConfig::defaults());

ForgettingReport forgetting_scenario(const AgentSpec& spec, std::span<const ForgettingPhase> phases,
                                     std::uint64_t seed, const HarnessConfig& harness = {},
                                     const ForgettingOptions& options = {});

/// forgetting_scenario for every seed; seeds run in parallel.
std::vector<ForgettingReport> forgetting_experiment(const AgentSpec& spec, std::span<const ForgettingPhase> phases,
                                                   std::span<const std::uint64_t> seeds,
                                                   const HarnessConfig& harness = {},
                                                   const ForgettingOptions& options = {});

}  // namespace brain
