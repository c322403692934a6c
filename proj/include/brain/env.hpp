#pragma once

// Seeded multi-slice gNB simulator: three slices share one cell's PRB
// budget, each with a hidden Markov demand level and an unbounded queue.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace brain {

enum class SliceKind : std::uint8_t { kEmbb = 0, kUrllc = 1, kMmtc = 2 };
enum class DemandLevel : std::uint8_t { kLow = 0, kMedium = 1, kHigh = 2 };
enum class SchedulerKind : std::uint8_t { kPF = 0, kRR = 1, kWFQ = 2 };

inline constexpr std::size_t kNumSlices = 3;
inline constexpr std::size_t kNumDemandLevels = 3;
inline constexpr std::array<SliceKind, kNumSlices> kAllSlices = {
    SliceKind::kEmbb, SliceKind::kUrllc, SliceKind::kMmtc};

template <class T>
using PerSlice = std::array<T, kNumSlices>;

/// Rows indexed by the current level, columns by the next level.
using DemandMatrix = std::array<std::array<double, kNumDemandLevels>, kNumDemandLevels>;
/// Mean arrivals (kb/step) per demand level.
using LevelRates = std::array<double, kNumDemandLevels>;
using SchedulerProfile = PerSlice<SchedulerKind>;

constexpr std::size_t index(SliceKind s) { return static_cast<std::size_t>(s); }
constexpr std::size_t index(DemandLevel d) { return static_cast<std::size_t>(d); }

std::string_view to_string(SliceKind s);
std::string_view to_string(DemandLevel d);
std::string_view to_string(SchedulerKind k);
SchedulerKind parse_scheduler(std::string_view name);
SliceKind parse_slice(std::string_view name);

struct EnvState {
  PerSlice<DemandLevel> demand{};
  PerSlice<double> queue_kb{};
  std::int64_t step_index = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// Slice KPMs for one control interval. Throughput and buffer are in
/// kilobits so that throughput + queue' = queue + arrivals holds exactly.
struct KpmObservation {
  PerSlice<double> throughput{};
  PerSlice<double> buffer{};
  PerSlice<std::int64_t> tb_count{};

  friend bool operator==(const KpmObservation&, const KpmObservation&) = default;
};

struct SliceAction {
  PerSlice<double> prb_fraction{};
  SchedulerProfile scheduler{};
  std::optional<SliceKind> probe_slice;

  friend bool operator==(const SliceAction&, const SliceAction&) = default;
};

struct ShiftEvent {
  std::int64_t step = 0;
  std::optional<PerSlice<DemandMatrix>> demand_transition;
  std::optional<PerSlice<LevelRates>> arrival_rates;
};

struct RewardWeights {
  double alpha = 1.0;
  double beta = 5.0;
  double gamma = 10.0;
};

/// eMBB throughput >= embb_throughput, URLLC buffer <= urllc_buffer,
/// mMTC TBs >= mmtc_tb. Equality counts as satisfied.
struct QosTargets {
  double embb_throughput = 15.0;
  double urllc_buffer = 5.0;
  double mmtc_tb = 1.0;
};

struct ScenarioConfig {
  std::int64_t horizon = 20000;
  std::uint64_t seed = 1;
  PerSlice<DemandMatrix> demand_transition;
  PerSlice<LevelRates> initial_demand;
  PerSlice<LevelRates> arrival_rates;
  double arrival_noise = 0.1;  // relative std of arrivals
  double capacity = 100.0;     // kb/step at full PRB share
  double tb_size = 1.0;        // kb
  double obs_noise_sigma = 5.0;
  double check_tax = 0.05;
  double scheduler_bonus = 0.1;
  std::vector<ShiftEvent> shift_events;
  RewardWeights reward_weights;
  QosTargets qos_targets;
  double grid_step = 0.25;
  std::vector<SchedulerProfile> scheduler_profiles;
  bool check_actions = true;

  /// Defaults documented in the README (synthetic calibration constants).
  static ScenarioConfig defaults();
};

class InvalidConfig : public std::invalid_argument {
 public:
  explicit InvalidConfig(const std::vector<std::string>& violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class InvalidGrid : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Nonnegative finite entries summing to 1 within 1e-9.
bool is_stochastic_row(std::span<const double> row);

/// Every violated invariant, in a stable order. Empty when valid.
std::vector<std::string> config_violations(const ScenarioConfig& config);
void validate_config(const ScenarioConfig& config);

/// Dynamics in force at a given step: the last shift event with
/// event.step <= step wins, field by field.
struct Dynamics {
  PerSlice<DemandMatrix> demand_transition;
  PerSlice<LevelRates> arrival_rates;
};
Dynamics dynamics_at(const ScenarioConfig& config, std::int64_t step);

/// Independent streams so that the demand path does not depend on which
/// actions an agent takes (common random numbers across agents).
struct EnvRng {
  std::mt19937_64 demand;
  std::mt19937_64 arrivals;
  std::mt19937_64 observation;

  explicit EnvRng(std::uint64_t seed);
};

struct StepResult {
  EnvState state;
  KpmObservation observation;  // what the agent sees (noisy)
  KpmObservation kpm;          // noise-free ground truth
  PerSlice<double> arrivals{};
  double reward = 0.0;
};

double scheduler_efficiency(SchedulerKind kind, SliceKind slice, DemandLevel demand, double bonus);

/// Service capacity (kb) granted to `slice` by `action` this step.
double served_kb(const ScenarioConfig& config, const SliceAction& action, SliceKind slice,
                 DemandLevel demand);

std::pair<EnvState, KpmObservation> reset(const ScenarioConfig& config, EnvRng& rng);
StepResult step(const EnvState& state, const SliceAction& action, const ScenarioConfig& config,
                EnvRng& rng);

/// alpha * throughput_eMBB - beta * buffer_URLLC + gamma * TBcount_mMTC.
double compute_reward(const KpmObservation& obs, const RewardWeights& weights);

struct QosResult {
  double fraction = 0.0;  // satisfied slices / 3
  bool all = false;       // every slice satisfied
  PerSlice<bool> per_slice{};
};
QosResult qos_satisfaction(const KpmObservation& obs, const QosTargets& targets);

/// Simplex grid of PRB templates crossed with scheduler profiles and, when
/// `with_checks`, one Check variant per slice. Order: profile, template,
/// probe (none first). Templates run from (1,0,0) with eMBB share
/// descending, then URLLC share descending.
std::vector<SliceAction> action_catalog(double grid_step,
                                        std::span<const SchedulerProfile> profiles,
                                        bool with_checks);
std::vector<SliceAction> action_catalog(const ScenarioConfig& config);

/// Convenience wrapper owning the state and RNG streams.
class SliceEnv {
 public:
  explicit SliceEnv(ScenarioConfig config);

  KpmObservation reset();
  StepResult step(const SliceAction& action);

  const EnvState& state() const { return state_; }
  const ScenarioConfig& config() const { return config_; }

 private:
  ScenarioConfig config_;
  EnvRng rng_;
  EnvState state_;
};

}  // namespace brain
