#include "brain/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace brain {

namespace {

constexpr DemandMatrix kDefaultTransition = {{{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}}};

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double standard_normal(std::mt19937_64& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

std::size_t sample_row(std::span<const double> row, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    acc += row[i];
    if (u < acc) return i;
  }
  // u landed in the rounding gap above the last cumulative sum
  for (std::size_t i = row.size(); i-- > 0;) {
    if (row[i] > 0.0) return i;
  }
  return 0;
}

void check_rows(const PerSlice<DemandMatrix>& m, const std::string& name,
                std::vector<std::string>& out) {
  for (auto slice : kAllSlices) {
    for (std::size_t r = 0; r < kNumDemandLevels; ++r) {
      const auto& row = m[index(slice)][r];
      if (!is_stochastic_row(row)) {
        std::ostringstream os;
        os << name << "[" << to_string(slice) << "][" << r << "] is not a probability row";
        out.push_back(os.str());
      }
    }
  }
}

void check_rates(const PerSlice<LevelRates>& rates, const std::string& name,
                 std::vector<std::string>& out) {
  for (auto slice : kAllSlices) {
    for (double r : rates[index(slice)]) {
      if (!std::isfinite(r) || r < 0.0) {
        out.push_back(name + "[" + std::string(to_string(slice)) + "] has a negative or non-finite rate");
        break;
      }
    }
  }
}

}  // namespace

bool is_stochastic_row(std::span<const double> row) {
  double sum = 0.0;
  for (double v : row) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

std::string_view to_string(SliceKind s) {
  switch (s) {
    case SliceKind::kEmbb: return "eMBB";
    case SliceKind::kUrllc: return "URLLC";
    case SliceKind::kMmtc: return "mMTC";
  }
  return "?";
}

std::string_view to_string(DemandLevel d) {
  switch (d) {
    case DemandLevel::kLow: return "Low";
    case DemandLevel::kMedium: return "Medium";
    case DemandLevel::kHigh: return "High";
  }
  return "?";
}

std::string_view to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::kPF: return "PF";
    case SchedulerKind::kRR: return "RR";
    case SchedulerKind::kWFQ: return "WFQ";
  }
  return "?";
}

SchedulerKind parse_scheduler(std::string_view name) {
  if (name == "PF") return SchedulerKind::kPF;
  if (name == "RR") return SchedulerKind::kRR;
  if (name == "WFQ") return SchedulerKind::kWFQ;
  throw std::invalid_argument("unknown scheduler '" + std::string(name) + "'");
}

SliceKind parse_slice(std::string_view name) {
  for (auto s : kAllSlices) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown slice '" + std::string(name) + "'");
}

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig c;
  c.demand_transition = {kDefaultTransition, kDefaultTransition, kDefaultTransition};
  const LevelRates uniform = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  c.initial_demand = {uniform, uniform, uniform};
  c.arrival_rates = {LevelRates{20.0, 60.0, 120.0}, LevelRates{5.0, 15.0, 30.0},
                     LevelRates{2.0, 6.0, 12.0}};
  c.scheduler_profiles = {
      SchedulerProfile{SchedulerKind::kRR, SchedulerKind::kRR, SchedulerKind::kRR},
      SchedulerProfile{SchedulerKind::kPF, SchedulerKind::kWFQ, SchedulerKind::kPF}};
  return c;
}

InvalidConfig::InvalidConfig(const std::vector<std::string>& violations)
    : std::invalid_argument([&] {
        std::string msg = "invalid scenario config:";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(violations) {}

std::vector<std::string> config_violations(const ScenarioConfig& c) {
  std::vector<std::string> out;
  if (c.horizon <= 0) out.emplace_back("horizon must be positive");
  check_rows(c.demand_transition, "demand_transition", out);
  for (auto slice : kAllSlices) {
    if (!is_stochastic_row(c.initial_demand[index(slice)])) {
      out.push_back("initial_demand[" + std::string(to_string(slice)) + "] is not a probability row");
    }
  }
  check_rates(c.arrival_rates, "arrival_rates", out);
  if (!std::isfinite(c.arrival_noise) || c.arrival_noise < 0.0) out.emplace_back("arrival_noise must be >= 0");
  if (!std::isfinite(c.capacity) || c.capacity <= 0.0) out.emplace_back("capacity must be positive");
  if (!std::isfinite(c.tb_size) || c.tb_size <= 0.0) out.emplace_back("tb_size must be positive");
  if (!std::isfinite(c.obs_noise_sigma) || c.obs_noise_sigma < 0.0) out.emplace_back("obs_noise_sigma must be >= 0");
  if (!(c.check_tax >= 0.0 && c.check_tax < 1.0)) out.emplace_back("check_tax must lie in [0, 1)");
  if (!std::isfinite(c.scheduler_bonus) || c.scheduler_bonus < 0.0) out.emplace_back("scheduler_bonus must be >= 0");
  std::int64_t last = -1;
  for (std::size_t i = 0; i < c.shift_events.size(); ++i) {
    const auto& ev = c.shift_events[i];
    const std::string tag = "shift_events[" + std::to_string(i) + "]";
    if (ev.step <= last) out.push_back(tag + ".step must be strictly increasing and >= 0");
    last = ev.step;
    if (ev.demand_transition) check_rows(*ev.demand_transition, tag + ".demand_transition", out);
    if (ev.arrival_rates) check_rates(*ev.arrival_rates, tag + ".arrival_rates", out);
  }
  const auto& w = c.reward_weights;
  if (!std::isfinite(w.alpha) || !std::isfinite(w.beta) || !std::isfinite(w.gamma)) {
    out.emplace_back("reward_weights must be finite");
  }
  const auto& q = c.qos_targets;
  if (!std::isfinite(q.embb_throughput) || !std::isfinite(q.urllc_buffer) || !std::isfinite(q.mmtc_tb)) {
    out.emplace_back("qos_targets must be finite");
  }
  try {
    (void)action_catalog(c.grid_step, c.scheduler_profiles, false);
  } catch (const std::exception& e) {
    out.emplace_back(e.what());
  }
  return out;
}

void validate_config(const ScenarioConfig& config) {
  auto v = config_violations(config);
  if (!v.empty()) throw InvalidConfig(v);
}

Dynamics dynamics_at(const ScenarioConfig& config, std::int64_t step) {
  Dynamics d{config.demand_transition, config.arrival_rates};
  for (const auto& ev : config.shift_events) {
    if (ev.step > step) break;
    if (ev.demand_transition) d.demand_transition = *ev.demand_transition;
    if (ev.arrival_rates) d.arrival_rates = *ev.arrival_rates;
  }
  return d;
}

EnvRng::EnvRng(std::uint64_t seed) {
  std::seed_seq sd{seed, std::uint64_t{0xD3A7}};
  std::seed_seq sa{seed, std::uint64_t{0xA771}};
  std::seed_seq so{seed, std::uint64_t{0x0B5E}};
  demand.seed(sd);
  arrivals.seed(sa);
  observation.seed(so);
}

double scheduler_efficiency(SchedulerKind kind, SliceKind slice, DemandLevel demand, double bonus) {
  switch (kind) {
    case SchedulerKind::kPF: return demand == DemandLevel::kHigh ? 1.0 + bonus : 1.0;
    case SchedulerKind::kRR: return 1.0;
    case SchedulerKind::kWFQ: return slice == SliceKind::kUrllc ? 1.0 + bonus : 1.0;
  }
  return 1.0;
}

double served_kb(const ScenarioConfig& config, const SliceAction& action, SliceKind slice,
                 DemandLevel demand) {
  const double tax = action.probe_slice ? config.check_tax : 0.0;
  const std::size_t k = index(slice);
  return config.capacity * (1.0 - tax) * action.prb_fraction[k] *
         scheduler_efficiency(action.scheduler[k], slice, demand, config.scheduler_bonus);
}

std::pair<EnvState, KpmObservation> reset(const ScenarioConfig& config, EnvRng& rng) {
  validate_config(config);
  EnvState s;
  for (auto slice : kAllSlices) {
    const auto& row = config.initial_demand[index(slice)];
    s.demand[index(slice)] = static_cast<DemandLevel>(sample_row(row, uniform01(rng.demand)));
  }
  // nothing has been scheduled yet, so the first report is empty
  return {s, KpmObservation{}};
}

StepResult step(const EnvState& state, const SliceAction& action, const ScenarioConfig& config,
                EnvRng& rng) {
  const Dynamics dyn = dynamics_at(config, state.step_index);
  StepResult r;
  r.state = state;
  for (auto slice : kAllSlices) {
    const std::size_t k = index(slice);
    const DemandLevel d = state.demand[k];
    const double rate = dyn.arrival_rates[k][index(d)];
    const double z = standard_normal(rng.arrivals);
    const double arrivals = std::max(0.0, rate + config.arrival_noise * rate * z);
    const double served = served_kb(config, action, slice, d);
    const double backlog = state.queue_kb[k] + arrivals;
    const double thr = std::min(backlog, served);
    r.arrivals[k] = arrivals;
    r.kpm.throughput[k] = thr;
    r.kpm.buffer[k] = std::max(0.0, backlog - thr);
    r.kpm.tb_count[k] = static_cast<std::int64_t>(std::floor(thr / config.tb_size + 1e-9));
    r.state.queue_kb[k] = r.kpm.buffer[k];
  }
  // Noise is always drawn so the stream stays aligned whether or not a
  // slice is probed.
  r.observation = r.kpm;
  for (auto slice : kAllSlices) {
    const std::size_t k = index(slice);
    const double zt = standard_normal(rng.observation);
    const double zb = standard_normal(rng.observation);
    const double zn = standard_normal(rng.observation);
    if (action.probe_slice == slice) continue;
    const double sigma = config.obs_noise_sigma;
    r.observation.throughput[k] = std::max(0.0, r.kpm.throughput[k] + sigma * zt);
    r.observation.buffer[k] = std::max(0.0, r.kpm.buffer[k] + sigma * zb);
    r.observation.tb_count[k] = static_cast<std::int64_t>(
        std::max(0.0, std::floor(static_cast<double>(r.kpm.tb_count[k]) + sigma * zn + 0.5)));
  }
  r.reward = compute_reward(r.kpm, config.reward_weights);
  for (auto slice : kAllSlices) {
    const std::size_t k = index(slice);
    const auto& row = dyn.demand_transition[k][index(state.demand[k])];
    r.state.demand[k] = static_cast<DemandLevel>(sample_row(row, uniform01(rng.demand)));
  }
  r.state.step_index = state.step_index + 1;
  return r;
}

double compute_reward(const KpmObservation& obs, const RewardWeights& w) {
  return w.alpha * obs.throughput[index(SliceKind::kEmbb)] -
         w.beta * obs.buffer[index(SliceKind::kUrllc)] +
         w.gamma * static_cast<double>(obs.tb_count[index(SliceKind::kMmtc)]);
}

QosResult qos_satisfaction(const KpmObservation& obs, const QosTargets& t) {
  QosResult q;
  q.per_slice[index(SliceKind::kEmbb)] = obs.throughput[index(SliceKind::kEmbb)] >= t.embb_throughput;
  q.per_slice[index(SliceKind::kUrllc)] = obs.buffer[index(SliceKind::kUrllc)] <= t.urllc_buffer;
  q.per_slice[index(SliceKind::kMmtc)] =
      static_cast<double>(obs.tb_count[index(SliceKind::kMmtc)]) >= t.mmtc_tb;
  int met = 0;
  for (bool b : q.per_slice) met += b ? 1 : 0;
  q.fraction = met / 3.0;
  q.all = met == 3;
  return q;
}

std::vector<SliceAction> action_catalog(double grid_step, std::span<const SchedulerProfile> profiles,
                                        bool with_checks) {
  if (!(grid_step > 0.0 && grid_step <= 1.0)) {
    throw InvalidGrid("grid_step must lie in (0, 1]");
  }
  const double units_real = 1.0 / grid_step;
  const long units = std::lround(units_real);
  if (std::abs(units_real - static_cast<double>(units)) > 1e-9) {
    throw InvalidGrid("grid_step must divide 1 exactly");
  }
  if (profiles.empty()) throw InvalidGrid("at least one scheduler profile is required");

  std::vector<PerSlice<double>> templates;
  for (long e = units; e >= 0; --e) {
    for (long u = units - e; u >= 0; --u) {
      const long m = units - e - u;
      const double n = static_cast<double>(units);
      templates.push_back({static_cast<double>(e) / n, static_cast<double>(u) / n,
                           static_cast<double>(m) / n});
    }
  }
  std::vector<std::optional<SliceKind>> probes{std::nullopt};
  if (with_checks) probes.insert(probes.end(), kAllSlices.begin(), kAllSlices.end());

  std::vector<SliceAction> out;
  out.reserve(profiles.size() * templates.size() * probes.size());
  for (const auto& profile : profiles) {
    for (const auto& t : templates) {
      for (const auto& p : probes) out.push_back(SliceAction{t, profile, p});
    }
  }
  return out;
}

std::vector<SliceAction> action_catalog(const ScenarioConfig& config) {
  return action_catalog(config.grid_step, config.scheduler_profiles, config.check_actions);
}

SliceEnv::SliceEnv(ScenarioConfig config) : config_(std::move(config)), rng_(config_.seed) {
  validate_config(config_);
}

KpmObservation SliceEnv::reset() {
  rng_ = EnvRng(config_.seed);
  auto [s, o] = brain::reset(config_, rng_);
  state_ = s;
  return o;
}

StepResult SliceEnv::step(const SliceAction& action) {
  auto r = brain::step(state_, action, config_, rng_);
  state_ = r.state;
  return r;
}

}  // namespace brain
