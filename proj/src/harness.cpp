#include "brain/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace brain {

std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::kBrain: return "brain";
    case AgentKind::kHeuristic: return "heuristic";
    case AgentKind::kQLearn: return "qlearn";
    case AgentKind::kReinforce: return "reinforce";
  }
  return "?";
}

AgentKind parse_agent(std::string_view name) {
  if (name == "brain") return AgentKind::kBrain;
  if (name == "heuristic") return AgentKind::kHeuristic;
  if (name == "qlearn" || name == "dqn") return AgentKind::kQLearn;
  if (name == "reinforce") return AgentKind::kReinforce;
  throw std::invalid_argument("unknown agent '" + std::string(name) + "' (expected brain, heuristic, qlearn, reinforce)");
}

AgentSpec default_agent_spec(AgentKind kind) {
  AgentSpec s;
  s.kind = kind;
  s.policy.normalize_returns = true;
  s.brain.learn_transitions = 1.0;
  s.brain.transition_forgetting = 0.98;
  s.brain.forgetting_surprise_margin = 0.05;
  return s;
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const ScenarioConfig& scenario,
                                  const std::vector<SliceAction>& catalog, const HarnessConfig& harness,
                                  std::int64_t training_steps) {
  switch (spec.kind) {
    case AgentKind::kHeuristic: return std::make_unique<HeuristicAgent>(catalog, spec.heuristic_weights);
    case AgentKind::kQLearn: {
      QAgentConfig q = spec.q;
      q.epsilon_decay_steps =
          static_cast<std::int64_t>(std::llround(harness.epsilon_decay_fraction * static_cast<double>(training_steps)));
      return std::make_unique<QAgent>(catalog.size(), harness.binning, q);
    }
    case AgentKind::kReinforce: return std::make_unique<ReinforceAgent>(catalog.size(), harness.binning, spec.policy);
    case AgentKind::kBrain: return std::make_unique<BrainAgent>(scenario, catalog, harness.binning, spec.brain);
  }
  throw std::invalid_argument("unknown agent kind");
}

std::vector<EpisodeRow> aggregate_episodes(std::span<const StepRow> steps) {
  std::vector<EpisodeRow> out;
  std::size_t i = 0;
  while (i < steps.size()) {
    EpisodeRow e;
    e.episode = steps[i].episode;
    e.first_step = steps[i].step;
    double loss_sum = 0.0, ent_sum = 0.0, qos_sum = 0.0;
    std::int64_t loss_n = 0;
    for (; i < steps.size() && steps[i].episode == e.episode; ++i) {
      const auto& s = steps[i];
      ++e.steps;
      e.cumulative_reward += s.reward;
      ent_sum += s.entropy;
      qos_sum += s.qos_all ? 1.0 : 0.0;
      if (s.loss) {
        loss_sum += *s.loss;
        ++loss_n;
      }
    }
    e.entropy = ent_sum / static_cast<double>(e.steps);
    e.qos_mean = qos_sum / static_cast<double>(e.steps);
    if (loss_n > 0) e.mean_loss = loss_sum / static_cast<double>(loss_n);
    out.push_back(e);
  }
  return out;
}

double aggregate_mismatch(const RunRecord& record) {
  const auto again = aggregate_episodes(record.steps);
  if (again.size() != record.episodes.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < again.size(); ++i) {
    const auto& a = again[i];
    const auto& b = record.episodes[i];
    if (a.episode != b.episode || a.first_step != b.first_step || a.steps != b.steps ||
        a.mean_loss.has_value() != b.mean_loss.has_value())
      return std::numeric_limits<double>::infinity();
    worst = std::max({worst, std::abs(a.cumulative_reward - b.cumulative_reward), std::abs(a.entropy - b.entropy),
                      std::abs(a.qos_mean - b.qos_mean)});
    if (a.mean_loss) worst = std::max(worst, std::abs(*a.mean_loss - *b.mean_loss));
  }
  return worst;
}

namespace {

// Runs body(0..n-1) on up to `threads` workers (0 = hardware concurrency)
// and rethrows the first failure in index order.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  std::size_t workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

RunRecord run_single(const AgentSpec& spec, ScenarioConfig scenario, std::uint64_t seed,
                     const HarnessConfig& harness) {
  RunRecord rec;
  rec.agent = std::string(to_string(spec.kind));
  rec.seed = seed;
  try {
    if (harness.episode_length <= 0) throw std::invalid_argument("episode_length must be positive");
    scenario.seed = seed;
    const auto catalog = action_catalog(scenario);
    auto agent = make_agent(spec, scenario, catalog, harness, scenario.horizon);
    agent->begin_run(seed);
    auto* brain_agent = dynamic_cast<BrainAgent*>(agent.get());

    SliceEnv env(scenario);
    KpmObservation obs = env.reset();
    rec.steps.reserve(static_cast<std::size_t>(scenario.horizon));
    for (std::int64_t t = 0; t < scenario.horizon; ++t) {
      const std::size_t a = agent->act(obs);
      StepRow row;
      row.step = t;
      row.episode = t / harness.episode_length;
      row.obs = harness.binning.joint_index(obs);
      row.action = a;
      row.entropy = step_entropy(agent->last_distribution());
      if (harness.record_explanations && brain_agent) rec.explanations.push_back(brain_agent->last_record());

      const StepResult r = env.step(catalog[a]);
      const bool done = (t + 1) % harness.episode_length == 0 || t + 1 == scenario.horizon;
      row.loss = agent->learn({row.obs, a, r.reward, harness.binning.joint_index(r.observation), done});
      row.reward = r.reward;
      const QosResult q = qos_satisfaction(r.kpm, scenario.qos_targets);
      row.qos_fraction = q.fraction;
      row.qos_all = q.all;
      row.embb_throughput = r.kpm.throughput[index(SliceKind::kEmbb)];
      row.urllc_prb = catalog[a].prb_fraction[index(SliceKind::kUrllc)];
      row.mmtc_tb = r.kpm.tb_count[index(SliceKind::kMmtc)];
      rec.steps.push_back(row);
      if (done) agent->begin_episode();
      obs = r.observation;
    }
  } catch (const std::exception& e) {
    throw RunError("run failed (agent " + rec.agent + ", seed " + std::to_string(seed) + "): " + e.what());
  }
  rec.episodes = aggregate_episodes(rec.steps);
  return rec;
}

std::vector<RunRecord> run_experiment(const AgentSpec& spec, const ScenarioConfig& scenario,
                                      std::span<const std::uint64_t> seeds, const HarnessConfig& harness) {
  if (seeds.empty()) throw std::invalid_argument("run_experiment: at least one seed is required");
  std::vector<RunRecord> out(seeds.size());
  parallel_for(seeds.size(), harness.threads, [&](std::size_t i) { out[i] = run_single(spec, scenario, seeds[i], harness); });
  return out;
}

std::string_view to_string(CurveMetric m) {
  switch (m) {
    case CurveMetric::kReward: return "reward";
    case CurveMetric::kLoss: return "loss";
    case CurveMetric::kEntropy: return "entropy";
    case CurveMetric::kQos: return "qos";
  }
  return "?";
}

MeanCi mean_ci95(std::span<const double> xs) {
  MeanCi r;
  if (xs.empty()) return r;
  const double n = static_cast<double>(xs.size());
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return r;
}

std::vector<CurvePoint> curve(std::span<const RunRecord> runs, CurveMetric metric) {
  std::size_t n_eps = 0;
  for (const auto& r : runs) n_eps = std::max(n_eps, r.episodes.size());
  std::vector<CurvePoint> out;
  for (std::size_t e = 0; e < n_eps; ++e) {
    std::vector<double> xs;
    CurvePoint p;
    p.episode = static_cast<std::int64_t>(e);
    for (const auto& r : runs) {
      if (e >= r.episodes.size()) continue;
      const auto& ep = r.episodes[e];
      p.step = ep.first_step;
      switch (metric) {
        case CurveMetric::kReward: xs.push_back(ep.cumulative_reward); break;
        case CurveMetric::kLoss:
          if (ep.mean_loss) xs.push_back(*ep.mean_loss);
          break;
        case CurveMetric::kEntropy: xs.push_back(ep.entropy); break;
        case CurveMetric::kQos: xs.push_back(ep.qos_mean); break;
      }
    }
    if (xs.empty()) continue;
    const auto ci = mean_ci95(xs);
    p.n = xs.size();
    p.mean = ci.mean;
    p.ci_low = ci.mean - ci.half_width;
    p.ci_high = ci.mean + ci.half_width;
    out.push_back(p);
  }
  return out;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  std::vector<std::pair<double, double>> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.emplace_back(values[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

double cdf_at(std::span<const std::pair<double, double>> cdf, double x) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), x, [](double v, const auto& p) { return v < p.first; });
  return it == cdf.begin() ? 0.0 : std::prev(it)->second;
}

std::vector<CdfRow> kpm_cdfs(std::span<const RunRecord> runs) {
  std::vector<double> thr, prb, tb;
  for (const auto& r : runs)
    for (const auto& s : r.steps) {
      thr.push_back(s.embb_throughput);
      prb.push_back(s.urllc_prb);
      tb.push_back(static_cast<double>(s.mmtc_tb));
    }
  std::vector<CdfRow> out;
  auto emit = [&](const char* slice, const char* metric, std::vector<double> v) {
    for (const auto& [value, q] : empirical_cdf(std::move(v))) out.push_back({slice, metric, value, q});
  };
  emit("eMBB", "throughput", std::move(thr));
  emit("URLLC", "prb_ratio", std::move(prb));
  emit("mMTC", "tb_count", std::move(tb));
  return out;
}

// --- shift response ----------------------------------------------------------

ShiftReport shift_report(const RunRecord& run, std::int64_t shift_step, const ShiftOptions& options) {
  const auto n = static_cast<std::int64_t>(run.steps.size());
  if (shift_step <= 0 || shift_step >= n) throw std::invalid_argument("shift step outside the run");
  if (options.window <= 0 || options.window > n - shift_step)
    throw std::invalid_argument("rolling window must fit in the post-shift period");
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::int64_t t = 0; t < n; ++t)
    prefix[t + 1] = prefix[t] + (run.steps[static_cast<std::size_t>(t)].qos_all ? 1.0 : 0.0);
  auto mean = [&](std::int64_t lo, std::int64_t hi) { return (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo); };

  ShiftReport r;
  r.agent = run.agent;
  r.seed = run.seed;
  r.shift_step = shift_step;
  r.pre_mean = mean(shift_step - shift_step / 2 - (shift_step % 2), shift_step);
  const std::int64_t post_len = n - shift_step;
  r.post_mean = mean(n - std::max<std::int64_t>(1, post_len / 2), n);

  const double threshold = options.recovery_fraction * r.pre_mean;
  std::vector<double> windows;  // windows[j] covers post-shift steps [j, j + window)
  for (std::int64_t j = 0; shift_step + j + options.window <= n; ++j)
    windows.push_back(mean(shift_step + j, shift_step + j + options.window));
  r.post_min = *std::min_element(windows.begin(), windows.end());
  const auto dip = std::find_if(windows.begin(), windows.end(), [&](double m) { return m < threshold; });
  if (dip == windows.end()) {
    r.recovery_time = 0;
  } else {
    const auto back = std::find_if(dip, windows.end(), [&](double m) { return m >= threshold; });
    if (back != windows.end()) r.recovery_time = back - windows.begin();
  }
  r.drop_depth = std::max(0.0, r.pre_mean - r.post_min);
  return r;
}

std::vector<std::vector<ShiftReport>> stress_shift(std::span<const AgentSpec> agents, const ScenarioConfig& scenario,
                                                   std::span<const std::uint64_t> seeds,
                                                   const HarnessConfig& harness, const ShiftOptions& options) {
  if (scenario.shift_events.empty()) throw NoShiftEvent("stress_shift: scenario has no shift event");
  const std::int64_t k = scenario.shift_events.front().step;
  std::vector<std::vector<ShiftReport>> out;
  for (const auto& spec : agents) {
    std::vector<ShiftReport> per_seed;
    for (const auto& run : run_experiment(spec, scenario, seeds, harness))
      per_seed.push_back(shift_report(run, k, options));
    out.push_back(std::move(per_seed));
  }
  return out;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

std::optional<double> median_recovery(std::span<const ShiftReport> reports) {
  if (reports.empty()) throw std::invalid_argument("median of an empty set");
  constexpr double kNever = std::numeric_limits<double>::infinity();
  std::vector<double> xs;
  for (const auto& r : reports) xs.push_back(r.recovery_time ? static_cast<double>(*r.recovery_time) : kNever);
  const double m = median(xs);
  if (std::isinf(m)) return std::nullopt;
  return m;
}

ScenarioConfig surge_scenario(ScenarioConfig base) {
  ShiftEvent ev;
  ev.step = base.horizon / 2;
  auto transitions = base.demand_transition;
  transitions[index(SliceKind::kUrllc)] = {{{0.02, 0.08, 0.90}, {0.02, 0.08, 0.90}, {0.02, 0.08, 0.90}}};
  ev.demand_transition = transitions;
  base.shift_events = {ev};
  return base;
}

// --- forgetting --------------------------------------------------------------

double ForgettingReport::retention_gap(std::size_t phase) const {
  const double ref = performance.at(0).at(0);
  const double later = performance.at(0).at(phase);
  if (ref == 0.0) {
    if (later == ref) return 0.0;
    return later < ref ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return (ref - later) / std::abs(ref);
}

std::vector<ForgettingPhase> forgetting_phases(const ScenarioConfig& base) {
  constexpr DemandMatrix kHigh = {{{0.05, 0.05, 0.90}, {0.05, 0.05, 0.90}, {0.05, 0.05, 0.90}}};
  constexpr DemandMatrix kLow = {{{0.90, 0.05, 0.05}, {0.90, 0.05, 0.05}, {0.90, 0.05, 0.05}}};
  auto dominant = [&](SliceKind s) {
    ForgettingPhase p;
    p.name = std::string(to_string(s)) + "-dominant";
    p.scenario = base;
    p.scenario.shift_events.clear();
    for (auto k : kAllSlices) p.scenario.demand_transition[index(k)] = k == s ? kHigh : kLow;
    return p;
  };
  return {dominant(SliceKind::kEmbb), dominant(SliceKind::kUrllc), dominant(SliceKind::kMmtc),
          dominant(SliceKind::kEmbb)};
}

namespace {

double evaluate(Agent& agent, const ScenarioConfig& scenario, const std::vector<SliceAction>& catalog,
                const ForgettingOptions& options) {
  agent.set_training(false);
  double total = 0.0;
  std::int64_t n = 0;
  for (auto seed : options.eval_seeds) {
    if (auto* b = dynamic_cast<BrainAgent*>(&agent)) b->reset_belief();
    ScenarioConfig sc = scenario;
    sc.seed = seed;
    SliceEnv env(sc);
    KpmObservation obs = env.reset();
    for (std::int64_t t = 0; t < options.eval_steps; ++t) {
      const auto r = env.step(catalog[agent.act(obs)]);
      total += r.reward;
      ++n;
      obs = r.observation;
    }
  }
  agent.set_training(true);
  return n ? total / static_cast<double>(n) : 0.0;
}

}  // namespace

ForgettingReport forgetting_scenario(const AgentSpec& spec, std::span<const ForgettingPhase> phases,
                                     std::uint64_t seed, const HarnessConfig& harness,
                                     const ForgettingOptions& options) {
  if (phases.empty()) throw std::invalid_argument("forgetting_scenario: no phases");
  if (options.phase_steps <= 0 || options.eval_steps <= 0 || options.eval_seeds.empty())
    throw std::invalid_argument("forgetting_scenario: phase and evaluation lengths must be positive");
  ForgettingReport rep;
  rep.agent = std::string(to_string(spec.kind));
  rep.seed = seed;
  for (const auto& p : phases) rep.phases.push_back(p.name);
  rep.performance.assign(phases.size(), std::vector<double>(phases.size(), 0.0));

  // the model-based agent is built on the first phase's description and only
  // updates beliefs: its transition counts stay fixed across phases
  AgentSpec run_spec = spec;
  if (run_spec.kind == AgentKind::kBrain) run_spec.brain.learn_transitions.reset();
  const auto catalog = action_catalog(phases.front().scenario);
  auto agent = make_agent(run_spec, phases.front().scenario, catalog, harness, options.phase_steps);
  agent->begin_run(seed);
  for (std::size_t j = 0; j < phases.size(); ++j) {
    ScenarioConfig sc = phases[j].scenario;
    sc.seed = seed * 1000003ULL + j;
    SliceEnv env(sc);
    KpmObservation obs = env.reset();
    for (std::int64_t t = 0; t < options.phase_steps; ++t) {
      const std::size_t a = agent->act(obs);
      const auto r = env.step(catalog[a]);
      const bool done = (t + 1) % harness.episode_length == 0 || t + 1 == options.phase_steps;
      agent->learn({harness.binning.joint_index(obs), a, r.reward, harness.binning.joint_index(r.observation), done});
      if (done) agent->begin_episode();
      obs = r.observation;
    }
    for (std::size_t i = 0; i < phases.size(); ++i)
      rep.performance[i][j] = evaluate(*agent, phases[i].scenario, catalog, options);
  }
  return rep;
}

std::vector<ForgettingReport> forgetting_experiment(const AgentSpec& spec, std::span<const ForgettingPhase> phases,
                                                   std::span<const std::uint64_t> seeds,
                                                   const HarnessConfig& harness, const ForgettingOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("forgetting_experiment: at least one seed is required");
  std::vector<ForgettingReport> out(seeds.size());
  parallel_for(seeds.size(), harness.threads,
               [&](std::size_t i) { out[i] = forgetting_scenario(spec, phases, seeds[i], harness, options); });
  return out;
}

}  // namespace brain
