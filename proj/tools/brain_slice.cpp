// Command-line entry point: simulate, train, compare, stress, forget,
// explain and validate-config.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brain/config.hpp"
#include "brain/harness.hpp"
#include "brain/io.hpp"

namespace fs = std::filesystem;
using namespace brain;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CommonOptions {
  std::string scenario = "default";
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  std::string seeds;
  std::int64_t steps = 0;
  std::string out;
  bool dump_config = false;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_seeds) {
  cmd->add_option("--scenario", o.scenario,
                  "Preset name (default, surge) or path to a JSON experiment config")
      ->capture_default_str();
  cmd->add_option("--set", o.overrides, "Override a config key: dotted.path=value (repeatable)");
  cmd->add_option("--seed", o.seed, "Base seed; every random stream derives from it")->capture_default_str();
  if (with_seeds)
    cmd->add_option("--seeds", o.seeds, "Seed count N (seeds seed..seed+N-1) or a comma-separated seed list");
  cmd->add_option("--steps", o.steps, "Override the scenario horizon (steps per run)");
  cmd->add_option("--out", o.out, "Output directory (default: $BRAIN_SLICE_OUT, else ./out)");
  cmd->add_option("--threads", o.threads, "Worker threads for seeds (0 = hardware concurrency)")->capture_default_str();
  cmd->add_flag("--dump-effective-config", o.dump_config, "Print the merged configuration as JSON and exit");
}

ExperimentConfig load_config(const CommonOptions& o) {
  ExperimentConfig c;
  if (o.scenario == "default") {
  } else if (o.scenario == "surge") {
    c.scenario = surge_scenario(c.scenario);
  } else if (fs::exists(o.scenario)) {
    c = load_experiment(o.scenario);
  } else {
    throw UsageError("--scenario: '" + o.scenario + "' is neither a preset (default, surge) nor a readable file");
  }
  try {
    c = apply_overrides(c, o.overrides);
  } catch (const ConfigError& e) {
    throw UsageError(std::string("--set: ") + e.what());
  }
  if (o.steps < 0) throw UsageError("--steps must be positive");
  if (o.steps > 0) {
    // shift events keep their relative position when the horizon is rescaled
    for (auto& ev : c.scenario.shift_events)
      ev.step = static_cast<std::int64_t>(static_cast<double>(ev.step) * static_cast<double>(o.steps) /
                                          static_cast<double>(c.scenario.horizon));
    c.scenario.horizon = o.steps;
  }
  c.scenario.seed = o.seed;
  c.harness.threads = o.threads;
  const auto v = experiment_violations(c);
  if (!v.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& x : v) msg += "\n  " + x;
    throw ConfigError(msg);
  }
  return c;
}

std::vector<std::uint64_t> seed_list(const CommonOptions& o) {
  std::vector<std::uint64_t> seeds;
  if (o.seeds.empty()) return {o.seed};
  if (o.seeds.find(',') == std::string::npos) {
    std::size_t n = 0;
    try {
      std::size_t pos = 0;
      n = std::stoul(o.seeds, &pos);
      if (pos != o.seeds.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError("--seeds: expected a count or a comma-separated list, got '" + o.seeds + "'");
    }
    if (n == 0) throw UsageError("--seeds: the seed list must not be empty");
    for (std::size_t i = 0; i < n; ++i) seeds.push_back(o.seed + i);
    return seeds;
  }
  std::stringstream ss(o.seeds);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      seeds.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError("--seeds: '" + item + "' is not a seed");
    }
  }
  if (seeds.empty()) throw UsageError("--seeds: the seed list must not be empty");
  return seeds;
}

std::vector<AgentKind> agent_list(const std::string& csv) {
  std::vector<AgentKind> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_agent(item));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--agents: ") + e.what());
    }
  }
  if (out.empty()) throw UsageError("--agents: no agent given");
  return out;
}

AgentKind one_agent(const std::string& name) {
  try {
    return parse_agent(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--agent: ") + e.what());
  }
}

fs::path out_dir(const CommonOptions& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("BRAIN_SLICE_OUT"); env && *env) return env;
  return "out";
}

template <class Fn>
void write_to(const fs::path& path, Fn fn) {
  write_file(path, fn);
  std::cout << "wrote " << path.string() << '\n';
}

void print_summary(const std::string& agent, std::span<const RunRecord> runs) {
  std::vector<double> reward, qos, second_half;
  for (const auto& r : runs) {
    double sum = 0.0, q = 0.0, late = 0.0;
    const std::size_t n = r.steps.size();
    for (std::size_t i = 0; i < n; ++i) {
      sum += r.steps[i].reward;
      q += r.steps[i].qos_all;
      if (i >= n / 2) late += r.steps[i].reward;
    }
    reward.push_back(n ? sum / static_cast<double>(n) : 0.0);
    qos.push_back(n ? q / static_cast<double>(n) : 0.0);
    second_half.push_back(n - n / 2 ? late / static_cast<double>(n - n / 2) : 0.0);
  }
  const auto r = mean_ci95(reward), q = mean_ci95(qos), l = mean_ci95(second_half);
  std::printf("%-10s reward/step %9.3f ± %.3f   second half %9.3f ± %.3f   QoS %.3f ± %.3f\n", agent.c_str(), r.mean,
              r.half_width, l.mean, l.half_width, q.mean, q.half_width);
}

// --- commands ------------------------------------------------------------------------

int cmd_simulate(const CommonOptions& o, const std::string& policy, std::size_t action) {
  const auto c = load_config(o);
  if (o.dump_config) return std::cout << to_json(c), 0;
  const auto catalog = action_catalog(c.scenario);
  std::size_t a = action;
  if (policy == "heuristic") {
    a = heuristic_act(catalog, c.agents.heuristic.heuristic_weights);
  } else if (policy != "fixed") {
    throw UsageError("--policy: expected heuristic or fixed");
  }
  if (a >= catalog.size()) throw UsageError("--action: index out of range (catalog has " + std::to_string(catalog.size()) + " entries)");
  SliceEnv env(c.scenario);
  env.reset();
  std::vector<EnvTraceRow> rows;
  rows.reserve(static_cast<std::size_t>(c.scenario.horizon));
  double total = 0.0;
  for (std::int64_t t = 0; t < c.scenario.horizon; ++t) {
    auto r = env.step(catalog[a]);
    total += r.reward;
    rows.push_back({t, a, std::move(r)});
  }
  const auto path = out_dir(o) / ("simulate_seed" + std::to_string(o.seed) + ".jsonl");
  write_to(path, [&](std::ostream& out) { write_env_trace(out, o.seed, rows); });
  std::printf("action %zu, %lld steps, reward/step %.3f\n", a, static_cast<long long>(c.scenario.horizon),
              total / static_cast<double>(c.scenario.horizon));
  return 0;
}

int cmd_train(const CommonOptions& o, const std::string& agent_name) {
  const auto c = load_config(o);
  if (o.dump_config) return std::cout << to_json(c), 0;
  const AgentKind k = one_agent(agent_name);
  const auto seeds = seed_list(o);
  const auto runs = run_experiment(c.agents.get(k), c.scenario, seeds, c.harness);
  const std::string name(to_string(k));
  const auto dir = out_dir(o);
  write_to(dir / ("train_" + name + "_runs.jsonl"), [&](std::ostream& out) { write_runs(out, runs); });
  const auto curves = curve_rows(name, runs);
  write_to(dir / ("train_" + name + "_curves.csv"), [&](std::ostream& out) { write_curves(out, curves); });
  const auto cdfs = kpm_cdfs(runs);
  write_to(dir / ("train_" + name + "_cdf.csv"), [&](std::ostream& out) { write_cdfs(out, cdfs); });
  print_summary(name, runs);
  return 0;
}

int cmd_compare(const CommonOptions& o, const std::string& agents, bool trace) {
  const auto c = load_config(o);
  if (o.dump_config) return std::cout << to_json(c), 0;
  const auto kinds = agent_list(agents);
  const auto seeds = seed_list(o);
  const auto dir = out_dir(o);
  std::vector<CurveRow> curves;
  for (auto k : kinds) {
    const std::string name(to_string(k));
    const auto runs = run_experiment(c.agents.get(k), c.scenario, seeds, c.harness);
    const auto rows = curve_rows(name, runs);
    curves.insert(curves.end(), rows.begin(), rows.end());
    const auto cdfs = kpm_cdfs(runs);
    write_to(dir / ("compare_cdf_" + name + ".csv"), [&](std::ostream& out) { write_cdfs(out, cdfs); });
    if (trace) write_to(dir / ("compare_runs_" + name + ".jsonl"), [&](std::ostream& out) { write_runs(out, runs); });
    print_summary(name, runs);
  }
  write_to(dir / "compare_curves.csv", [&](std::ostream& out) { write_curves(out, curves); });
  return 0;
}

int cmd_stress(const CommonOptions& o, const std::string& agents) {
  auto c = load_config(o);
  if (c.scenario.shift_events.empty()) c.scenario = surge_scenario(c.scenario);
  if (o.dump_config) return std::cout << to_json(c), 0;
  const auto kinds = agent_list(agents);
  const auto seeds = seed_list(o);
  std::vector<AgentSpec> specs;
  for (auto k : kinds) specs.push_back(c.agents.get(k));
  const auto reports = stress_shift(specs, c.scenario, seeds, c.harness, c.shift);
  std::vector<ShiftReport> flat;
  std::printf("shift at step %lld\n", static_cast<long long>(c.scenario.shift_events.front().step));
  for (const auto& per : reports) {
    std::vector<double> drops, posts;
    for (const auto& r : per) {
      flat.push_back(r);
      drops.push_back(r.drop_depth);
      posts.push_back(r.post_mean);
    }
    const auto rec = median_recovery(per);
    std::printf("%-10s median drop %.3f   median recovery %s   median post-shift QoS %.3f\n", per.front().agent.c_str(),
                median(drops), rec ? std::to_string(static_cast<long long>(*rec)).c_str() : "unrecovered",
                median(posts));
  }
  write_to(out_dir(o) / "stress_shift.csv", [&](std::ostream& out) { write_shift_reports(out, flat); });
  return 0;
}

int cmd_forget(const CommonOptions& o, const std::string& agents) {
  const auto c = load_config(o);
  if (o.dump_config) return std::cout << to_json(c), 0;
  const auto kinds = agent_list(agents);
  const auto seeds = seed_list(o);
  const auto phases = forgetting_phases(c.scenario);
  std::vector<ForgettingReport> all;
  for (auto k : kinds) {
    const auto reps = forgetting_experiment(c.agents.get(k), phases, seeds, c.harness, c.forgetting);
    std::vector<double> gaps;
    for (const auto& r : reps) gaps.push_back(r.retention_gap(2));
    std::printf("%-10s median retention gap on %s after %s: %.3f\n", reps.front().agent.c_str(), phases[0].name.c_str(),
                phases[2].name.c_str(), median(gaps));
    all.insert(all.end(), reps.begin(), reps.end());
  }
  write_to(out_dir(o) / "forgetting.csv", [&](std::ostream& out) { write_forgetting(out, all); });
  return 0;
}

int cmd_explain(const CommonOptions& o, const std::string& agent_name) {
  auto c = load_config(o);
  if (o.dump_config) return std::cout << to_json(c), 0;
  const AgentKind k = one_agent(agent_name);
  if (k != AgentKind::kBrain) throw UsageError("--agent: only brain produces explanation records");
  c.harness.record_explanations = true;
  const auto run = run_single(c.agents.get(k), c.scenario, o.seed, c.harness);
  const auto path = out_dir(o) / ("explain_" + run.agent + "_seed" + std::to_string(o.seed) + ".jsonl");
  write_to(path, [&](std::ostream& out) { write_explanations(out, run.agent, run.seed, run.explanations); });
  std::size_t probes = 0;
  for (const auto& e : run.explanations) probes += e.probe;
  std::printf("%zu records, %zu probe steps\n", run.explanations.size(), probes);
  return 0;
}

int cmd_validate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::string> problems;
  if (is_model_document(text)) {
    for (const auto& v : validate(model_from_json(text))) problems.push_back(v.where + ": " + v.what);
  } else {
    problems = experiment_violations(experiment_from_json(text));
  }
  if (problems.empty()) {
    std::cout << path << ": ok\n";
    return 0;
  }
  for (const auto& p : problems) std::cout << path << ": " << p << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-inference network-slicing controller and baselines"};
  app.require_subcommand(1);

  CommonOptions o;
  std::string agent = "brain", agents = "brain,heuristic,qlearn", policy = "heuristic", config_path;
  std::size_t action = 0;
  bool trace = false;

  auto* sim = app.add_subcommand("simulate", "Roll the environment under a fixed policy and write its trajectory");
  add_common(sim, o, false);
  sim->add_option("--policy", policy, "heuristic (static weighted split) or fixed (use --action)")->capture_default_str();
  sim->add_option("--action", action, "Catalog index executed every step with --policy fixed")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train one agent over one or more seeds; write traces, curves and CDFs");
  add_common(train, o, true);
  train->add_option("--agent", agent, "brain, heuristic, qlearn (alias dqn) or reinforce")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Train several agents on the same seeds; write curves and CDFs");
  add_common(compare, o, true);
  compare->add_option("--agents", agents, "Comma-separated agent list")->capture_default_str();
  compare->add_flag("--trace", trace, "Also write every per-step trace");

  auto* stress = app.add_subcommand("stress", "Shift-response run (default: URLLC surge at half the horizon)");
  add_common(stress, o, true);
  stress->add_option("--agents", agents, "Comma-separated agent list")->capture_default_str();

  auto* forget = app.add_subcommand("forget", "Sequential eMBB/URLLC/mMTC/eMBB phases with frozen evaluations");
  add_common(forget, o, true);
  forget->add_option("--agents", agents, "Comma-separated agent list")->capture_default_str();

  auto* explain = app.add_subcommand("explain", "Write per-step explanation records (beliefs, EFE terms, probes)");
  add_common(explain, o, false);
  explain->add_option("--agent", agent, "Agent to explain (brain)")->capture_default_str();

  auto* validate_cmd = app.add_subcommand("validate-config", "Check an experiment config or generative-model file");
  validate_cmd->add_option("file", config_path, "JSON file to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), 2);
  }

  try {
    if (*sim) return cmd_simulate(o, policy, action);
    if (*train) return cmd_train(o, agent);
    if (*compare) return cmd_compare(o, agents, trace);
    if (*stress) return cmd_stress(o, agents);
    if (*forget) return cmd_forget(o, agents);
    if (*explain) return cmd_explain(o, agent);
    if (*validate_cmd) return cmd_validate(config_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
