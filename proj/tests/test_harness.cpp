#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "brain/config.hpp"
#include "brain/harness.hpp"
#include "brain/io.hpp"

using namespace brain;

namespace {

ScenarioConfig short_scenario(std::int64_t horizon) {
  auto c = ScenarioConfig::defaults();
  c.horizon = horizon;
  return c;
}

template <class Write>
std::string to_text(Write write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("heuristic runs do not learn") {
  const std::vector<std::uint64_t> seeds = {3};
  const auto runs = run_experiment(default_agent_spec(AgentKind::kHeuristic), short_scenario(2000), seeds);
  REQUIRE(runs.size() == 1);
  const auto& r = runs[0];
  CHECK(r.steps.size() == 2000);
  CHECK(r.episodes.size() == 10);
  for (const auto& s : r.steps) {
    CHECK(s.action == r.steps[0].action);
    CHECK_FALSE(s.loss.has_value());
  }
}

TEST_CASE("runs are reproducible and independent of the thread count") {
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  HarnessConfig one, many;
  one.threads = 1;
  many.threads = 3;
  for (auto kind : {AgentKind::kBrain, AgentKind::kQLearn, AgentKind::kReinforce}) {
    const auto spec = default_agent_spec(kind);
    const auto a = run_experiment(spec, short_scenario(600), seeds, one);
    const auto b = run_experiment(spec, short_scenario(600), seeds, many);
    CHECK(a == b);
    CHECK(to_text([&](std::ostream& o) { write_runs(o, a); }) == to_text([&](std::ostream& o) { write_runs(o, b); }));
  }
}

TEST_CASE("Q agent learns on the default scenario") {
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  const auto runs = run_experiment(default_agent_spec(AgentKind::kQLearn), short_scenario(10000), seeds);
  const auto c = curve(runs, CurveMetric::kReward);
  double late = 0.0;
  std::size_t n = 0;
  for (std::size_t e = c.size() / 2; e < c.size(); ++e, ++n) late += c[e].mean;
  CHECK(late / static_cast<double>(n) > c.front().mean);
}

TEST_CASE("episode aggregates match their step rows") {
  const std::vector<std::uint64_t> seeds = {4};
  for (auto kind : {AgentKind::kBrain, AgentKind::kQLearn, AgentKind::kReinforce}) {
    const auto runs = run_experiment(default_agent_spec(kind), short_scenario(1000), seeds);
    CHECK(aggregate_mismatch(runs[0]) <= 1e-9);
  }
}

TEST_CASE("run errors carry the agent and seed") {
  auto sc = short_scenario(10);
  sc.capacity = -1.0;
  try {
    run_single(default_agent_spec(AgentKind::kQLearn), sc, 17);
    FAIL("expected RunError");
  } catch (const RunError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("qlearn") != std::string::npos);
    CHECK(msg.find("17") != std::string::npos);
  }
}

TEST_CASE("curves: mean and normal-approximation interval") {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const auto m = mean_ci95(xs);
  CHECK(m.mean == 2.5);
  CHECK(m.half_width == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
  const std::vector<double> one = {7.0};
  CHECK(mean_ci95(one).half_width == 0.0);
}

TEST_CASE("empirical CDFs") {
  const auto f = empirical_cdf({1, 2, 3});
  CHECK(cdf_at(f, 2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(cdf_at(f, 0.5) == 0.0);
  CHECK(cdf_at(f, 3.0) == 1.0);
  const auto c = empirical_cdf({4, 4, 4});
  REQUIRE(c.size() == 1);
  CHECK(c[0] == std::pair<double, double>{4.0, 1.0});

  const std::vector<std::uint64_t> seeds = {1, 2};
  const auto runs = run_experiment(default_agent_spec(AgentKind::kQLearn), short_scenario(800), seeds);
  const auto rows = kpm_cdfs(runs);
  CHECK_FALSE(rows.empty());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].slice != rows[i - 1].slice) {
      CHECK(rows[i - 1].quantile == doctest::Approx(1.0));
      continue;
    }
    CHECK(rows[i].value > rows[i - 1].value);
    CHECK(rows[i].quantile >= rows[i - 1].quantile);
  }
  for (const auto& r : rows) CHECK((r.quantile > 0.0 && r.quantile <= 1.0));
}

TEST_CASE("a shift that changes nothing reports no drop") {
  auto sc = short_scenario(4000);
  ShiftEvent ev;
  ev.step = 2000;
  ev.demand_transition = sc.demand_transition;
  sc.shift_events = {ev};
  const std::vector<AgentSpec> agents = {default_agent_spec(AgentKind::kHeuristic)};
  const std::vector<std::uint64_t> seeds = {1};
  // identical dynamics: the shifted run is the unshifted run
  auto plain = sc;
  plain.shift_events.clear();
  const auto rep = stress_shift(agents, sc, seeds);
  CHECK(rep[0][0] == shift_report(run_single(agents[0], plain, 1), 2000));

  // a QoS stream that never moves has no drop and recovers immediately
  RunRecord flat;
  flat.agent = "x";
  for (int t = 0; t < 100; ++t) flat.steps.push_back(StepRow{.step = t, .qos_all = true});
  const auto r = shift_report(flat, 50, {10, 0.95});
  CHECK(r.drop_depth == 0.0);
  REQUIRE(r.recovery_time.has_value());
  CHECK(*r.recovery_time == 0);

  CHECK_THROWS_AS(stress_shift(agents, plain, seeds), NoShiftEvent);
}

TEST_CASE("median recovery ranks unrecovered runs last") {
  std::vector<ShiftReport> r(3);
  r[0].recovery_time = 10;
  r[1].recovery_time = 30;
  CHECK(median_recovery(r) == 30.0);
  r[1].recovery_time.reset();
  CHECK_FALSE(median_recovery(r).has_value());
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("forgetting report shape and retention gap") {
  ForgettingReport f;
  f.phases = {"a", "b", "c"};
  f.performance = {{10, 8, 5}, {1, 2, 3}, {0, 0, 0}};
  CHECK(f.retention_gap(2) == doctest::Approx(0.5));
  CHECK(f.retention_gap(0) == 0.0);
  f.performance[0] = {-10, -12, -20};
  CHECK(f.retention_gap(2) == doctest::Approx(1.0));

  ForgettingOptions opt;
  opt.phase_steps = 300;
  opt.eval_steps = 50;
  opt.eval_seeds = {9};
  const auto phases = forgetting_phases();
  CHECK(phases.size() == 4);
  CHECK(phases.front().name == phases.back().name);
  const auto rep = forgetting_scenario(default_agent_spec(AgentKind::kQLearn), phases, 1, {}, opt);
  CHECK(rep.performance.size() == 4);
  for (const auto& row : rep.performance) CHECK(row.size() == 4);
}

// --- exports ------------------------------------------------------------------

TEST_CASE("empty exports are header-only") {
  CHECK(to_text([](std::ostream& o) { write_runs(o, {}); }) == "{\"schema\":\"run-trace\",\"version\":1}\n");
  const auto cdf = to_text([](std::ostream& o) { write_cdfs(o, {}); });
  CHECK(cdf == "# schema=cdf version=1\nslice,metric,value,quantile\n");
  CHECK(line_count(to_text([](std::ostream& o) { write_curves(o, {}); })) == 2);
  CHECK(line_count(to_text([](std::ostream& o) { write_shift_reports(o, {}); })) == 2);
  CHECK(line_count(to_text([](std::ostream& o) { write_forgetting(o, {}); })) == 2);
}

TEST_CASE("doubles round-trip through text") {
  for (double v : {0.1, -1e-300, 1.0 / 3.0, 123456789.125, 5e-324, -0.0}) CHECK(parse_double(format_double(v)) == v);
  CHECK(std::isinf(parse_double(format_double(INFINITY))));
  CHECK(std::isnan(parse_double(format_double(NAN))));
  CHECK_THROWS_AS(parse_double("1.5x"), IoError);
}

TEST_CASE("exports round-trip value-identically") {
  const std::vector<std::uint64_t> seeds = {1, 2};
  HarnessConfig h;
  h.record_explanations = true;
  const auto brain = run_experiment(default_agent_spec(AgentKind::kBrain), short_scenario(400), seeds, h);
  const auto q = run_experiment(default_agent_spec(AgentKind::kQLearn), short_scenario(400), seeds, h);

  std::vector<RunRecord> all = brain;
  all.insert(all.end(), q.begin(), q.end());
  {
    std::istringstream in(to_text([&](std::ostream& o) { write_runs(o, all); }));
    CHECK(read_runs(in) == all);
  }
  {
    std::istringstream in(to_text([&](std::ostream& o) { write_explanations(o, "brain", 1, brain[0].explanations); }));
    const auto t = read_explanations(in);
    CHECK(t.agent == "brain");
    CHECK(t.seed == 1);
    CHECK(t.records == brain[0].explanations);
  }
  {
    auto curves = curve_rows("brain", brain);
    const auto qc = curve_rows("qlearn", q);
    curves.insert(curves.end(), qc.begin(), qc.end());
    std::istringstream in(to_text([&](std::ostream& o) { write_curves(o, curves); }));
    CHECK(read_curves(in) == curves);
  }
  {
    const auto cdfs = kpm_cdfs(q);
    std::istringstream in(to_text([&](std::ostream& o) { write_cdfs(o, cdfs); }));
    CHECK(read_cdfs(in) == cdfs);
  }
  {
    std::vector<ShiftReport> reps(2);
    reps[0] = {"brain", 1, 200, 0.8, 0.5, 0.3, 40, 0.79};
    reps[1] = {"qlearn", 2, 200, 0.1 / 3, 0.0, 0.1 / 3, std::nullopt, 1e-17};
    std::istringstream in(to_text([&](std::ostream& o) { write_shift_reports(o, reps); }));
    CHECK(read_shift_reports(in) == reps);
  }
  {
    std::vector<ForgettingReport> reps(1);
    reps[0] = {"qlearn", 3, {"a", "b"}, {{1.5, -2.25}, {1.0 / 3.0, 0.0}}};
    std::istringstream in(to_text([&](std::ostream& o) { write_forgetting(o, reps); }));
    CHECK(read_forgetting(in) == reps);
  }
  {
    SliceEnv env(short_scenario(50));
    env.reset();
    const auto cat = action_catalog(env.config());
    std::vector<EnvTraceRow> rows;
    for (std::int64_t t = 0; t < 50; ++t) rows.push_back({t, 7, env.step(cat[7])});
    std::istringstream in(to_text([&](std::ostream& o) { write_env_trace(o, 1, rows); }));
    CHECK(read_env_trace(in) == rows);
  }
}

TEST_CASE("readers reject foreign or malformed files") {
  std::istringstream wrong("{\"schema\":\"explanation-trace\",\"version\":1}\n");
  CHECK_THROWS_AS(read_runs(wrong), IoError);
  std::istringstream future("# schema=cdf version=2\nslice,metric,value,quantile\n");
  CHECK_THROWS_AS(read_cdfs(future), IoError);
  std::istringstream bad("# schema=cdf version=1\nslice,metric,value,quantile\neMBB,throughput,abc,0.5\n");
  CHECK_THROWS_AS(read_cdfs(bad), IoError);
}

TEST_CASE("every exported explanation row satisfies g = extrinsic - epistemic") {
  HarnessConfig h;
  h.record_explanations = true;
  const auto run = run_single(default_agent_spec(AgentKind::kBrain), short_scenario(300), 5, h);
  std::istringstream in(to_text([&](std::ostream& o) { write_explanations(o, "brain", 5, run.explanations); }));
  const auto t = read_explanations(in);
  REQUIRE(t.records.size() == 300);
  for (const auto& r : t.records) {
    for (const auto& e : r.efe) CHECK(std::abs(e.g - (e.extrinsic - e.epistemic)) <= 1e-12 * (1 + std::abs(e.g)));
    for (const auto& e : r.chosen_per_factor)
      CHECK(std::abs(e.g - (e.extrinsic - e.epistemic)) <= 1e-12 * (1 + std::abs(e.g)));
  }
}

// --- configuration -----------------------------------------------------------

TEST_CASE("experiment config round-trips through JSON") {
  ExperimentConfig c;
  c.scenario = surge_scenario();
  c.agents.brain.brain.forgetting_surprise_margin.reset();
  c.agents.qlearn.q.features = FeatureKind::kJoint;
  c.harness.binning.edges[1] = {2.0, 9.5, 40.0};
  c.forgetting.eval_seeds = {5, 6, 7};
  const auto text = to_json(c);
  const auto back = experiment_from_json(text);
  CHECK(to_json(back) == text);
  CHECK(back.scenario.shift_events.size() == 1);
  CHECK_FALSE(back.agents.brain.brain.forgetting_surprise_margin.has_value());
  CHECK(back.agents.qlearn.q.features == FeatureKind::kJoint);
  CHECK(to_json(experiment_from_json("{}")) == to_json(ExperimentConfig{}));
}

TEST_CASE("overrides") {
  const ExperimentConfig base;
  const std::vector<std::string> ok = {"scenario.horizon=1234", "agents.qlearn.learning_rate=0.5",
                                       "harness.binning.URLLC=[1,2]", "scenario.reward_weights.beta=2"};
  const auto c = apply_overrides(base, ok);
  CHECK(c.scenario.horizon == 1234);
  CHECK(c.agents.qlearn.q.learning_rate == 0.5);
  CHECK(c.harness.binning.edges[1] == std::vector<double>{1, 2});
  CHECK(c.scenario.reward_weights.beta == 2.0);

  const std::vector<std::string> unknown = {"scenario.horizn=5"};
  CHECK_THROWS_AS(apply_overrides(base, unknown), ConfigError);
  const std::vector<std::string> no_eq = {"scenario.horizon"};
  CHECK_THROWS_AS(apply_overrides(base, no_eq), ConfigError);
  const std::vector<std::string> wrong_type = {"scenario.horizon=\"many\""};
  CHECK_THROWS_AS(apply_overrides(base, wrong_type), ConfigError);
}

TEST_CASE("config violations name their section") {
  ExperimentConfig c;
  c.scenario.demand_transition[0][1] = {0.5, 0.6, 0.0};
  c.harness.episode_length = 0;
  const auto v = experiment_violations(c);
  auto has = [&](const std::string& prefix) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.rfind(prefix, 0) == 0; });
  };
  CHECK(has("scenario: "));
  CHECK(has("harness"));
  CHECK(experiment_violations(ExperimentConfig{}).empty());
  CHECK_THROWS_AS(experiment_from_json("{\"scenario\":{\"bogus\":1}}"), ConfigError);
}

TEST_CASE("generative model JSON round-trip") {
  auto m = with_dirichlet_counts(default_demand_model(ScenarioConfig::defaults().demand_transition[1]), 2.0);
  m = update_counts(m, Emission{1, 2, 0, 1.0});
  const auto text = to_json(m);
  CHECK(is_model_document(text));
  CHECK_FALSE(is_model_document(to_json(ExperimentConfig{})));
  const auto back = model_from_json(text);
  CHECK(back.a.matrices == m.a.matrices);
  CHECK(back.b.matrices == m.b.matrices);
  CHECK(back.c.log_probs == m.c.log_probs);
  CHECK(back.d == m.d);
  REQUIRE(back.counts.has_value());
  CHECK(back.counts->a == m.counts->a);
  CHECK(to_json(back) == text);
}
