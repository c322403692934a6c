#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "brain/env.hpp"

using namespace brain;

namespace {

ScenarioConfig quiet() {
  auto c = ScenarioConfig::defaults();
  c.arrival_noise = 0.0;
  c.obs_noise_sigma = 0.0;
  return c;
}

SliceAction rr(double e, double u, double m) {
  return {{e, u, m}, {SchedulerKind::kRR, SchedulerKind::kRR, SchedulerKind::kRR}, std::nullopt};
}

}  // namespace

TEST_CASE("reset with a forced initial demand starts Low and empty") {
  auto c = ScenarioConfig::defaults();
  c.initial_demand = {LevelRates{1, 0, 0}, LevelRates{1, 0, 0}, LevelRates{1, 0, 0}};
  EnvRng rng(7);
  const auto [s, obs] = reset(c, rng);
  CHECK(s.demand == PerSlice<DemandLevel>{DemandLevel::kLow, DemandLevel::kLow, DemandLevel::kLow});
  CHECK(s.queue_kb == PerSlice<double>{0, 0, 0});
  CHECK(s.step_index == 0);
}

TEST_CASE("reset is deterministic for a seed") {
  const auto c = ScenarioConfig::defaults();
  EnvRng r1(42), r2(42);
  CHECK(reset(c, r1).first == reset(c, r2).first);
}

TEST_CASE("a non-normalized transition row is rejected") {
  auto c = ScenarioConfig::defaults();
  c.demand_transition[0][0] = {0.5, 0.6, 0.0};
  EnvRng rng(1);
  CHECK_THROWS_AS(reset(c, rng), InvalidConfig);
  CHECK_FALSE(config_violations(c).empty());
}

TEST_CASE("queue balance: arrivals 10, served 4") {
  auto c = quiet();
  c.capacity = 4.0;
  c.arrival_rates[0] = {10, 10, 10};
  EnvRng rng(1);
  EnvState s;
  const auto r = step(s, rr(1, 0, 0), c, rng);
  CHECK(r.state.queue_kb[0] == doctest::Approx(6.0));
  CHECK(r.kpm.throughput[0] == doctest::Approx(4.0));
  CHECK(r.kpm.tb_count[0] == 4);
}

TEST_CASE("zero PRB share serves nothing") {
  const auto c = quiet();
  EnvRng rng(1);
  const auto r = step(EnvState{}, rr(1, 0, 0), c, rng);
  CHECK(r.kpm.throughput[1] == 0.0);
  CHECK(r.kpm.throughput[2] == 0.0);
  CHECK(r.state.queue_kb[1] > 0.0);
}

TEST_CASE("fixed seed replays an identical 100-step trajectory") {
  auto run = [] {
    SliceEnv env(ScenarioConfig::defaults());
    env.reset();
    std::vector<StepResult> out;
    const auto cat = action_catalog(env.config());
    for (int t = 0; t < 100; ++t) {
      auto r = env.step(cat[static_cast<std::size_t>(t) % cat.size()]);
      out.push_back(r);
    }
    return out;
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].state == b[i].state);
    CHECK(a[i].observation == b[i].observation);
    CHECK(a[i].reward == b[i].reward);
  }
}

TEST_CASE("compute_reward") {
  KpmObservation o;
  o.throughput[0] = 10;
  o.buffer[1] = 3;
  o.tb_count[2] = 2;
  CHECK(compute_reward(o, {1, 1, 1}) == doctest::Approx(9.0));
  CHECK(compute_reward(KpmObservation{}, {1, 5, 10}) == 0.0);
  KpmObservation p;
  p.throughput[0] = 8;
  p.buffer[1] = 1;
  p.tb_count[2] = 4;
  CHECK(compute_reward(p, {0.5, 2, 1}) == doctest::Approx(6.0));
}

TEST_CASE("qos_satisfaction") {
  const QosTargets t;
  KpmObservation all;
  all.throughput[0] = 20;
  all.buffer[1] = 1;
  all.tb_count[2] = 3;
  CHECK(qos_satisfaction(all, t).fraction == 1.0);
  CHECK(qos_satisfaction(all, t).all);

  KpmObservation one;  // only URLLC (empty buffer) satisfied
  one.buffer[1] = 0;
  const auto q = qos_satisfaction(one, t);
  CHECK(q.fraction == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(q.all);

  KpmObservation edge = all;
  edge.throughput[0] = t.embb_throughput;
  edge.buffer[1] = t.urllc_buffer;
  edge.tb_count[2] = 1;
  CHECK(qos_satisfaction(edge, t).all);
}

TEST_CASE("action catalog sizes") {
  const std::vector<SchedulerProfile> one = {{SchedulerKind::kRR, SchedulerKind::kRR, SchedulerKind::kRR}};
  // simplex lattice points with step 1/k over 3 slices: C(k + 2, 2)
  CHECK(action_catalog(0.5, one, false).size() == 6);
  CHECK(action_catalog(1.0, one, false).size() == 3);
  CHECK_THROWS_AS(action_catalog(0.3, one, false), InvalidGrid);
  const auto def = action_catalog(ScenarioConfig::defaults());
  CHECK(def.size() == 15 * 2 * 4);
  for (const auto& a : def) CHECK(a.prb_fraction[0] + a.prb_fraction[1] + a.prb_fraction[2] == doctest::Approx(1.0));
  const auto first = action_catalog(1.0, one, false);
  CHECK(first[0].prb_fraction == PerSlice<double>{1, 0, 0});
}

TEST_CASE("queues stay nonnegative and flow is conserved") {
  SliceEnv env(ScenarioConfig::defaults());
  env.reset();
  const auto cat = action_catalog(env.config());
  std::mt19937_64 pick(3);
  for (int t = 0; t < 2000; ++t) {
    const auto before = env.state().queue_kb;
    const auto r = env.step(cat[pick() % cat.size()]);
    for (std::size_t k = 0; k < kNumSlices; ++k) {
      CHECK(r.state.queue_kb[k] >= 0.0);
      CHECK(std::abs(r.kpm.throughput[k] + r.state.queue_kb[k] - (before[k] + r.arrivals[k])) < 1e-9);
    }
  }
}

TEST_CASE("more PRB share never lowers the slice's noise-free throughput") {
  const auto c = ScenarioConfig::defaults();
  for (double share = 0.0; share < 1.0; share += 0.25) {
    EnvRng r1(9), r2(9);
    EnvState s;
    s.demand = {DemandLevel::kHigh, DemandLevel::kMedium, DemandLevel::kLow};
    s.queue_kb = {30, 5, 1};
    const double rest = (1.0 - share) / 2.0, rest2 = (1.0 - share - 0.25) / 2.0;
    const auto lo = step(s, rr(share, rest, rest), c, r1);
    const auto hi = step(s, rr(share + 0.25, rest2, rest2), c, r2);
    CHECK(hi.kpm.throughput[0] >= lo.kpm.throughput[0]);
  }
}

TEST_CASE("shift events take effect exactly at their step") {
  auto c = ScenarioConfig::defaults();
  ShiftEvent ev;
  ev.step = 100;
  auto rates = c.arrival_rates;
  rates[1] = {50, 50, 50};
  ev.arrival_rates = rates;
  c.shift_events = {ev};
  CHECK(dynamics_at(c, 99).arrival_rates[1][0] == 5.0);
  CHECK(dynamics_at(c, 100).arrival_rates[1][0] == 50.0);
  CHECK(dynamics_at(c, 100).demand_transition == c.demand_transition);
}

TEST_CASE("a probed slice is observed without noise at a capacity tax") {
  auto c = ScenarioConfig::defaults();
  auto probe = rr(0.5, 0.25, 0.25);
  probe.probe_slice = SliceKind::kUrllc;
  EnvState s;
  s.queue_kb = {40, 20, 5};
  EnvRng rng(11);
  const auto r = step(s, probe, c, rng);
  CHECK(r.observation.buffer[1] == r.kpm.buffer[1]);
  CHECK(r.observation.throughput[1] == r.kpm.throughput[1]);
  CHECK(served_kb(c, probe, SliceKind::kEmbb, DemandLevel::kLow) ==
        doctest::Approx(c.capacity * (1 - c.check_tax) * 0.5));
}
