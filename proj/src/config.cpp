#include "brain/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace brain {

using Json = nlohmann::ordered_json;

namespace {

// --- strict object reading -----------------------------------------------------

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

template <class T>
T convert(const Json& j, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ConfigError(path + ": expected true or false");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(path + ": expected a non-negative integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
  }
  return j.get<T>();
}

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
  }

  const Json* find(std::string_view key) {
    seen_.insert(std::string(key));
    const auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void get(std::string_view key, T& out) {
    if (const Json* v = find(key)) out = convert<T>(*v, join(path_, key));
  }

  /// null clears the optional.
  template <class T>
  void get(std::string_view key, std::optional<T>& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) out.reset();
      else out = convert<T>(*v, join(path_, key));
    }
  }

  std::string path(std::string_view key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + join(path_, k) + "'");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <std::size_t N>
void read_array(const Json& j, const std::string& path, std::array<double, N>& out) {
  if (!j.is_array() || j.size() != N) throw ConfigError(path + ": expected " + std::to_string(N) + " numbers");
  for (std::size_t i = 0; i < N; ++i) out[i] = convert<double>(j[i], path + "." + std::to_string(i));
}

void read_vector(const Json& j, const std::string& path, std::vector<double>& out) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
  out.clear();
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(convert<double>(j[i], path + "." + std::to_string(i)));
}

void read_matrix(const Json& j, const std::string& path, DemandMatrix& out) {
  if (!j.is_array() || j.size() != kNumDemandLevels) throw ConfigError(path + ": expected a 3x3 matrix");
  for (std::size_t r = 0; r < kNumDemandLevels; ++r) read_array(j[r], path + "." + std::to_string(r), out[r]);
}

/// {"eMBB": ..., "URLLC": ..., "mMTC": ...}; missing slices keep their value.
template <class T, class Fn>
void read_per_slice(const Json& j, const std::string& path, PerSlice<T>& out, Fn read_one) {
  Reader r(j, path);
  for (auto s : kAllSlices)
    if (const Json* v = r.find(to_string(s))) read_one(*v, r.path(to_string(s)), out[index(s)]);
  r.finish();
}

template <class T, class Fn>
Json write_per_slice(const PerSlice<T>& v, Fn write_one) {
  Json j = Json::object();
  for (auto s : kAllSlices) j[std::string(to_string(s))] = write_one(v[index(s)]);
  return j;
}

Json matrix_json(const DemandMatrix& m) {
  Json j = Json::array();
  for (const auto& row : m) j.push_back(Json(row));
  return j;
}

std::string_view feature_name(FeatureKind k) { return k == FeatureKind::kJoint ? "joint" : "factored"; }
FeatureKind parse_feature(const std::string& s, const std::string& path) {
  if (s == "factored") return FeatureKind::kFactored;
  if (s == "joint") return FeatureKind::kJoint;
  throw ConfigError(path + ": expected \"factored\" or \"joint\"");
}

std::string_view form_name(ExtrinsicForm f) { return f == ExtrinsicForm::kExpectedSurprisal ? "surprisal" : "kl"; }
ExtrinsicForm parse_form(const std::string& s, const std::string& path) {
  if (s == "kl") return ExtrinsicForm::kPreferenceKl;
  if (s == "surprisal") return ExtrinsicForm::kExpectedSurprisal;
  throw ConfigError(path + ": expected \"kl\" or \"surprisal\"");
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// --- sections ----------------------------------------------------------------------

Json scenario_json(const ScenarioConfig& c) {
  Json j;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  j["demand_transition"] = write_per_slice(c.demand_transition, matrix_json);
  j["initial_demand"] = write_per_slice(c.initial_demand, [](const LevelRates& r) { return Json(r); });
  j["arrival_rates"] = write_per_slice(c.arrival_rates, [](const LevelRates& r) { return Json(r); });
  j["arrival_noise"] = c.arrival_noise;
  j["capacity"] = c.capacity;
  j["tb_size"] = c.tb_size;
  j["obs_noise_sigma"] = c.obs_noise_sigma;
  j["check_tax"] = c.check_tax;
  j["scheduler_bonus"] = c.scheduler_bonus;
  Json events = Json::array();
  for (const auto& ev : c.shift_events) {
    Json e;
    e["step"] = ev.step;
    e["demand_transition"] = ev.demand_transition ? write_per_slice(*ev.demand_transition, matrix_json) : Json(nullptr);
    e["arrival_rates"] =
        ev.arrival_rates ? write_per_slice(*ev.arrival_rates, [](const LevelRates& r) { return Json(r); }) : Json(nullptr);
    events.push_back(e);
  }
  j["shift_events"] = events;
  j["reward_weights"] = {{"alpha", c.reward_weights.alpha}, {"beta", c.reward_weights.beta},
                         {"gamma", c.reward_weights.gamma}};
  j["qos_targets"] = {{"embb_throughput", c.qos_targets.embb_throughput},
                      {"urllc_buffer", c.qos_targets.urllc_buffer},
                      {"mmtc_tb", c.qos_targets.mmtc_tb}};
  j["grid_step"] = c.grid_step;
  Json profiles = Json::array();
  for (const auto& p : c.scheduler_profiles) {
    Json row = Json::array();
    for (auto k : p) row.push_back(std::string(to_string(k)));
    profiles.push_back(row);
  }
  j["scheduler_profiles"] = profiles;
  j["check_actions"] = c.check_actions;
  return j;
}

void read_scenario(const Json& j, const std::string& path, ScenarioConfig& c) {
  Reader r(j, path);
  r.get("horizon", c.horizon);
  r.get("seed", c.seed);
  if (const Json* v = r.find("demand_transition")) read_per_slice(*v, r.path("demand_transition"), c.demand_transition, read_matrix);
  if (const Json* v = r.find("initial_demand"))
    read_per_slice(*v, r.path("initial_demand"), c.initial_demand, read_array<kNumDemandLevels>);
  if (const Json* v = r.find("arrival_rates"))
    read_per_slice(*v, r.path("arrival_rates"), c.arrival_rates, read_array<kNumDemandLevels>);
  r.get("arrival_noise", c.arrival_noise);
  r.get("capacity", c.capacity);
  r.get("tb_size", c.tb_size);
  r.get("obs_noise_sigma", c.obs_noise_sigma);
  r.get("check_tax", c.check_tax);
  r.get("scheduler_bonus", c.scheduler_bonus);
  if (const Json* v = r.find("shift_events")) {
    const std::string p = r.path("shift_events");
    if (!v->is_array()) throw ConfigError(p + ": expected an array");
    c.shift_events.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string ep = p + "." + std::to_string(i);
      Reader er((*v)[i], ep);
      ShiftEvent ev;
      er.get("step", ev.step);
      if (const Json* d = er.find("demand_transition"); d && !d->is_null()) {
        ev.demand_transition = c.demand_transition;
        read_per_slice(*d, er.path("demand_transition"), *ev.demand_transition, read_matrix);
      }
      if (const Json* a = er.find("arrival_rates"); a && !a->is_null()) {
        ev.arrival_rates = c.arrival_rates;
        read_per_slice(*a, er.path("arrival_rates"), *ev.arrival_rates, read_array<kNumDemandLevels>);
      }
      er.finish();
      c.shift_events.push_back(std::move(ev));
    }
  }
  if (const Json* v = r.find("reward_weights")) {
    Reader w(*v, r.path("reward_weights"));
    w.get("alpha", c.reward_weights.alpha);
    w.get("beta", c.reward_weights.beta);
    w.get("gamma", c.reward_weights.gamma);
    w.finish();
  }
  if (const Json* v = r.find("qos_targets")) {
    Reader q(*v, r.path("qos_targets"));
    q.get("embb_throughput", c.qos_targets.embb_throughput);
    q.get("urllc_buffer", c.qos_targets.urllc_buffer);
    q.get("mmtc_tb", c.qos_targets.mmtc_tb);
    q.finish();
  }
  r.get("grid_step", c.grid_step);
  if (const Json* v = r.find("scheduler_profiles")) {
    const std::string p = r.path("scheduler_profiles");
    if (!v->is_array()) throw ConfigError(p + ": expected an array of profiles");
    c.scheduler_profiles.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& row = (*v)[i];
      const std::string rp = p + "." + std::to_string(i);
      if (!row.is_array() || row.size() != kNumSlices) throw ConfigError(rp + ": expected one scheduler per slice");
      SchedulerProfile prof{};
      for (std::size_t k = 0; k < kNumSlices; ++k) {
        try {
          prof[k] = parse_scheduler(convert<std::string>(row[k], rp + "." + std::to_string(k)));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(rp + "." + std::to_string(k) + ": " + e.what());
        }
      }
      c.scheduler_profiles.push_back(prof);
    }
  }
  r.get("check_actions", c.check_actions);
  r.finish();
}

Json harness_json(const HarnessConfig& h) {
  Json j;
  j["episode_length"] = h.episode_length;
  j["binning"] = write_per_slice(h.binning.edges, [](const std::vector<double>& e) { return Json(e); });
  j["epsilon_decay_fraction"] = h.epsilon_decay_fraction;
  j["threads"] = h.threads;
  return j;
}

void read_harness(const Json& j, const std::string& path, HarnessConfig& h) {
  Reader r(j, path);
  r.get("episode_length", h.episode_length);
  if (const Json* v = r.find("binning")) read_per_slice(*v, r.path("binning"), h.binning.edges, read_vector);
  r.get("epsilon_decay_fraction", h.epsilon_decay_fraction);
  r.get("threads", h.threads);
  r.finish();
}

Json agents_json(const AgentSpecs& a) {
  Json j;
  {
    const auto& b = a.brain.brain;
    Json s;
    s["precision"] = b.model.precision;
    s["form"] = form_name(b.form);
    s["preferences"] = write_per_slice(b.model.preferences, [](const std::vector<double>& p) { return Json(p); });
    s["likelihood_floor"] = b.model.likelihood_floor;
    s["queue_aware"] = b.model.queue_aware;
    s["transition_perturbation"] = b.model.transition_perturbation;
    s["fallback_on_zero_evidence"] = b.fallback_on_zero_evidence;
    s["learn_transitions"] = optional_json(b.learn_transitions);
    s["transition_learning_rate"] = b.transition_learning_rate;
    s["transition_forgetting"] = b.transition_forgetting;
    s["forgetting_surprise_margin"] = optional_json(b.forgetting_surprise_margin);
    s["surprise_fast_decay"] = b.surprise_fast_decay;
    s["surprise_slow_decay"] = b.surprise_slow_decay;
    j["brain"] = s;
  }
  j["heuristic"] = {{"weights", write_per_slice(a.heuristic.heuristic_weights, [](double w) { return Json(w); })}};
  {
    const auto& q = a.qlearn.q;
    Json s;
    s["learning_rate"] = q.learning_rate;
    s["discount"] = q.discount;
    s["replay_capacity"] = q.replay_capacity;
    s["batch_size"] = q.batch_size;
    s["target_sync"] = q.target_sync;
    s["epsilon_start"] = q.epsilon_start;
    s["epsilon_end"] = q.epsilon_end;
    s["features"] = feature_name(q.features);
    j["qlearn"] = s;
  }
  {
    const auto& p = a.reinforce.policy;
    Json s;
    s["learning_rate"] = p.learning_rate;
    s["discount"] = p.discount;
    s["batch_episodes"] = p.batch_episodes;
    s["normalize_returns"] = p.normalize_returns;
    s["features"] = feature_name(p.features);
    j["reinforce"] = s;
  }
  return j;
}

void read_agents(const Json& j, const std::string& path, AgentSpecs& a) {
  Reader r(j, path);
  if (const Json* v = r.find("brain")) {
    auto& b = a.brain.brain;
    Reader s(*v, r.path("brain"));
    s.get("precision", b.model.precision);
    if (const Json* f = s.find("form")) b.form = parse_form(convert<std::string>(*f, s.path("form")), s.path("form"));
    if (const Json* p = s.find("preferences")) read_per_slice(*p, s.path("preferences"), b.model.preferences, read_vector);
    s.get("likelihood_floor", b.model.likelihood_floor);
    s.get("queue_aware", b.model.queue_aware);
    s.get("transition_perturbation", b.model.transition_perturbation);
    s.get("fallback_on_zero_evidence", b.fallback_on_zero_evidence);
    s.get("learn_transitions", b.learn_transitions);
    s.get("transition_learning_rate", b.transition_learning_rate);
    s.get("transition_forgetting", b.transition_forgetting);
    s.get("forgetting_surprise_margin", b.forgetting_surprise_margin);
    s.get("surprise_fast_decay", b.surprise_fast_decay);
    s.get("surprise_slow_decay", b.surprise_slow_decay);
    s.finish();
  }
  if (const Json* v = r.find("heuristic")) {
    Reader s(*v, r.path("heuristic"));
    if (const Json* w = s.find("weights"))
      read_per_slice(*w, s.path("weights"), a.heuristic.heuristic_weights,
                     [](const Json& x, const std::string& p, double& out) { out = convert<double>(x, p); });
    s.finish();
  }
  if (const Json* v = r.find("qlearn")) {
    auto& q = a.qlearn.q;
    Reader s(*v, r.path("qlearn"));
    s.get("learning_rate", q.learning_rate);
    s.get("discount", q.discount);
    s.get("replay_capacity", q.replay_capacity);
    s.get("batch_size", q.batch_size);
    s.get("target_sync", q.target_sync);
    s.get("epsilon_start", q.epsilon_start);
    s.get("epsilon_end", q.epsilon_end);
    if (const Json* f = s.find("features")) q.features = parse_feature(convert<std::string>(*f, s.path("features")), s.path("features"));
    s.finish();
  }
  if (const Json* v = r.find("reinforce")) {
    auto& p = a.reinforce.policy;
    Reader s(*v, r.path("reinforce"));
    s.get("learning_rate", p.learning_rate);
    s.get("discount", p.discount);
    s.get("batch_episodes", p.batch_episodes);
    s.get("normalize_returns", p.normalize_returns);
    if (const Json* f = s.find("features")) p.features = parse_feature(convert<std::string>(*f, s.path("features")), s.path("features"));
    s.finish();
  }
  r.finish();
}

Json experiment_json(const ExperimentConfig& c) {
  Json j;
  j["scenario"] = scenario_json(c.scenario);
  j["harness"] = harness_json(c.harness);
  j["agents"] = agents_json(c.agents);
  j["shift"] = {{"window", c.shift.window}, {"recovery_fraction", c.shift.recovery_fraction}};
  j["forgetting"] = {{"phase_steps", c.forgetting.phase_steps},
                     {"eval_steps", c.forgetting.eval_steps},
                     {"eval_seeds", c.forgetting.eval_seeds}};
  return j;
}

ExperimentConfig experiment_from(const Json& j) {
  ExperimentConfig c;
  Reader r(j, "");
  if (const Json* v = r.find("scenario")) read_scenario(*v, "scenario", c.scenario);
  if (const Json* v = r.find("harness")) read_harness(*v, "harness", c.harness);
  if (const Json* v = r.find("agents")) read_agents(*v, "agents", c.agents);
  if (const Json* v = r.find("shift")) {
    Reader s(*v, "shift");
    s.get("window", c.shift.window);
    s.get("recovery_fraction", c.shift.recovery_fraction);
    s.finish();
  }
  if (const Json* v = r.find("forgetting")) {
    Reader s(*v, "forgetting");
    s.get("phase_steps", c.forgetting.phase_steps);
    s.get("eval_steps", c.forgetting.eval_steps);
    if (const Json* e = s.find("eval_seeds")) {
      if (!e->is_array()) throw ConfigError("forgetting.eval_seeds: expected an array of seeds");
      c.forgetting.eval_seeds.clear();
      for (std::size_t i = 0; i < e->size(); ++i)
        c.forgetting.eval_seeds.push_back(convert<std::uint64_t>((*e)[i], "forgetting.eval_seeds." + std::to_string(i)));
    }
    s.finish();
  }
  r.finish();
  return c;
}

Json parse_document(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

// --- generative models ---------------------------------------------------------------

Json matrix_doc(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

Matrix read_matrix_doc(const Json& j, const std::string& path) {
  Reader r(j, path);
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;
  r.get("rows", rows);
  r.get("cols", cols);
  if (const Json* d = r.find("data")) read_vector(*d, r.path("data"), data);
  r.finish();
  if (data.size() != rows * cols) throw ConfigError(path + ": data holds " + std::to_string(data.size()) + " entries, expected rows*cols");
  return Matrix(rows, cols, std::move(data));
}

Json matrices_doc(const std::vector<Matrix>& ms) {
  Json j = Json::array();
  for (const auto& m : ms) j.push_back(matrix_doc(m));
  return j;
}

std::vector<Matrix> read_matrices(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of matrices");
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_matrix_doc(j[i], path + "." + std::to_string(i)));
  return out;
}

}  // namespace

const AgentSpec& AgentSpecs::get(AgentKind k) const {
  switch (k) {
    case AgentKind::kBrain: return brain;
    case AgentKind::kHeuristic: return heuristic;
    case AgentKind::kQLearn: return qlearn;
    case AgentKind::kReinforce: return reinforce;
  }
  throw std::invalid_argument("unknown agent kind");
}

std::string to_json(const ExperimentConfig& config) { return experiment_json(config).dump(2) + "\n"; }

ExperimentConfig experiment_from_json(std::string_view text) { return experiment_from(parse_document(text)); }

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return experiment_from_json(ss.str());
}

ExperimentConfig apply_overrides(const ExperimentConfig& config, std::span<const std::string> overrides) {
  if (overrides.empty()) return config;
  Json j = experiment_json(config);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "' is not key=value");
    const std::string key = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);
    Json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (node->is_object()) {
        auto it = node->find(part);
        if (it == node->end()) throw ConfigError("unknown key '" + key + "'");
        node = &*it;
      } else if (node->is_array()) {
        std::size_t idx = 0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), idx);
        if (res.ec != std::errc{} || res.ptr != part.data() + part.size() || idx >= node->size())
          throw ConfigError("unknown key '" + key + "'");
        node = &(*node)[idx];
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    *node = std::move(value);
  }
  return experiment_from(j);
}

std::vector<std::string> experiment_violations(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (auto& v : config_violations(c.scenario)) out.push_back("scenario: " + v);
  for (auto& v : c.harness.binning.violations()) out.push_back("harness.binning: " + v);
  if (c.harness.episode_length <= 0) out.emplace_back("harness.episode_length must be positive");
  if (!(c.harness.epsilon_decay_fraction >= 0.0 && c.harness.epsilon_decay_fraction <= 1.0))
    out.emplace_back("harness.epsilon_decay_fraction must lie in [0, 1]");
  for (auto& v : c.agents.qlearn.q.violations()) out.push_back("agents.qlearn: " + v);
  for (auto& v : c.agents.reinforce.policy.violations()) out.push_back("agents.reinforce: " + v);
  for (auto s : kAllSlices) {
    const auto& p = c.agents.brain.brain.model.preferences[index(s)];
    if (p.size() != c.harness.binning.num_bins(s))
      out.push_back("agents.brain.preferences." + std::string(to_string(s)) + " must have one entry per bin");
  }
  if (c.shift.window <= 0) out.emplace_back("shift.window must be positive");
  if (!(c.shift.recovery_fraction > 0.0 && c.shift.recovery_fraction <= 1.0))
    out.emplace_back("shift.recovery_fraction must lie in (0, 1]");
  if (c.forgetting.phase_steps <= 0 || c.forgetting.eval_steps <= 0)
    out.emplace_back("forgetting.phase_steps and eval_steps must be positive");
  if (c.forgetting.eval_seeds.empty()) out.emplace_back("forgetting.eval_seeds must not be empty");
  // agent constructors carry the remaining checks
  if (out.empty()) {
    try {
      const auto catalog = action_catalog(c.scenario);
      for (auto k : {AgentKind::kBrain, AgentKind::kHeuristic, AgentKind::kQLearn, AgentKind::kReinforce})
        make_agent(c.agents.get(k), c.scenario, catalog, c.harness, c.scenario.horizon);
    } catch (const std::exception& e) {
      out.push_back(std::string("agents: ") + e.what());
    }
  }
  return out;
}

std::string to_json(const GenerativeModel& model) {
  Json j;
  j["A"] = matrices_doc(model.a.matrices);
  j["B"] = matrices_doc(model.b.matrices);
  j["C"] = model.c.log_probs;
  j["D"] = model.d.vector();
  if (model.counts) j["counts"] = {{"a", matrices_doc(model.counts->a)}, {"b", matrices_doc(model.counts->b)}};
  else j["counts"] = nullptr;
  return j.dump(2) + "\n";
}

GenerativeModel model_from_json(std::string_view text) {
  const Json j = parse_document(text);
  Reader r(j, "");
  GenerativeModel m;
  if (const Json* v = r.find("A")) m.a.matrices = read_matrices(*v, "A");
  if (const Json* v = r.find("B")) m.b.matrices = read_matrices(*v, "B");
  if (const Json* v = r.find("C")) read_vector(*v, "C", m.c.log_probs);
  if (const Json* v = r.find("D")) {
    std::vector<double> d;
    read_vector(*v, "D", d);
    // stored as given; validate() reports a D that is not a distribution
    try {
      m.d = Categorical(d);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("D: ") + e.what());
    }
  }
  if (const Json* v = r.find("counts"); v && !v->is_null()) {
    Reader c(*v, "counts");
    DirichletCounts counts;
    if (const Json* a = c.find("a")) counts.a = read_matrices(*a, "counts.a");
    if (const Json* b = c.find("b")) counts.b = read_matrices(*b, "counts.b");
    c.finish();
    m.counts = std::move(counts);
  }
  r.finish();
  return m;
}

bool is_model_document(std::string_view text) {
  const Json j = Json::parse(text, nullptr, false);
  return j.is_object() && j.contains("A");
}

}  // namespace brain
