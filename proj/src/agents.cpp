#include "brain/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace brain {

namespace {

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t sample(const Categorical& p, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // rounding left a sliver above the last cumulative sum
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return 0;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(logits[i] - mx);
  for (double& x : p) x /= sum;
  return p;
}

void throw_if(const std::vector<std::string>& violations, const char* what) {
  if (violations.empty()) return;
  std::string msg = what;
  for (const auto& v : violations) msg += "; " + v;
  throw std::invalid_argument(msg);
}

}  // namespace

std::size_t argmax_lowest(std::span<const double> v) {
  if (v.empty()) throw EmptyCatalog("argmax over an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Categorical egreedy_distribution(std::span<const double> q_values, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  const std::size_t n = q_values.size();
  const std::size_t greedy = argmax_lowest(q_values);
  std::vector<double> p(n, epsilon / static_cast<double>(n));
  p[greedy] += 1.0 - epsilon;
  return Categorical(std::move(p));
}

double step_entropy(const Categorical& p) { return p.entropy(); }

double episode_entropy(std::span<const Categorical> ps) {
  if (ps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : ps) sum += step_entropy(p);
  return sum / static_cast<double>(ps.size());
}

double episode_entropy(std::span<const double> step_entropies) {
  if (step_entropies.empty()) return 0.0;
  return std::accumulate(step_entropies.begin(), step_entropies.end(), 0.0) /
         static_cast<double>(step_entropies.size());
}

// --- heuristic ---------------------------------------------------------------

std::size_t heuristic_act(std::span<const SliceAction> catalog, const PerSlice<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("heuristic weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("heuristic weights must not all be zero");

  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto& a = catalog[i];
    if (a.probe_slice) continue;
    if (std::any_of(a.scheduler.begin(), a.scheduler.end(), [](SchedulerKind k) { return k != SchedulerKind::kRR; }))
      continue;
    double d = 0.0;
    for (std::size_t k = 0; k < kNumSlices; ++k) d += std::abs(a.prb_fraction[k] - weights[k] / total);
    // strict comparison keeps the lowest index on ties; the slack absorbs
    // rounding in fractions such as 1/3
    if (d < best_dist - 1e-12) {
      best_dist = d;
      best = i;
    }
  }
  if (!best) throw std::invalid_argument("catalog has no round-robin template without a probe");
  return *best;
}

HeuristicAgent::HeuristicAgent(std::vector<SliceAction> catalog, PerSlice<double> weights)
    : num_actions_(catalog.size()),
      action_(heuristic_act(catalog, weights)),
      dist_(Categorical::one_hot(catalog.size(), action_)) {}

// --- features ----------------------------------------------------------------

ObsFeatures::ObsFeatures(ObsBinning binning, FeatureKind kind) : binning_(std::move(binning)), kind_(kind) {
  throw_if(binning_.violations(), "invalid binning");
  if (kind_ == FeatureKind::kJoint) {
    size_ = binning_.num_joint();
  } else {
    size_ = 1;
    for (auto s : kAllSlices) size_ += binning_.num_bins(s);
  }
}

std::vector<std::size_t> ObsFeatures::active(std::size_t obs) const {
  if (obs >= num_obs()) throw IndexOutOfRange("observation index out of range");
  if (kind_ == FeatureKind::kJoint) return {obs};
  // decode the mixed-radix joint index, eMBB most significant
  PerSlice<std::size_t> bins{};
  std::size_t rest = obs;
  for (std::size_t k = kNumSlices; k-- > 0;) {
    const std::size_t nb = binning_.num_bins(kAllSlices[k]);
    bins[k] = rest % nb;
    rest /= nb;
  }
  std::vector<std::size_t> out{0};
  std::size_t offset = 1;
  for (auto s : kAllSlices) {
    out.push_back(offset + bins[index(s)]);
    offset += binning_.num_bins(s);
  }
  return out;
}

// --- Q-learning --------------------------------------------------------------

std::vector<std::string> QAgentConfig::violations() const {
  std::vector<std::string> out;
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) out.push_back("learning_rate must be positive");
  if (!(discount >= 0.0 && discount < 1.0)) out.push_back("discount must lie in [0, 1)");
  if (replay_capacity == 0) out.push_back("replay_capacity must be positive");
  if (batch_size == 0) out.push_back("batch_size must be positive");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) out.push_back("epsilon_start must lie in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) out.push_back("epsilon_end must lie in [0, 1]");
  if (epsilon_decay_steps < 0) out.push_back("epsilon_decay_steps must be nonnegative");
  return out;
}

QAgent::QAgent(std::size_t num_actions, ObsBinning binning, QAgentConfig config)
    : num_actions_(num_actions), features_(std::move(binning), config.features), config_(config) {
  if (num_actions_ == 0) throw EmptyCatalog("QAgent: empty action catalog");
  throw_if(config_.violations(), "invalid Q-agent config");
  begin_run(0);
}

void QAgent::begin_run(std::uint64_t seed) {
  w_.assign(num_actions_ * features_.size(), 0.0);
  target_w_ = w_;
  replay_.clear();
  replay_next_ = 0;
  steps_ = 0;
  rng_.seed(seed);
  last_dist_ = Categorical::uniform(num_actions_);
}

double QAgent::epsilon() const {
  if (config_.epsilon_decay_steps <= 0 || steps_ >= config_.epsilon_decay_steps) return config_.epsilon_end;
  const double frac = static_cast<double>(steps_) / static_cast<double>(config_.epsilon_decay_steps);
  return config_.epsilon_start + (config_.epsilon_end - config_.epsilon_start) * frac;
}

double QAgent::q(const std::vector<double>& w, std::span<const std::size_t> phi, std::size_t a) const {
  const double* row = w.data() + a * features_.size();
  double v = 0.0;
  for (std::size_t f : phi) v += row[f];
  return v;
}

std::vector<double> QAgent::q_row(const std::vector<double>& w, std::span<const std::size_t> phi) const {
  std::vector<double> out(num_actions_);
  for (std::size_t a = 0; a < num_actions_; ++a) out[a] = q(w, phi, a);
  return out;
}

std::vector<double> QAgent::q_values(std::size_t obs) const { return q_row(w_, features_.active(obs)); }

Categorical QAgent::action_distribution(const KpmObservation& obs) const {
  return egreedy_distribution(q_values(features_.binning().joint_index(obs)), training_ ? epsilon() : 0.0);
}

std::size_t QAgent::act(const KpmObservation& obs) {
  const auto qs = q_values(features_.binning().joint_index(obs));
  const double eps = training_ ? epsilon() : 0.0;
  last_dist_ = egreedy_distribution(qs, eps);
  if (eps > 0.0 && uniform01(rng_) < eps)
    return std::uniform_int_distribution<std::size_t>(0, num_actions_ - 1)(rng_);
  return argmax_lowest(qs);
}

std::optional<double> QAgent::learn(const Transition& t) {
  if (!training_) return std::nullopt;
  if (t.action >= num_actions_ || t.obs >= features_.num_obs() || t.next_obs >= features_.num_obs())
    throw IndexOutOfRange("QAgent::learn: transition index out of range");
  if (replay_.size() < config_.replay_capacity) {
    replay_.push_back(t);
  } else {
    replay_[replay_next_] = t;
  }
  replay_next_ = (replay_next_ + 1) % config_.replay_capacity;
  ++steps_;
  if (replay_.size() < config_.batch_size) return std::nullopt;

  const bool use_target = config_.target_sync > 0;
  std::uniform_int_distribution<std::size_t> pick(0, replay_.size() - 1);
  double loss = 0.0;
  for (std::size_t i = 0; i < config_.batch_size; ++i) {
    // with a batch of one the newest transition is used, so single-step
    // updates are exact
    const Transition& s = config_.batch_size == 1 ? t : replay_[pick(rng_)];
    const auto phi = features_.active(s.obs);
    double target = s.reward;
    if (!s.done) {
      const auto next = q_row(use_target ? target_w_ : w_, features_.active(s.next_obs));
      target += config_.discount * *std::max_element(next.begin(), next.end());
    }
    const double td = target - q(w_, phi, s.action);
    loss += td * td;
    double* row = w_.data() + s.action * features_.size();
    for (std::size_t f : phi) row[f] += config_.learning_rate * td;
  }
  if (use_target && steps_ % static_cast<std::int64_t>(config_.target_sync) == 0) target_w_ = w_;
  return loss / static_cast<double>(config_.batch_size);
}

// --- REINFORCE ---------------------------------------------------------------

std::vector<std::string> PolicyAgentConfig::violations() const {
  std::vector<std::string> out;
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) out.push_back("learning_rate must be positive");
  if (!(discount >= 0.0 && discount < 1.0)) out.push_back("discount must lie in [0, 1)");
  if (batch_episodes == 0) out.push_back("batch_episodes must be positive");
  return out;
}

ReinforceAgent::ReinforceAgent(std::size_t num_actions, ObsBinning binning, PolicyAgentConfig config)
    : num_actions_(num_actions), features_(std::move(binning), config.features), config_(config) {
  if (num_actions_ == 0) throw EmptyCatalog("ReinforceAgent: empty action catalog");
  throw_if(config_.violations(), "invalid policy-agent config");
  begin_run(0);
}

void ReinforceAgent::begin_run(std::uint64_t seed) {
  theta_.assign(num_actions_ * features_.size(), 0.0);
  current_.clear();
  pending_.clear();
  rng_.seed(seed);
  last_dist_ = Categorical::uniform(num_actions_);
}

Categorical ReinforceAgent::policy(std::size_t obs) const {
  const auto phi = features_.active(obs);
  std::vector<double> logits(num_actions_, 0.0);
  for (std::size_t a = 0; a < num_actions_; ++a)
    for (std::size_t f : phi) logits[a] += theta_[a * features_.size() + f];
  return Categorical::normalized(softmax(logits));
}

Categorical ReinforceAgent::action_distribution(const KpmObservation& obs) const {
  return policy(features_.binning().joint_index(obs));
}

std::size_t ReinforceAgent::act_index(std::size_t obs) {
  last_dist_ = policy(obs);
  return training_ ? sample(last_dist_, rng_) : last_dist_.argmax();
}

std::size_t ReinforceAgent::act(const KpmObservation& obs) { return act_index(features_.binning().joint_index(obs)); }

std::optional<double> ReinforceAgent::learn(const Transition& t) {
  if (!training_) return std::nullopt;
  if (t.action >= num_actions_ || t.obs >= features_.num_obs())
    throw IndexOutOfRange("ReinforceAgent::learn: transition index out of range");
  current_.push_back({t.obs, t.action, t.reward});
  if (!t.done) return std::nullopt;
  pending_.push_back(std::move(current_));
  current_.clear();
  if (pending_.size() < config_.batch_episodes) return std::nullopt;
  const double loss = reinforce_update(pending_);
  pending_.clear();
  return loss;
}

double ReinforceAgent::reinforce_update(std::span<const std::vector<EpisodeStep>> episodes) {
  // discounted return-to-go for every step
  std::vector<std::vector<double>> returns;
  std::size_t total = 0;
  for (const auto& ep : episodes) {
    std::vector<double> g(ep.size());
    double acc = 0.0;
    for (std::size_t t = ep.size(); t-- > 0;) g[t] = acc = ep[t].reward + config_.discount * acc;
    total += ep.size();
    returns.push_back(std::move(g));
  }
  if (total == 0) return 0.0;
  if (config_.normalize_returns) {
    double mean = 0.0;
    for (const auto& g : returns) for (double x : g) mean += x;
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (const auto& g : returns) for (double x : g) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(total));
    for (auto& g : returns)
      for (double& x : g) x = sd > 1e-12 ? (x - mean) / sd : 0.0;
  }

  const std::size_t nf = features_.size();
  std::vector<double> grad(theta_.size(), 0.0);
  double loss = 0.0;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    for (std::size_t t = 0; t < episodes[e].size(); ++t) {
      const auto& st = episodes[e][t];
      if (st.action >= num_actions_) throw IndexOutOfRange("ReinforceAgent: action index out of range");
      const double g = returns[e][t];
      const auto pi = policy(st.obs);
      loss += -safe_log(pi[st.action]) * g;
      if (g == 0.0) continue;
      const auto phi = features_.active(st.obs);
      // ∇ ln π(a|s) wrt row b is φ(s)(1[b=a] - π(b|s))
      for (std::size_t b = 0; b < num_actions_; ++b) {
        const double coef = g * ((b == st.action ? 1.0 : 0.0) - pi[b]);
        for (std::size_t f : phi) grad[b * nf + f] += coef;
      }
    }
  }
  const double scale = config_.learning_rate / static_cast<double>(episodes.size());
  for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i] += scale * grad[i];
  return loss / static_cast<double>(total);
}

// --- active inference --------------------------------------------------------

BrainAgent::BrainAgent(const ScenarioConfig& scenario, std::vector<SliceAction> catalog, ObsBinning binning,
                       BrainAgentConfig config)
    : builder_(scenario, std::move(binning), std::move(catalog), config.model), config_(std::move(config)) {
  if (config_.learn_transitions && !(*config_.learn_transitions > 0.0))
    throw std::invalid_argument("learn_transitions prior mass must be positive");
  if (!(config_.transition_forgetting > 0.0 && config_.transition_forgetting <= 1.0))
    throw std::invalid_argument("transition_forgetting must be in (0, 1]");
  for (double d : {config_.surprise_fast_decay, config_.surprise_slow_decay})
    if (!(d >= 0.0 && d < 1.0)) throw std::invalid_argument("surprise decays must be in [0, 1)");
  begin_run(0);
}

void BrainAgent::begin_run(std::uint64_t) {
  b_counts_.clear();
  if (config_.learn_transitions) {
    for (std::size_t k = 0; k < kNumSlices; ++k)
      b_counts_.emplace_back(kNumDemandLevels, kNumDemandLevels, *config_.learn_transitions);
  }
  surprise_fast_.assign(kNumSlices, -1.0);
  surprise_slow_.assign(kNumSlices, -1.0);
  step_ = 0;
  reset_belief();
}

void BrainAgent::reset_belief() {
  belief_ = initial_belief(builder_.build(PerSlice<double>{}));
  last_action_.reset();
  last_backlog_ = {};
  last_ = BrainStepResult{};
  last_.posterior.q_a = Categorical::uniform(num_actions());
}

std::vector<Matrix> BrainAgent::transitions() const {
  std::vector<Matrix> out;
  if (b_counts_.empty()) {
    for (const auto& f : builder_.build(PerSlice<double>{}).factors) out.push_back(f.b.matrices.front());
    return out;
  }
  for (const auto& counts : b_counts_) {
    Matrix b = counts;
    for (std::size_t c = 0; c < b.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < b.rows(); ++r) sum += b(r, c);
      for (std::size_t r = 0; r < b.rows(); ++r) b(r, c) /= sum;
    }
    out.push_back(std::move(b));
  }
  return out;
}

FactoredModel BrainAgent::model_for(const PerSlice<double>& backlog) const {
  FactoredModel m = builder_.build(backlog);
  if (!b_counts_.empty()) {
    auto bs = transitions();
    for (std::size_t k = 0; k < m.factors.size(); ++k) {
      m.factors[k].b.matrices = {std::move(bs[k])};
      m.factors[k].counts = DirichletCounts{{}, {b_counts_[k]}};
    }
  }
  return m;
}

BrainAgent::StepOutput BrainAgent::run_step(const KpmObservation& obs) const {
  const FactoredModel planning = model_for(obs.buffer);
  BrainOptions opts{config_.model.precision, config_.form, config_.fallback_on_zero_evidence};
  StepOutput out;
  if (!last_action_) {
    // nothing scheduled yet: plan from the prior alone
    out.result = brain_step(planning, belief_, std::nullopt, {}, opts, nullptr, step_);
    return out;
  }
  // perception only needs A for the executed action, under the context it was planned in
  FactoredModel perception;
  const auto bs = transitions();
  const auto& action = builder_.catalog()[*last_action_];
  const auto bins = builder_.binning().bins(obs);
  for (auto slice : kAllSlices) {
    GenerativeModel f = planning.factors[index(slice)];
    f.a.matrices = {builder_.observation_matrix(slice, action, last_backlog_[index(slice)])};
    f.b.matrices = {bs[index(slice)]};
    out.likelihoods.push_back(likelihood(f, bins[index(slice)], 0));
    perception.factors.push_back(std::move(f));
  }
  const std::vector<std::size_t> o(bins.begin(), bins.end());
  // the perception model holds a single action, so it is addressed as action 0
  out.result = brain_step(perception, belief_, std::size_t{0}, o, opts, &planning, step_);
  return out;
}

Categorical BrainAgent::action_distribution(const KpmObservation& obs) const {
  return run_step(obs).result.posterior.q_a;
}

std::size_t BrainAgent::act(const KpmObservation& obs) {
  StepOutput out = run_step(obs);
  BrainStepResult& r = out.result;
  if (training_ && !b_counts_.empty() && !out.likelihoods.empty()) {
    // expected transition counts from the two-slice posterior
    // q(s, s') ∝ q_prev(s) B(s'|s) lik(s')
    const auto bs = transitions();
    for (std::size_t k = 0; k < kNumSlices; ++k) {
      Matrix joint(kNumDemandLevels, kNumDemandLevels);
      double total = 0.0;
      for (std::size_t sn = 0; sn < kNumDemandLevels; ++sn)
        for (std::size_t s = 0; s < kNumDemandLevels; ++s)
          total += joint(sn, s) = out.likelihoods[k][sn] * bs[k](sn, s) * belief_[k][s];
      if (!(total > 0.0)) continue;
      const double surprise = -std::log(total);
      double& fast = surprise_fast_[k];
      double& slow = surprise_slow_[k];
      if (slow < 0.0) fast = slow = surprise;
      fast = config_.surprise_fast_decay * fast + (1.0 - config_.surprise_fast_decay) * surprise;
      slow = config_.surprise_slow_decay * slow + (1.0 - config_.surprise_slow_decay) * surprise;
      const bool forget =
          !config_.forgetting_surprise_margin || fast > slow + *config_.forgetting_surprise_margin;
      const double prior = *config_.learn_transitions;
      if (forget)
        for (std::size_t sn = 0; sn < kNumDemandLevels; ++sn)
          for (std::size_t s = 0; s < kNumDemandLevels; ++s)
            b_counts_[k](sn, s) = prior + config_.transition_forgetting * (b_counts_[k](sn, s) - prior);
      for (std::size_t sn = 0; sn < kNumDemandLevels; ++sn)
        for (std::size_t s = 0; s < kNumDemandLevels; ++s)
          b_counts_[k](sn, s) += config_.transition_learning_rate * joint(sn, s) / total;
    }
  }
  r.record.probe = builder_.catalog()[r.action].probe_slice.has_value();
  belief_ = r.belief;
  last_action_ = r.action;
  last_backlog_ = obs.buffer;
  last_ = std::move(r);
  ++step_;
  return last_.action;
}

std::optional<double> BrainAgent::learn(const Transition&) {
  if (step_ == 0) return std::nullopt;
  return last_.vfe;
}

}  // namespace brain
