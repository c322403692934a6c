#include "brain/inference.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace brain {

Categorical bayes_update(const Categorical& prior_pred, std::span<const double> lik) {
  if (lik.size() != prior_pred.size()) throw std::invalid_argument("bayes_update: size mismatch");
  std::vector<double> post(lik.size());
  double evidence = 0.0;
  for (std::size_t s = 0; s < lik.size(); ++s) {
    if (!(lik[s] >= 0.0) || !std::isfinite(lik[s])) throw std::invalid_argument("bayes_update: negative likelihood");
    post[s] = lik[s] * prior_pred[s];
    evidence += post[s];
  }
  if (!(evidence > 0.0)) throw ZeroEvidence("observation has zero probability under the predicted prior");
  for (double& p : post) p /= evidence;
  return Categorical::normalized(std::move(post));
}

double vfe(const Categorical& q, std::span<const double> lik, const Categorical& prior_pred) {
  if (lik.size() != q.size() || prior_pred.size() != q.size()) throw std::invalid_argument("vfe: size mismatch");
  double f = 0.0;
  for (std::size_t s = 0; s < q.size(); ++s) {
    if (q[s] <= 0.0) continue;
    f += q[s] * (safe_log(q[s]) - safe_log(lik[s]) - safe_log(prior_pred[s]));
  }
  return f;
}

Categorical predict_obs(const GenerativeModel& model, const Categorical& belief, std::size_t u) {
  const Categorical next = predict(model, belief, u);
  return Categorical::normalized(model.a.for_action(u) * next.probs());
}

double kl_pref(const Categorical& pred, const PreferenceModel& c) {
  if (pred.size() != c.log_probs.size()) throw std::invalid_argument("kl_pref: size mismatch");
  double kl = 0.0;
  for (std::size_t o = 0; o < pred.size(); ++o) {
    if (pred[o] > 0.0) kl += pred[o] * (safe_log(pred[o]) - c.log_probs[o]);
  }
  return std::max(kl, 0.0);
}

double expected_surprisal(const Categorical& pred, const PreferenceModel& c) {
  if (pred.size() != c.log_probs.size()) throw std::invalid_argument("expected_surprisal: size mismatch");
  double s = 0.0;
  for (std::size_t o = 0; o < pred.size(); ++o) s -= pred[o] * c.log_probs[o];
  return s;
}

namespace {

double info_gain_from(const Matrix& a, std::span<const double> state_pred) {
  const double prior_entropy = entropy(state_pred);
  double expected_posterior_entropy = 0.0;
  std::vector<double> joint(state_pred.size());
  for (std::size_t o = 0; o < a.rows(); ++o) {
    double p_o = 0.0;
    for (std::size_t s = 0; s < state_pred.size(); ++s) {
      joint[s] = a(o, s) * state_pred[s];
      p_o += joint[s];
    }
    if (p_o <= 0.0) continue;
    double h = 0.0;
    for (double j : joint) {
      if (j > 0.0) {
        const double post = j / p_o;
        h -= post * safe_log(post);
      }
    }
    expected_posterior_entropy += p_o * h;
  }
  return std::max(prior_entropy - expected_posterior_entropy, 0.0);
}

}  // namespace

double info_gain(const GenerativeModel& model, const Categorical& belief, std::size_t u) {
  const Categorical next = predict(model, belief, u);
  return info_gain_from(model.a.for_action(u), next.probs());
}

double dirichlet_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("dirichlet_kl: size mismatch");
  double p0 = 0.0, q0 = 0.0, out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0 && q[i] > 0.0)) throw std::invalid_argument("dirichlet_kl: parameters must be positive");
    p0 += p[i];
    q0 += q[i];
  }
  out = std::lgamma(p0) - std::lgamma(q0);
  const double psi0 = boost::math::digamma(p0);
  for (std::size_t i = 0; i < p.size(); ++i)
    out += std::lgamma(q[i]) - std::lgamma(p[i]) + (p[i] - q[i]) * (boost::math::digamma(p[i]) - psi0);
  return std::max(0.0, out);
}

double transition_info_gain(const Matrix& counts, const Matrix& a, const Categorical& belief) {
  const std::size_t n = belief.size();
  if (counts.rows() != n || counts.cols() != n || a.cols() != n)
    throw std::invalid_argument("transition_info_gain: dimension mismatch");
  Matrix mean(n, n);
  for (std::size_t s = 0; s < n; ++s) {
    double col = 0.0;
    for (std::size_t sn = 0; sn < n; ++sn) col += counts(sn, s);
    for (std::size_t sn = 0; sn < n; ++sn) mean(sn, s) = counts(sn, s) / col;
  }
  double gain = 0.0;
  std::vector<double> prior(n), post(n);
  for (std::size_t o = 0; o < a.rows(); ++o) {
    // q(s, s' | o) ∝ A(o|s') B(s'|s) q(s)
    Matrix joint(n, n);
    double evidence = 0.0;
    for (std::size_t sn = 0; sn < n; ++sn)
      for (std::size_t s = 0; s < n; ++s) evidence += joint(sn, s) = a(o, sn) * mean(sn, s) * belief[s];
    if (!(evidence > 0.0)) continue;
    double kl = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t sn = 0; sn < n; ++sn) {
        prior[sn] = counts(sn, s);
        post[sn] = counts(sn, s) + joint(sn, s) / evidence;
      }
      kl += dirichlet_kl(post, prior);
    }
    gain += evidence * kl;
  }
  return gain;
}

EfeBreakdown efe(const GenerativeModel& model, const Categorical& belief, std::size_t u, ExtrinsicForm form) {
  const Categorical next = predict(model, belief, u);
  const Matrix& a = model.a.for_action(u);
  const Categorical pred = Categorical::normalized(a * next.probs());
  EfeBreakdown b;
  b.action = u;
  b.extrinsic = form == ExtrinsicForm::kPreferenceKl ? kl_pref(pred, model.c) : expected_surprisal(pred, model.c);
  b.epistemic = info_gain_from(a, next.probs());
  if (model.counts && !model.counts->b.empty()) {
    const auto& counts = model.counts->b.size() == 1 ? model.counts->b.front() : model.counts->b.at(u);
    b.parameter_gain = transition_info_gain(counts, a, belief);
    b.epistemic += b.parameter_gain;
  }
  b.g = b.extrinsic - b.epistemic;
  return b;
}

ActionPosterior action_posterior(std::span<const double> g, double precision) {
  if (g.empty()) throw EmptyCatalog("action_posterior: empty action set");
  if (!(precision >= 0.0)) throw std::invalid_argument("action_posterior: precision must be >= 0");
  const double gmin = *std::min_element(g.begin(), g.end());
  std::vector<double> w(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = std::exp(-precision * (g[i] - gmin));
  return {Categorical::normalized(std::move(w)), precision};
}

std::size_t select_action(std::span<const double> g) {
  if (g.empty()) throw EmptyCatalog("select_action: empty action set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (g[i] < g[best]) best = i;
  }
  return best;
}

FactoredEfe efe(const FactoredModel& model, const FactoredBelief& belief, std::size_t u, ExtrinsicForm form) {
  if (belief.size() != model.factors.size()) throw std::invalid_argument("efe: belief/factor count mismatch");
  FactoredEfe out;
  out.total.action = u;
  out.per_factor.reserve(model.factors.size());
  for (std::size_t k = 0; k < model.factors.size(); ++k) {
    const auto b = efe(model.factors[k], belief[k], u, form);
    out.total.extrinsic += b.extrinsic;
    out.total.epistemic += b.epistemic;
    out.total.parameter_gain += b.parameter_gain;
    out.per_factor.push_back(b);
  }
  out.total.g = out.total.extrinsic - out.total.epistemic;
  return out;
}

FactoredBelief initial_belief(const FactoredModel& model) {
  FactoredBelief b;
  b.reserve(model.factors.size());
  for (const auto& f : model.factors) b.push_back(f.d);
  return b;
}

BrainStepResult brain_step(const FactoredModel& model, const FactoredBelief& belief,
                           std::optional<std::size_t> last_action, std::span<const std::size_t> obs,
                           const BrainOptions& options, const FactoredModel* planning, std::int64_t step) {
  const std::size_t nf = model.factors.size();
  if (belief.size() != nf || (!obs.empty() && obs.size() != nf))
    throw std::invalid_argument("brain_step: factor count mismatch");
  const FactoredModel& plan_model = planning ? *planning : model;
  const std::size_t obs_action = last_action.value_or(0);

  BrainStepResult r;
  r.belief.reserve(nf);
  bool zero_evidence = false;
  for (std::size_t k = 0; k < nf; ++k) {
    const auto& f = model.factors[k];
    const Categorical prior_pred = last_action ? predict(f, belief[k], *last_action) : belief[k];
    if (obs.empty()) {
      r.belief.push_back(prior_pred);
      continue;
    }
    const auto lik = likelihood(f, obs[k], obs_action);
    try {
      Categorical post = bayes_update(prior_pred, lik);
      r.vfe += vfe(post, lik, prior_pred);
      r.belief.push_back(std::move(post));
    } catch (const ZeroEvidence&) {
      if (!options.fallback_on_zero_evidence) throw;
      zero_evidence = true;
      r.belief.push_back(prior_pred);
    }
  }

  const std::size_t num_actions = plan_model.num_actions();
  if (num_actions == 0) throw EmptyCatalog("brain_step: empty action set");
  r.efe.reserve(num_actions);
  std::vector<double> g(num_actions);
  std::vector<FactoredEfe> detail;
  detail.reserve(num_actions);
  // Catalog entries often share a factor's matrices; score each distinct
  // (A, B, counts) combination once per factor.
  using Key = std::tuple<std::vector<double>, std::size_t, std::size_t>;
  std::vector<std::map<Key, EfeBreakdown>> cache(plan_model.factors.size());
  for (std::size_t u = 0; u < num_actions; ++u) {
    FactoredEfe fe;
    fe.total.action = u;
    for (std::size_t k = 0; k < plan_model.factors.size(); ++k) {
      const auto& f = plan_model.factors[k];
      const std::size_t bi = f.b.matrices.size() == 1 ? 0 : u;
      const std::size_t ci = f.counts && f.counts->b.size() > 1 ? u : 0;
      Key key{f.a.for_action(u).data(), bi, ci};
      auto it = cache[k].find(key);
      if (it == cache[k].end()) it = cache[k].emplace(std::move(key), efe(f, r.belief[k], u, options.form)).first;
      EfeBreakdown b = it->second;
      b.action = u;
      fe.total.extrinsic += b.extrinsic;
      fe.total.epistemic += b.epistemic;
      fe.total.parameter_gain += b.parameter_gain;
      fe.per_factor.push_back(b);
    }
    fe.total.g = fe.total.extrinsic - fe.total.epistemic;
    r.efe.push_back(fe.total);
    g[u] = fe.total.g;
    detail.push_back(std::move(fe));
  }
  r.action = select_action(g);
  r.posterior = action_posterior(g, options.precision);

  auto& rec = r.record;
  rec.step = step;
  rec.belief = r.belief;
  rec.efe = r.efe;
  rec.chosen_per_factor = detail[r.action].per_factor;
  rec.chosen = r.action;
  rec.posterior_entropy = r.posterior.q_a.entropy();
  rec.vfe = r.vfe;
  rec.zero_evidence = zero_evidence;
  return r;
}

}  // namespace brain
