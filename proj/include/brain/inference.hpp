#pragma once

// Active-inference engine: exact Bayesian filtering over categorical
// beliefs, variational free energy, one-step expected free energy split
// into preference divergence (extrinsic) and information gain (epistemic),
// and action selection by argmin.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "brain/categorical.hpp"
#include "brain/genmodel.hpp"

namespace brain {

/// Raised when the observation has zero probability under every state the
/// predicted prior supports.
class ZeroEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyCatalog : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// posterior ∝ lik ⊙ prior_pred. For categorical beliefs this is the exact
/// minimizer of the variational free energy.
Categorical bayes_update(const Categorical& prior_pred, std::span<const double> lik);

/// E_q[-ln lik - ln prior_pred] - H[q]  (= -ELBO).
double vfe(const Categorical& q, std::span<const double> lik, const Categorical& prior_pred);

/// Q(o_{t+1} | u) = A(u) B(u) q.
Categorical predict_obs(const GenerativeModel& model, const Categorical& belief, std::size_t u);

/// D_KL(pred || P_pref).
double kl_pref(const Categorical& pred, const PreferenceModel& c);

/// E_pred[-ln P_pref(o)] = kl_pref + H[pred].
double expected_surprisal(const Categorical& pred, const PreferenceModel& c);

/// I(s_{t+1}; o_{t+1} | u) = H[Q(s'|u)] - E_{Q(o|u)} H[Q(s'|u,o)], by exact
/// enumeration over observations.
double info_gain(const GenerativeModel& model, const Categorical& belief, std::size_t u);

enum class ExtrinsicForm {
  kPreferenceKl,       // KL(Q(o|u) || P_pref), the canonical form
  kExpectedSurprisal,  // E[-ln P_pref(o)], exposed for comparison
};

struct EfeBreakdown {
  std::size_t action = 0;
  double g = 0.0;
  double extrinsic = 0.0;
  double epistemic = 0.0;
  /// Part of `epistemic` that is information about transition parameters;
  /// zero unless the model carries Dirichlet transition counts.
  double parameter_gain = 0.0;

  friend bool operator==(const EfeBreakdown&, const EfeBreakdown&) = default;
};

/// KL(Dir(p) || Dir(q)).
double dirichlet_kl(std::span<const double> p, std::span<const double> q);

/// Expected KL between the updated and current Dirichlet transition counts
/// after the next observation, i.e. the information the step is expected to
/// carry about B. The update adds the two-slice posterior
/// q(s, s' | o) ∝ A(o|s') B(s'|s) q(s), with B the counts' mean.
double transition_info_gain(const Matrix& counts, const Matrix& a, const Categorical& belief);

/// g = extrinsic - epistemic, one-step horizon. Epistemic is the state
/// information gain, plus transition_info_gain when the model has counts.
EfeBreakdown efe(const GenerativeModel& model, const Categorical& belief, std::size_t u,
                 ExtrinsicForm form = ExtrinsicForm::kPreferenceKl);

struct ActionPosterior {
  Categorical q_a;
  double precision = 0.0;
};

/// softmax(-precision * g) with max-subtraction.
ActionPosterior action_posterior(std::span<const double> g, double precision);

/// argmin g; ties go to the lowest index.
std::size_t select_action(std::span<const double> g);

// --- factored models -------------------------------------------------------

using FactoredBelief = std::vector<Categorical>;

struct FactoredEfe {
  EfeBreakdown total;
  std::vector<EfeBreakdown> per_factor;
};

/// Sum of per-factor breakdowns. Equal to the breakdown on the joint model
/// because factors are independent given the action.
FactoredEfe efe(const FactoredModel& model, const FactoredBelief& belief, std::size_t u,
                ExtrinsicForm form = ExtrinsicForm::kPreferenceKl);

FactoredBelief initial_belief(const FactoredModel& model);

struct BrainOptions {
  double precision = 4.0;
  ExtrinsicForm form = ExtrinsicForm::kPreferenceKl;
  /// When set, a zero-evidence observation leaves the belief at the
  /// predicted prior instead of throwing.
  bool fallback_on_zero_evidence = false;
};

/// Per-step explanation: posterior belief, the EFE of every catalog action,
/// the per-factor split for the chosen action, and the chosen action.
struct ExplanationRecord {
  std::int64_t step = 0;
  FactoredBelief belief;
  std::vector<EfeBreakdown> efe;
  std::vector<EfeBreakdown> chosen_per_factor;
  std::size_t chosen = 0;
  double posterior_entropy = 0.0;
  double vfe = 0.0;
  bool probe = false;
  bool zero_evidence = false;

  friend bool operator==(const ExplanationRecord&, const ExplanationRecord&) = default;
};

struct BrainStepResult {
  FactoredBelief belief;
  std::vector<EfeBreakdown> efe;
  std::size_t action = 0;
  ActionPosterior posterior;
  double vfe = 0.0;
  ExplanationRecord record;
};

/// One pass of the control loop:
///   1. prior_pred = B(last_action) belief (belief itself on the first step)
///   2. posterior  = bayes_update(prior_pred, A(last_action)[o])
///   3. efe for every action on `planning` (defaults to `model`)
///   4. argmin, action posterior, explanation record.
/// `obs` holds one observation index per factor; empty means nothing has been
/// observed yet and the belief is only propagated. Pure function of its inputs.
BrainStepResult brain_step(const FactoredModel& model, const FactoredBelief& belief,
                           std::optional<std::size_t> last_action, std::span<const std::size_t> obs,
                           const BrainOptions& options = {}, const FactoredModel* planning = nullptr,
                           std::int64_t step = 0);

}  // namespace brain
