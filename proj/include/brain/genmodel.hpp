#pragma once

// Discrete generative model: observation likelihood A, action-conditioned
// transitions B, log-preferences C over observations, and prior D.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "brain/categorical.hpp"
#include "brain/env.hpp"

namespace brain {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t c) const;
  const std::vector<double>& data() const { return data_; }

  std::vector<double> operator*(std::span<const double> v) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Kronecker product, left operand most significant.
Matrix kron(const Matrix& a, const Matrix& b);

/// A(o, s) = P(o | s). One matrix shared by all actions, or one per action.
struct ObservationModel {
  std::vector<Matrix> matrices;
  const Matrix& for_action(std::size_t u) const { return matrices.size() == 1 ? matrices[0] : matrices.at(u); }
};

/// B(s', s) = P(s' | s, u). One matrix shared by all actions, or one per action.
struct TransitionModel {
  std::vector<Matrix> matrices;
  const Matrix& for_action(std::size_t u) const { return matrices.size() == 1 ? matrices[0] : matrices.at(u); }
};

/// ln P_pref(o). Built from probabilities floored at `floor` and renormalized.
struct PreferenceModel {
  std::vector<double> log_probs;

  static constexpr double kDefaultFloor = 1e-6;
  static PreferenceModel from_probs(std::span<const double> probs, double floor = kDefaultFloor);
  std::vector<double> probs() const;
};

/// Dirichlet pseudo-counts backing A and B; present only when learning is on.
struct DirichletCounts {
  std::vector<Matrix> a;
  std::vector<Matrix> b;
};

struct GenerativeModel {
  ObservationModel a;
  TransitionModel b;
  PreferenceModel c;
  Categorical d;
  std::optional<DirichletCounts> counts;

  std::size_t num_states() const { return d.size(); }
  std::size_t num_observations() const { return a.matrices.empty() ? 0 : a.matrices.front().rows(); }
  std::size_t num_actions() const;
};

struct Violation {
  std::string where;
  std::string what;
};

/// Exhaustive list of broken stochasticity and dimension invariants.
std::vector<Violation> validate(const GenerativeModel& model);

class IndexOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Row A[o, :] of the matrix used under action u.
std::vector<double> likelihood(const GenerativeModel& model, std::size_t o, std::size_t u = 0);

/// B(u) * belief, renormalized.
Categorical predict(const GenerativeModel& model, const Categorical& belief, std::size_t u);

/// Turns on count-based adaptation. Each column gets `prior_mass` pseudo-counts
/// per entry when uniform; in general counts = prior_mass * rows * column.
GenerativeModel with_dirichlet_counts(GenerativeModel model, double prior_mass);

struct Emission {
  std::size_t state = 0;
  std::size_t observation = 0;
  std::size_t action = 0;
  double weight = 1.0;
};

struct StateTransition {
  std::size_t state = 0;
  std::size_t action = 0;
  std::size_t next_state = 0;
  double weight = 1.0;
};

/// Adds `weight` pseudo-counts and renormalizes the affected column.
GenerativeModel update_counts(const GenerativeModel& model, const Emission& e);
GenerativeModel update_counts(const GenerativeModel& model, const StateTransition& t);

/// Soft transition update from consecutive beliefs: counts(s', s) += q_next(s') q_prev(s).
GenerativeModel update_counts(const GenerativeModel& model, const Categorical& prev, std::size_t u,
                              const Categorical& next);

/// Per-slice quantizer mapping each slice's primary KPM (eMBB throughput,
/// URLLC buffer, mMTC TB count) to a bin. A value v falls in bin
/// i = #{edges <= v}.
struct ObsBinning {
  PerSlice<std::vector<double>> edges;

  static ObsBinning defaults();

  std::size_t num_bins(SliceKind s) const { return edges[index(s)].size() + 1; }
  std::size_t bin(SliceKind s, double value) const;
  PerSlice<std::size_t> bins(const KpmObservation& obs) const;
  /// Mixed-radix index, eMBB most significant.
  std::size_t joint_index(const KpmObservation& obs) const;
  std::size_t num_joint() const;
  std::vector<std::string> violations() const;
};

double primary_kpm(const KpmObservation& obs, SliceKind s);

/// Independent per-factor models sharing one action index space.
struct FactoredModel {
  std::vector<GenerativeModel> factors;

  std::size_t num_actions() const;
};

/// Equivalent single model over the product space (first factor most
/// significant). Exponential in the factor count; meant for small models.
GenerativeModel joint_model(const FactoredModel& model);

/// 3-level demand model: two actions, 0 observes through a confusion matrix
/// with `accuracy` on the diagonal, 1 is a Check probe with identity A.
/// B is the transpose of the row-stochastic demand matrix for both.
GenerativeModel default_demand_model(const DemandMatrix& demand, double accuracy = 0.8,
                                     std::span<const double> preference = {});

}  // namespace brain
