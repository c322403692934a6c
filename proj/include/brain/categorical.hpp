#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace brain {

/// Floor applied before every logarithm so that zero-probability entries
/// contribute a large but finite surprisal.
inline constexpr double kLogFloor = 1e-12;

/// Tolerance for "sums to one" checks.
inline constexpr double kNormTolerance = 1e-9;

double safe_log(double p);

bool is_distribution(std::span<const double> p, double tol = kNormTolerance);

/// A normalized probability vector. Construction validates; use
/// `normalized()` to build one from unnormalized weights.
class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(std::vector<double> probs);

  static Categorical uniform(std::size_t n);
  static Categorical one_hot(std::size_t n, std::size_t index);
  /// Throws std::invalid_argument if the weights are negative or sum to zero.
  static Categorical normalized(std::vector<double> weights);

  std::size_t size() const { return probs_.size(); }
  bool empty() const { return probs_.empty(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vector() const { return probs_; }

  std::size_t argmax() const;
  double entropy() const;

  friend bool operator==(const Categorical&, const Categorical&) = default;

 private:
  std::vector<double> probs_;
};

/// Shannon entropy in nats, with floored logs.
double entropy(std::span<const double> p);

/// D_KL(p || q) in nats, with floored logs on both sides.
double kl_divergence(std::span<const double> p, std::span<const double> q);

}  // namespace brain
