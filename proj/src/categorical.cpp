#include "brain/categorical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace brain {

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

bool is_distribution(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
  if (!is_distribution(probs_)) {
    throw std::invalid_argument("Categorical: entries must be nonnegative and sum to 1");
  }
}

Categorical Categorical::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Categorical::uniform: empty support");
  return Categorical(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Categorical Categorical::one_hot(std::size_t n, std::size_t index) {
  if (index >= n) throw std::out_of_range("Categorical::one_hot: index out of range");
  std::vector<double> p(n, 0.0);
  p[index] = 1.0;
  return Categorical(std::move(p));
}

Categorical Categorical::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("Categorical::normalized: weights must be finite and nonnegative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("Categorical::normalized: zero total weight");
  for (double& w : weights) w /= sum;
  Categorical c;
  c.probs_ = std::move(weights);
  return c;
}

std::size_t Categorical::argmax() const {
  return static_cast<std::size_t>(std::distance(
      probs_.begin(), std::max_element(probs_.begin(), probs_.end())));
}

double Categorical::entropy() const { return brain::entropy(probs_); }

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * safe_log(v);
  }
  return h;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * (safe_log(p[i]) - safe_log(q[i]));
  }
  return kl;
}

}  // namespace brain
