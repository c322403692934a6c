#pragma once

// Conversions between library types and the oracles' plain vectors, plus
// random model generators shared by the unit and acceptance tests.

#include <random>
#include <vector>

#include "brain/genmodel.hpp"
#include "oracles.hpp"

namespace support {

inline oracle::Mat to_mat(const brain::Matrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

inline brain::Matrix from_mat(const oracle::Mat& m) {
  brain::Matrix out(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c) out(r, c) = m[r][c];
  return out;
}

struct RandomModel {
  brain::GenerativeModel model;
  std::vector<oracle::Mat> a, b;
  oracle::Vec log_pref;
};

/// N states, M observations, U actions, per-action A and B, random preferences.
inline RandomModel random_model(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t u,
                                bool sparse = false) {
  RandomModel r;
  for (std::size_t k = 0; k < u; ++k) {
    r.a.push_back(oracle::random_columns(rng, m, n, sparse));
    r.b.push_back(oracle::random_columns(rng, n, n, sparse));
    r.model.a.matrices.push_back(from_mat(r.a.back()));
    r.model.b.matrices.push_back(from_mat(r.b.back()));
  }
  r.model.c = brain::PreferenceModel::from_probs(oracle::random_simplex(rng, m));
  r.log_pref = r.model.c.log_probs;
  r.model.d = brain::Categorical::uniform(n);
  return r;
}

}  // namespace support
