#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "brain/inference.hpp"
#include "support.hpp"

using namespace brain;

namespace {

GenerativeModel default3() { return default_demand_model(ScenarioConfig::defaults().demand_transition[0]); }

// digamma by central difference of lgamma, independent of the library's
double digamma_fd(double x) {
  const double h = 1e-5 * std::max(1.0, x);
  return (std::lgamma(x + h) - std::lgamma(x - h)) / (2 * h);
}

double dirichlet_kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double p0 = 0, q0 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) p0 += p[i], q0 += q[i];
  double out = std::lgamma(p0) - std::lgamma(q0);
  for (std::size_t i = 0; i < p.size(); ++i)
    out += std::lgamma(q[i]) - std::lgamma(p[i]) + (p[i] - q[i]) * (digamma_fd(p[i]) - digamma_fd(p0));
  return out;
}

}  // namespace

TEST_CASE("bayes_update") {
  const auto p = bayes_update(Categorical::uniform(3), std::vector<double>{0.9, 0.05, 0.05});
  CHECK(p[0] == doctest::Approx(0.9));
  CHECK(p[1] == doctest::Approx(0.05));

  const auto h = bayes_update(Categorical({0.2, 0.5, 0.3}), std::vector<double>{0, 1, 0});
  CHECK(h == Categorical::one_hot(3, 1));

  const auto d = bayes_update(Categorical({0.5, 0.5}), std::vector<double>{0.8, 0.1});
  const auto o = oracle::posterior({0.5, 0.5}, {0.8, 0.1});
  CHECK(d[0] == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
  CHECK(d[0] == doctest::Approx(o[0]).epsilon(1e-12));

  CHECK_THROWS_AS(bayes_update(Categorical({1, 0}), std::vector<double>{0, 1}), ZeroEvidence);
}

TEST_CASE("vfe") {
  const Categorical prior({0.5, 0.5});
  const std::vector<double> lik = {0.8, 0.1};
  const auto post = bayes_update(prior, lik);
  CHECK(vfe(post, lik, prior) == doctest::Approx(-std::log(0.45)).epsilon(1e-12));
  CHECK(vfe(post, lik, prior) == doctest::Approx(0.7985).epsilon(1e-4));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const Categorical q(oracle::random_simplex(rng, 2));
    CHECK(vfe(q, lik, prior) >= vfe(post, lik, prior) - 1e-12);
  }
}

TEST_CASE("predict_obs") {
  GenerativeModel id;
  id.a.matrices = {Matrix::identity(3)};
  id.b.matrices = {Matrix::identity(3)};
  id.c = PreferenceModel::from_probs(std::vector<double>{0.2, 0.3, 0.5});
  id.d = Categorical::uniform(3);
  const Categorical b({0.1, 0.6, 0.3});
  CHECK(predict_obs(id, b, 0) == b);

  const auto m = default3();
  const auto p = predict_obs(m, Categorical::one_hot(3, 0), 0);
  const auto a = support::to_mat(m.a.matrices[0]), bb = support::to_mat(m.b.matrices[0]);
  for (std::size_t o = 0; o < 3; ++o) {
    double expect = 0;
    for (std::size_t s = 0; s < 3; ++s) expect += a[o][s] * bb[s][0];
    CHECK(p[o] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("kl_pref") {
  const auto c = PreferenceModel::from_probs(std::vector<double>{0.9, 0.1}, 0.0);
  CHECK(kl_pref(Categorical({0.9, 0.1}), c) == doctest::Approx(0.0));
  CHECK(kl_pref(Categorical({1, 0}), PreferenceModel::from_probs(std::vector<double>{0.5, 0.5})) ==
        doctest::Approx(std::log(2.0)));
  const double expect = 0.7 * std::log(7.0 / 9.0) + 0.3 * std::log(3.0);
  CHECK(kl_pref(Categorical({0.7, 0.3}), c) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.1537).epsilon(1e-3));
}

TEST_CASE("expected surprisal = KL + predictive entropy") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto r = support::random_model(rng, 3, 4, 2);
    const Categorical b(oracle::random_simplex(rng, 3));
    const auto kl = efe(r.model, b, 1, ExtrinsicForm::kPreferenceKl);
    const auto su = efe(r.model, b, 1, ExtrinsicForm::kExpectedSurprisal);
    const auto pred = predict_obs(r.model, b, 1);
    CHECK(su.extrinsic == doctest::Approx(kl.extrinsic + pred.entropy()).epsilon(1e-12));
    CHECK(su.epistemic == kl.epistemic);
  }
}

TEST_CASE("info_gain") {
  auto m = default3();
  m.a.matrices = {Matrix(3, 3, 1.0 / 3.0)};
  CHECK(info_gain(m, Categorical({0.2, 0.3, 0.5}), 0) == doctest::Approx(0.0));

  auto id = default3();
  id.a.matrices = {Matrix::identity(3)};
  const Categorical b({0.2, 0.3, 0.5});
  CHECK(info_gain(id, b, 0) == doctest::Approx(predict(id, b, 0).entropy()).epsilon(1e-12));

  // 0.8/0.1 confusion, uniform predicted state: MI from the full P(s, o) table
  const auto d = default3();
  oracle::Mat joint(3, oracle::Vec(3));
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t o = 0; o < 3; ++o) joint[s][o] = d.a.matrices[0](o, s) / 3.0;
  CHECK(info_gain(d, Categorical::uniform(3), 0) == doctest::Approx(oracle::mutual_information(joint)).epsilon(1e-12));
}

TEST_CASE("efe matches the brute-force oracle on random models") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng() % 4, m = 1 + rng() % 4, u = 1 + rng() % 4;
    const auto r = support::random_model(rng, n, m, u, i % 2 == 0);
    const Categorical b(oracle::random_simplex(rng, n, true));
    for (std::size_t a = 0; a < u; ++a) {
      const auto got = efe(r.model, b, a);
      const auto want = oracle::efe(r.a[a], r.b[a], r.log_pref, b.vector());
      CHECK(std::abs(got.extrinsic - want.extrinsic) < 1e-9);
      CHECK(std::abs(got.epistemic - want.epistemic) < 1e-9);
      CHECK(std::abs(got.g - want.g) < 1e-9);
      CHECK(got.g == got.extrinsic - got.epistemic);
    }
  }
}

TEST_CASE("efe: uninformative model at the preferred outcome is zero") {
  GenerativeModel m;
  m.a.matrices = {Matrix(2, 2, 0.5)};
  m.b.matrices = {Matrix::identity(2)};
  m.c = PreferenceModel::from_probs(std::vector<double>{0.5, 0.5});
  m.d = Categorical::uniform(2);
  const auto e = efe(m, Categorical({0.3, 0.7}), 0);
  CHECK(e.g == doctest::Approx(0.0));
  CHECK(e.extrinsic == doctest::Approx(0.0));
  CHECK(e.epistemic == doctest::Approx(0.0));
}

TEST_CASE("a Check probe buys strictly more epistemic value") {
  const auto m = default3();  // action 0: confusion A, action 1: identity A
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Categorical b(oracle::random_simplex(rng, 3));
    if (predict(m, b, 0).entropy() <= 1e-9) continue;
    CHECK(efe(m, b, 1).epistemic > efe(m, b, 0).epistemic);
  }
}

TEST_CASE("Dirichlet KL and transition information gain") {
  const std::vector<double> p = {2.5, 1.2, 0.7}, q = {1.0, 1.0, 1.0};
  CHECK(dirichlet_kl(p, q) == doctest::Approx(dirichlet_kl_oracle(p, q)).epsilon(1e-6));
  CHECK(dirichlet_kl(q, q) == 0.0);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 2 + rng() % 2;
    Matrix counts(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) counts(r, c) = 0.5 + 0.75 * static_cast<double>(rng() % 5);
    const auto a = support::from_mat(oracle::random_columns(rng, n, n));
    const Categorical b(oracle::random_simplex(rng, n));
    // expectation over o of Σ_s KL(Dir(counts_s + q(s, ·|o)) || Dir(counts_s))
    double want = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
      oracle::Mat joint(n, oracle::Vec(n));
      double ev = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        double col = 0.0;
        for (std::size_t sn = 0; sn < n; ++sn) col += counts(sn, s);
        for (std::size_t sn = 0; sn < n; ++sn) ev += joint[s][sn] = a(o, sn) * counts(sn, s) / col * b[s];
      }
      if (ev <= 0) continue;
      for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> pr(n), po(n);
        for (std::size_t sn = 0; sn < n; ++sn) {
          pr[sn] = counts(sn, s);
          po[sn] = counts(sn, s) + joint[s][sn] / ev;
        }
        want += ev * dirichlet_kl_oracle(po, pr);
      }
    }
    const double got = transition_info_gain(counts, a, b);
    CHECK(got >= 0.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("action_posterior") {
  const std::vector<double> g = {0.4, -0.2, 1.3};
  const auto flat = action_posterior(g, 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(flat.q_a[i] == doctest::Approx(1.0 / 3.0));
  const auto eq = action_posterior(std::vector<double>{2, 2, 2, 2}, 7.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(eq.q_a[i] == doctest::Approx(0.25));
  CHECK(action_posterior(g, 1e6).q_a[1] >= 1 - 1e-6);
  // softmax(-γ g) written out
  double z = 0;
  for (double x : g) z += std::exp(-4 * x);
  const auto p4 = action_posterior(g, 4.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p4.q_a[i] == doctest::Approx(std::exp(-4 * g[i]) / z).epsilon(1e-12));
  CHECK(is_distribution(action_posterior(std::vector<double>{1e300, -1e300}, 4.0).q_a.probs()));
}

TEST_CASE("select_action") {
  CHECK(select_action(std::vector<double>{0.5, 0.2, 0.9}) == 1);
  CHECK(select_action(std::vector<double>{0.3, 0.3}) == 0);
  CHECK_THROWS_AS(select_action(std::vector<double>{}), EmptyCatalog);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> g(6);
    for (auto& x : g) x = z(rng);
    const auto a = select_action(g);
    auto shifted = g, scaled = g;
    const double c = z(rng), k = 0.1 + std::abs(z(rng));
    for (auto& x : shifted) x += c;
    for (auto& x : scaled) x *= k;
    CHECK(select_action(shifted) == a);
    CHECK(select_action(scaled) == a);
  }
}

TEST_CASE("brain_step: identity model collapses and follows preferences") {
  GenerativeModel m;
  m.a.matrices = {Matrix::identity(3)};
  // action u moves every state to state u
  for (std::size_t u = 0; u < 3; ++u) {
    Matrix b(3, 3);
    for (std::size_t s = 0; s < 3; ++s) b(u, s) = 1.0;
    m.b.matrices.push_back(b);
  }
  m.c = PreferenceModel::from_probs(std::vector<double>{0.1, 0.7, 0.2});
  m.d = Categorical::uniform(3);
  const FactoredModel f{{m}};
  const FactoredBelief prior = {Categorical({0.2, 0.5, 0.3})};
  const std::vector<std::size_t> obs = {2};
  const auto r = brain_step(f, prior, std::nullopt, obs);
  CHECK(r.belief[0] == Categorical::one_hot(3, 2));
  std::size_t best = 0;
  for (std::size_t u = 0; u < 3; ++u) {
    CHECK(r.efe[u].epistemic == doctest::Approx(0.0));
    if (r.efe[u].extrinsic < r.efe[best].extrinsic) best = u;
  }
  CHECK(r.action == best);
  CHECK(r.action == 1);

  const auto again = brain_step(f, prior, std::nullopt, obs);
  CHECK(again.record == r.record);
  CHECK(again.action == r.action);
}

TEST_CASE("brain_step follows the forward filter on the default model") {
  const auto m = default3();
  const FactoredModel f{{m}};
  std::mt19937_64 rng(12);
  std::vector<std::size_t> obs;
  for (int t = 0; t < 10; ++t) obs.push_back(rng() % 3);
  const auto want = oracle::forward_filter(support::to_mat(m.a.matrices[0]), support::to_mat(m.b.matrices[0]),
                                           m.d.vector(), obs);
  FactoredBelief b = {m.d};
  std::optional<std::size_t> last;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    const std::vector<std::size_t> o = {obs[t]};
    const auto r = brain_step(f, b, last, o);
    for (std::size_t s = 0; s < 3; ++s) CHECK(std::abs(r.belief[0][s] - want[t][s]) < 1e-9);
    b = r.belief;
    last = 0;  // keep observing through the confusion matrix
  }
}

TEST_CASE("brain_step propagates zero evidence unless told to fall back") {
  GenerativeModel m;
  m.a.matrices = {Matrix::identity(2)};
  m.b.matrices = {Matrix::identity(2)};
  m.c = PreferenceModel::from_probs(std::vector<double>{0.5, 0.5});
  m.d = Categorical::one_hot(2, 0);
  const FactoredModel f{{m}};
  const FactoredBelief b = {m.d};
  const std::vector<std::size_t> obs = {1};
  CHECK_THROWS_AS(brain_step(f, b, std::nullopt, obs), ZeroEvidence);
  BrainOptions opt;
  opt.fallback_on_zero_evidence = true;
  const auto r = brain_step(f, b, std::nullopt, obs, opt);
  CHECK(r.record.zero_evidence);
  CHECK(r.belief[0] == m.d);
}

TEST_CASE("factored efe equals the joint-model efe") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    FactoredModel f;
    FactoredBelief b;
    for (int k = 0; k < 2; ++k) {
      f.factors.push_back(support::random_model(rng, 2, 2, 2).model);
      b.emplace_back(oracle::random_simplex(rng, 2));
    }
    const auto joint = joint_model(f);
    std::vector<double> bj;
    for (std::size_t s0 = 0; s0 < 2; ++s0)
      for (std::size_t s1 = 0; s1 < 2; ++s1) bj.push_back(b[0][s0] * b[1][s1]);
    for (std::size_t u = 0; u < 2; ++u) {
      const auto fe = efe(f, b, u);
      const auto je = efe(joint, Categorical(bj), u);
      CHECK(fe.total.extrinsic == doctest::Approx(je.extrinsic).epsilon(1e-9));
      CHECK(fe.total.epistemic == doctest::Approx(je.epistemic).epsilon(1e-9));
    }
  }
}
