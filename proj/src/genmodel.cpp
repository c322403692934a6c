#include "brain/genmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace brain {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows_ * cols_) throw std::invalid_argument("Matrix: data size does not match shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

std::vector<double> Matrix::operator*(std::span<const double> v) const {
  if (v.size() != cols_) throw std::invalid_argument("Matrix*vector: size mismatch");
  std::vector<double> out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) acc += data_[r * cols_ + c] * v[c];
    out[r] = acc;
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

PreferenceModel PreferenceModel::from_probs(std::span<const double> probs, double floor) {
  std::vector<double> p(probs.begin(), probs.end());
  double sum = 0.0;
  for (double& v : p) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("preference probabilities must be nonnegative");
    v = std::max(v, floor);
    sum += v;
  }
  PreferenceModel c;
  c.log_probs.reserve(p.size());
  for (double v : p) c.log_probs.push_back(std::log(v / sum));
  return c;
}

std::vector<double> PreferenceModel::probs() const {
  std::vector<double> p(log_probs.size());
  std::transform(log_probs.begin(), log_probs.end(), p.begin(), [](double l) { return std::exp(l); });
  return p;
}

std::size_t GenerativeModel::num_actions() const {
  return std::max(a.matrices.size(), b.matrices.size());
}

namespace {

void check_columns(const Matrix& m, const std::string& where, std::vector<Violation>& out) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double sum = 0.0;
    bool bad_entry = false;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double v = m(r, c);
      if (!std::isfinite(v) || v < 0.0) bad_entry = true;
      sum += v;
    }
    if (bad_entry) out.push_back({where + " column " + std::to_string(c), "negative or non-finite entry"});
    if (std::abs(sum - 1.0) > kNormTolerance) {
      out.push_back({where + " column " + std::to_string(c), "sums to " + std::to_string(sum)});
    }
  }
}

}  // namespace

std::vector<Violation> validate(const GenerativeModel& m) {
  std::vector<Violation> out;
  const std::size_t n = m.d.size();
  if (!is_distribution(m.d.probs())) out.push_back({"D", "not a probability vector"});
  if (m.a.matrices.empty()) out.push_back({"A", "no matrices"});
  if (m.b.matrices.empty()) out.push_back({"B", "no matrices"});
  if (m.a.matrices.size() > 1 && m.b.matrices.size() > 1 && m.a.matrices.size() != m.b.matrices.size()) {
    out.push_back({"A/B", "per-action matrix counts differ"});
  }
  const std::size_t num_obs = m.num_observations();
  for (std::size_t u = 0; u < m.a.matrices.size(); ++u) {
    const auto& a = m.a.matrices[u];
    const std::string where = "A[" + std::to_string(u) + "]";
    if (a.cols() != n) out.push_back({where, "has " + std::to_string(a.cols()) + " columns, expected N=" + std::to_string(n)});
    if (a.rows() != num_obs) out.push_back({where, "row count differs from A[0]"});
    check_columns(a, where, out);
  }
  for (std::size_t u = 0; u < m.b.matrices.size(); ++u) {
    const auto& b = m.b.matrices[u];
    const std::string where = "B[" + std::to_string(u) + "]";
    if (b.rows() != n || b.cols() != n) out.push_back({where, "must be N x N with N=" + std::to_string(n)});
    check_columns(b, where, out);
  }
  if (m.c.log_probs.size() != num_obs) {
    out.push_back({"C", "length " + std::to_string(m.c.log_probs.size()) + " differs from M=" + std::to_string(num_obs)});
  }
  double csum = 0.0;
  bool finite = true;
  for (double l : m.c.log_probs) {
    finite = finite && std::isfinite(l);
    csum += std::exp(l);
  }
  if (!finite) out.push_back({"C", "non-finite log preference"});
  if (!m.c.log_probs.empty() && std::abs(csum - 1.0) > kNormTolerance) out.push_back({"C", "exp(C) does not sum to 1"});
  return out;
}

std::vector<double> likelihood(const GenerativeModel& model, std::size_t o, std::size_t u) {
  if (u >= std::max<std::size_t>(model.num_actions(), 1)) throw IndexOutOfRange("likelihood: action index out of range");
  const Matrix& a = model.a.for_action(u);
  if (o >= a.rows()) throw IndexOutOfRange("likelihood: observation index out of range");
  auto r = a.row(o);
  return {r.begin(), r.end()};
}

Categorical predict(const GenerativeModel& model, const Categorical& belief, std::size_t u) {
  return Categorical::normalized(model.b.for_action(u) * belief.probs());
}

namespace {

void normalize_column(Matrix& target, const Matrix& counts, std::size_t c) {
  double sum = 0.0;
  for (std::size_t r = 0; r < counts.rows(); ++r) sum += counts(r, c);
  for (std::size_t r = 0; r < counts.rows(); ++r) target(r, c) = counts(r, c) / sum;
}

}  // namespace

GenerativeModel with_dirichlet_counts(GenerativeModel model, double prior_mass) {
  if (!(prior_mass > 0.0)) throw std::invalid_argument("prior_mass must be positive");
  DirichletCounts counts;
  auto seed = [&](const Matrix& m) {
    Matrix c(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t k = 0; k < m.cols(); ++k) c(r, k) = prior_mass * static_cast<double>(m.rows()) * m(r, k);
    return c;
  };
  for (const auto& a : model.a.matrices) counts.a.push_back(seed(a));
  for (const auto& b : model.b.matrices) counts.b.push_back(seed(b));
  model.counts = std::move(counts);
  return model;
}

GenerativeModel update_counts(const GenerativeModel& model, const Emission& e) {
  if (!model.counts) throw std::logic_error("update_counts: model has no Dirichlet counts");
  const std::size_t u = model.a.matrices.size() == 1 ? 0 : e.action;
  if (u >= model.a.matrices.size() || e.state >= model.num_states() || e.observation >= model.num_observations()) {
    throw IndexOutOfRange("update_counts: emission index out of range");
  }
  if (e.weight == 0.0) return model;
  GenerativeModel out = model;
  out.counts->a[u](e.observation, e.state) += e.weight;
  normalize_column(out.a.matrices[u], out.counts->a[u], e.state);
  return out;
}

GenerativeModel update_counts(const GenerativeModel& model, const StateTransition& t) {
  if (!model.counts) throw std::logic_error("update_counts: model has no Dirichlet counts");
  const std::size_t u = model.b.matrices.size() == 1 ? 0 : t.action;
  const std::size_t n = model.num_states();
  if (u >= model.b.matrices.size() || t.state >= n || t.next_state >= n) {
    throw IndexOutOfRange("update_counts: transition index out of range");
  }
  if (t.weight == 0.0) return model;
  GenerativeModel out = model;
  out.counts->b[u](t.next_state, t.state) += t.weight;
  normalize_column(out.b.matrices[u], out.counts->b[u], t.state);
  return out;
}

GenerativeModel update_counts(const GenerativeModel& model, const Categorical& prev, std::size_t u,
                              const Categorical& next) {
  if (!model.counts) throw std::logic_error("update_counts: model has no Dirichlet counts");
  const std::size_t n = model.num_states();
  if (prev.size() != n || next.size() != n) throw IndexOutOfRange("update_counts: belief size mismatch");
  const std::size_t uu = model.b.matrices.size() == 1 ? 0 : u;
  if (uu >= model.b.matrices.size()) throw IndexOutOfRange("update_counts: action index out of range");
  GenerativeModel out = model;
  auto& counts = out.counts->b[uu];
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t sn = 0; sn < n; ++sn) counts(sn, s) += next[sn] * prev[s];
  for (std::size_t s = 0; s < n; ++s) normalize_column(out.b.matrices[uu], counts, s);
  return out;
}

ObsBinning ObsBinning::defaults() {
  ObsBinning b;
  b.edges[index(SliceKind::kEmbb)] = {15.0, 50.0};
  b.edges[index(SliceKind::kUrllc)] = {5.0, 20.0};
  b.edges[index(SliceKind::kMmtc)] = {1.0, 8.0};
  return b;
}

std::size_t ObsBinning::bin(SliceKind s, double value) const {
  const auto& e = edges[index(s)];
  return static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), value) - e.begin());
}

double primary_kpm(const KpmObservation& obs, SliceKind s) {
  switch (s) {
    case SliceKind::kEmbb: return obs.throughput[index(s)];
    case SliceKind::kUrllc: return obs.buffer[index(s)];
    case SliceKind::kMmtc: return static_cast<double>(obs.tb_count[index(s)]);
  }
  return 0.0;
}

PerSlice<std::size_t> ObsBinning::bins(const KpmObservation& obs) const {
  PerSlice<std::size_t> out{};
  for (auto s : kAllSlices) out[index(s)] = bin(s, primary_kpm(obs, s));
  return out;
}

std::size_t ObsBinning::joint_index(const KpmObservation& obs) const {
  const auto b = bins(obs);
  std::size_t idx = 0;
  for (auto s : kAllSlices) idx = idx * num_bins(s) + b[index(s)];
  return idx;
}

std::size_t ObsBinning::num_joint() const {
  std::size_t n = 1;
  for (auto s : kAllSlices) n *= num_bins(s);
  return n;
}

std::vector<std::string> ObsBinning::violations() const {
  std::vector<std::string> out;
  for (auto s : kAllSlices) {
    const auto& e = edges[index(s)];
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!std::isfinite(e[i]) || (i > 0 && !(e[i] > e[i - 1]))) {
        out.push_back("bin edges for " + std::string(to_string(s)) + " must be finite and strictly increasing");
        break;
      }
    }
  }
  return out;
}

std::size_t FactoredModel::num_actions() const {
  std::size_t n = 1;
  for (const auto& f : factors) n = std::max(n, f.num_actions());
  return n;
}

GenerativeModel joint_model(const FactoredModel& model) {
  if (model.factors.empty()) throw std::invalid_argument("joint_model: no factors");
  const std::size_t num_actions = model.num_actions();
  const auto& first = model.factors.front();
  GenerativeModel joint;
  const bool shared_a = std::all_of(model.factors.begin(), model.factors.end(),
                                    [](const auto& f) { return f.a.matrices.size() == 1; });
  const bool shared_b = std::all_of(model.factors.begin(), model.factors.end(),
                                    [](const auto& f) { return f.b.matrices.size() == 1; });
  const std::size_t na = shared_a ? 1 : num_actions;
  const std::size_t nb = shared_b ? 1 : num_actions;
  for (std::size_t u = 0; u < na; ++u) {
    Matrix m = first.a.for_action(u);
    for (std::size_t k = 1; k < model.factors.size(); ++k) m = kron(m, model.factors[k].a.for_action(u));
    joint.a.matrices.push_back(std::move(m));
  }
  for (std::size_t u = 0; u < nb; ++u) {
    Matrix m = first.b.for_action(u);
    for (std::size_t k = 1; k < model.factors.size(); ++k) m = kron(m, model.factors[k].b.for_action(u));
    joint.b.matrices.push_back(std::move(m));
  }
  std::vector<double> logc = first.c.log_probs;
  std::vector<double> d = first.d.vector();
  for (std::size_t k = 1; k < model.factors.size(); ++k) {
    const auto& f = model.factors[k];
    std::vector<double> nl;
    for (double x : logc)
      for (double y : f.c.log_probs) nl.push_back(x + y);
    logc = std::move(nl);
    std::vector<double> nd;
    for (double x : d)
      for (double y : f.d.probs()) nd.push_back(x * y);
    d = std::move(nd);
  }
  joint.c.log_probs = std::move(logc);
  joint.d = Categorical::normalized(std::move(d));
  return joint;
}

GenerativeModel default_demand_model(const DemandMatrix& demand, double accuracy,
                                     std::span<const double> preference) {
  constexpr std::size_t n = kNumDemandLevels;
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw std::invalid_argument("accuracy must lie in [0, 1]");
  Matrix confusion(n, n, (1.0 - accuracy) / static_cast<double>(n - 1));
  for (std::size_t i = 0; i < n; ++i) confusion(i, i) = accuracy;
  Matrix b(n, n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t sn = 0; sn < n; ++sn) b(sn, s) = demand[s][sn];
  GenerativeModel m;
  m.a.matrices = {confusion, Matrix::identity(n)};
  m.b.matrices = {b};
  const std::vector<double> default_pref = {0.1, 0.3, 0.6};
  m.c = PreferenceModel::from_probs(preference.empty() ? std::span<const double>(default_pref) : preference);
  m.d = Categorical::uniform(n);
  return m;
}

}  // namespace brain
