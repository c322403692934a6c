#include "brain/slice_model.hpp"

#include <array>
#include <cmath>
#include <map>
#include <tuple>

namespace brain {

namespace {

// 9-point Gauss-Hermite rule for a standard normal.
constexpr std::array<double, 9> kNodes = {-4.512745863399783, -3.20542900285647, -2.07684797867783,
                                          -1.0232556637891326, 0.0, 1.0232556637891326,
                                          2.07684797867783, 3.20542900285647, 4.512745863399783};
constexpr std::array<double, 9> kWeights = {2.2345844007746607e-05, 0.0027891413212317692,
                                            0.04991640676521782, 0.24409750289493953,
                                            0.40634920634920635, 0.24409750289493953,
                                            0.04991640676521782, 0.0027891413212317692,
                                            2.2345844007746607e-05};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

BrainModelConfig BrainModelConfig::defaults() {
  BrainModelConfig c;
  c.preferences[index(SliceKind::kEmbb)] = {0.02, 0.49, 0.49};
  c.preferences[index(SliceKind::kUrllc)] = {0.98, 0.015, 0.005};
  c.preferences[index(SliceKind::kMmtc)] = {0.02, 0.49, 0.49};
  return c;
}

SliceModelBuilder::SliceModelBuilder(ScenarioConfig scenario, ObsBinning binning,
                                     std::vector<SliceAction> catalog, BrainModelConfig config)
    : scenario_(std::move(scenario)),
      binning_(std::move(binning)),
      catalog_(std::move(catalog)),
      config_(std::move(config)) {
  validate_config(scenario_);
  if (catalog_.empty()) throw std::invalid_argument("SliceModelBuilder: empty catalog");
  if (auto v = binning_.violations(); !v.empty()) throw std::invalid_argument(v.front());
  const double delta = config_.transition_perturbation;
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("transition_perturbation must lie in [0, 1]");
  for (auto slice : kAllSlices) {
    const std::size_t k = index(slice);
    Matrix b(kNumDemandLevels, kNumDemandLevels);
    for (std::size_t s = 0; s < kNumDemandLevels; ++s)
      for (std::size_t sn = 0; sn < kNumDemandLevels; ++sn)
        b(sn, s) = (1.0 - delta) * scenario_.demand_transition[k][s][sn] + delta / kNumDemandLevels;
    transitions_[k] = std::move(b);
    if (config_.preferences[k].size() != binning_.num_bins(slice)) {
      throw std::invalid_argument("preference length for " + std::string(to_string(slice)) +
                                  " does not match its bin count");
    }
    preferences_[k] = PreferenceModel::from_probs(config_.preferences[k]);
  }
}

Matrix SliceModelBuilder::observation_matrix(SliceKind slice, const SliceAction& action, double backlog) const {
  const std::size_t k = index(slice);
  const auto& edges = binning_.edges[k];
  const std::size_t m = edges.size() + 1;
  const bool probed = action.probe_slice == slice;
  const double sigma = probed ? 0.0 : scenario_.obs_noise_sigma;
  const double queue = config_.queue_aware ? std::max(0.0, backlog) : 0.0;

  // P(reported primary KPM < edge) given the noise-free KPM value.
  auto below = [&](double kpm, double edge) {
    if (slice == SliceKind::kMmtc) {
      const double threshold = std::ceil(edge);  // reports are integers
      if (threshold <= 0.0) return 0.0;
      if (sigma == 0.0) return kpm < threshold ? 1.0 : 0.0;
      return normal_cdf((threshold - 0.5 - kpm) / sigma);
    }
    if (edge <= 0.0) return 0.0;
    if (sigma == 0.0) return kpm < edge ? 1.0 : 0.0;
    return normal_cdf((edge - kpm) / sigma);
  };

  Matrix a(m, kNumDemandLevels, 0.0);
  for (std::size_t d = 0; d < kNumDemandLevels; ++d) {
    const auto level = static_cast<DemandLevel>(d);
    const double rate = scenario_.arrival_rates[k][d];
    const double served = served_kb(scenario_, action, slice, level);
    for (std::size_t i = 0; i < kNodes.size(); ++i) {
      const double arrivals = std::max(0.0, rate * (1.0 + scenario_.arrival_noise * kNodes[i]));
      const double backlog_total = queue + arrivals;
      const double thr = std::min(backlog_total, served);
      double kpm = 0.0;
      switch (slice) {
        case SliceKind::kEmbb: kpm = thr; break;
        case SliceKind::kUrllc: kpm = backlog_total - thr; break;
        case SliceKind::kMmtc: kpm = std::floor(thr / scenario_.tb_size + 1e-9); break;
      }
      double prev = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        const double cdf = b + 1 < m ? below(kpm, edges[b]) : 1.0;
        a(b, d) += kWeights[i] * std::max(0.0, cdf - prev);
        prev = std::max(prev, cdf);
      }
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      a(b, d) += config_.likelihood_floor;
      sum += a(b, d);
    }
    for (std::size_t b = 0; b < m; ++b) a(b, d) /= sum;
  }
  return a;
}

FactoredModel SliceModelBuilder::build(const PerSlice<double>& backlog) const {
  FactoredModel model;
  model.factors.resize(kNumSlices);
  for (auto slice : kAllSlices) {
    const std::size_t k = index(slice);
    auto& f = model.factors[k];
    f.b.matrices = {transitions_[k]};
    f.c = preferences_[k];
    f.d = Categorical(std::vector<double>(scenario_.initial_demand[k].begin(), scenario_.initial_demand[k].end()));
    f.a.matrices.reserve(catalog_.size());
    // Many catalog entries give a slice the same service; build each distinct one once.
    std::map<std::tuple<double, int, bool, bool>, std::size_t> seen;
    for (const auto& action : catalog_) {
      const auto key = std::make_tuple(action.prb_fraction[k], static_cast<int>(action.scheduler[k]),
                                       action.probe_slice.has_value(), action.probe_slice == slice);
      auto it = seen.find(key);
      if (it != seen.end()) {
        f.a.matrices.push_back(f.a.matrices[it->second]);
      } else {
        seen.emplace(key, f.a.matrices.size());
        f.a.matrices.push_back(observation_matrix(slice, action, backlog[k]));
      }
    }
  }
  return model;
}

}  // namespace brain
