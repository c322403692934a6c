#pragma once

// Plain-text exports. Per-step traces are line-delimited JSON; curves, CDFs,
// shift and forgetting reports are comma-separated tables. The first line of
// every file names the schema and its version. Numbers are written in their
// shortest round-trip form, so export -> import is value-identical and the
// same data always produces the same bytes.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "brain/harness.hpp"

namespace brain {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that parses back to the same double; "inf", "-inf"
/// and "nan" for non-finite values.
std::string format_double(double v);
/// Inverse of format_double. Throws IoError on malformed text.
double parse_double(std::string_view text);

// --- per-step traces ---------------------------------------------------------

/// Schema "run-trace": a run line, then its step lines, then its episode lines.
void write_runs(std::ostream& out, std::span<const RunRecord> runs);
std::vector<RunRecord> read_runs(std::istream& in);

/// Schema "explanation-trace": one line per decision step.
void write_explanations(std::ostream& out, std::string_view agent, std::uint64_t seed,
                        std::span<const ExplanationRecord> records);
struct ExplanationTrace {
  std::string agent;
  std::uint64_t seed = 0;
  std::vector<ExplanationRecord> records;
};
ExplanationTrace read_explanations(std::istream& in);

/// Schema "env-trace": one line per environment step with the hidden state,
/// the noisy observation, the noise-free KPMs, the executed action and reward.
struct EnvTraceRow {
  std::int64_t step = 0;
  std::size_t action = 0;
  StepResult result;

  friend bool operator==(const EnvTraceRow& a, const EnvTraceRow& b) {
    return a.step == b.step && a.action == b.action && a.result.state == b.result.state &&
           a.result.observation == b.result.observation && a.result.kpm == b.result.kpm &&
           a.result.arrivals == b.result.arrivals && a.result.reward == b.result.reward;
  }
};
void write_env_trace(std::ostream& out, std::uint64_t seed, std::span<const EnvTraceRow> rows);
std::vector<EnvTraceRow> read_env_trace(std::istream& in);

// --- tables ------------------------------------------------------------------

struct CurveRow {
  std::string agent;
  CurveMetric metric = CurveMetric::kReward;
  CurvePoint point;

  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

/// Reward, loss, entropy and QoS curves for one agent's runs.
std::vector<CurveRow> curve_rows(std::string_view agent, std::span<const RunRecord> runs);
CurveMetric parse_curve_metric(std::string_view name);

/// Columns: agent, metric, episode, step, n, mean, ci_low, ci_high.
void write_curves(std::ostream& out, std::span<const CurveRow> rows);
std::vector<CurveRow> read_curves(std::istream& in);

/// Columns: slice, metric, value, quantile.
void write_cdfs(std::ostream& out, std::span<const CdfRow> rows);
std::vector<CdfRow> read_cdfs(std::istream& in);

/// Columns: agent, seed, shift_step, pre_mean, post_min, drop_depth,
/// recovery_time (empty when unrecovered), post_mean.
void write_shift_reports(std::ostream& out, std::span<const ShiftReport> reports);
std::vector<ShiftReport> read_shift_reports(std::istream& in);

/// Columns: agent, seed, profile_index, profile, after_index, after, reward.
/// One row per matrix entry, row-major.
void write_forgetting(std::ostream& out, std::span<const ForgettingReport> reports);
std::vector<ForgettingReport> read_forgetting(std::istream& in);

// --- files -------------------------------------------------------------------

/// Opens `path` for writing (creating parent directories) and calls `write`.
/// Throws IoError when the file cannot be created or written.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& write);
/// Opens `path` for reading; throws IoError when it cannot be opened.
template <class Read>
auto read_file(const std::filesystem::path& path, Read read);

}  // namespace brain

#include <fstream>

template <class Read>
auto brain::read_file(const std::filesystem::path& path, Read read) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read(in);
}
