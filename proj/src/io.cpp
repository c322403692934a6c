#include "brain/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace brain {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty())
    throw IoError("not a number: '" + std::string(text) + "'");
  return v;
}

namespace {

// --- shared helpers ----------------------------------------------------------

Json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double get_num(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw IoError(std::string("missing field '") + key + "'");
  if (it->is_string()) return parse_double(it->get<std::string>());
  if (!it->is_number()) throw IoError(std::string("field '") + key + "' is not a number");
  return it->get<double>();
}

template <class Int>
Int get_int(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) throw IoError(std::string("missing integer field '") + key + "'");
  return it->get<Int>();
}

bool get_bool(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) throw IoError(std::string("missing boolean field '") + key + "'");
  return it->get<bool>();
}

std::string get_str(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw IoError(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

Json num_array(std::span<const double> xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

std::vector<double> get_num_array(const Json& j) {
  if (!j.is_array()) throw IoError("expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (x.is_string()) out.push_back(parse_double(x.get<std::string>()));
    else if (x.is_number()) out.push_back(x.get<double>());
    else throw IoError("expected a number");
  }
  return out;
}

void write_line(std::ostream& out, const Json& j) { out << j.dump() << '\n'; }

Json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw IoError("line " + std::to_string(line_no) + ": " + e.what());
  }
}

Json json_header(std::string_view schema) {
  Json h;
  h["schema"] = schema;
  h["version"] = kSchemaVersion;
  return h;
}

void check_json_header(const Json& h, std::string_view schema) {
  if (!h.is_object() || !h.contains("schema") || h["schema"] != schema)
    throw IoError("expected a '" + std::string(schema) + "' file");
  if (get_int<int>(h, "version") != kSchemaVersion)
    throw IoError("unsupported " + std::string(schema) + " version " + h["version"].dump());
}

// --- tables --------------------------------------------------------------------

std::string table_header(std::string_view schema) {
  return "# schema=" + std::string(schema) + " version=" + std::to_string(kSchemaVersion);
}

void write_table_start(std::ostream& out, std::string_view schema, std::string_view columns) {
  out << table_header(schema) << '\n' << columns << '\n';
}

std::string checked_field(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos) throw IoError("field contains a delimiter: '" + s + "'");
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

/// Reads the schema and column lines, then every data row split into fields.
std::vector<std::vector<std::string>> read_table(std::istream& in, std::string_view schema, std::string_view columns) {
  std::string line;
  if (!std::getline(in, line) || line != table_header(schema))
    throw IoError("expected header '" + table_header(schema) + "'");
  if (!std::getline(in, line) || line != columns) throw IoError("unexpected columns in " + std::string(schema) + " table");
  const std::size_t width = split(std::string(columns)).size();
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != width)
      throw IoError(std::string(schema) + " line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                    " fields");
    rows.push_back(std::move(f));
  }
  return rows;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) throw IoError("not an integer: '" + s + "'");
  return v;
}

constexpr std::string_view kCurveColumns = "agent,metric,episode,step,n,mean,ci_low,ci_high";
constexpr std::string_view kCdfColumns = "slice,metric,value,quantile";
constexpr std::string_view kShiftColumns = "agent,seed,shift_step,pre_mean,post_min,drop_depth,recovery_time,post_mean";
constexpr std::string_view kForgettingColumns = "agent,seed,profile_index,profile,after_index,after,reward";

Json breakdown_columns(std::span<const EfeBreakdown> xs) {
  Json j;
  Json action = Json::array(), g = Json::array(), ext = Json::array(), epi = Json::array(), par = Json::array();
  for (const auto& x : xs) {
    action.push_back(x.action);
    g.push_back(num(x.g));
    ext.push_back(num(x.extrinsic));
    epi.push_back(num(x.epistemic));
    par.push_back(num(x.parameter_gain));
  }
  j["action"] = action;
  j["g"] = g;
  j["extrinsic"] = ext;
  j["epistemic"] = epi;
  j["parameter_gain"] = par;
  return j;
}

std::vector<EfeBreakdown> get_breakdowns(const Json& j) {
  if (!j.is_object()) throw IoError("expected an EFE table");
  const auto g = get_num_array(j.at("g"));
  const auto ext = get_num_array(j.at("extrinsic"));
  const auto epi = get_num_array(j.at("epistemic"));
  const auto par = get_num_array(j.at("parameter_gain"));
  const auto& action = j.at("action");
  if (ext.size() != g.size() || epi.size() != g.size() || par.size() != g.size() || action.size() != g.size())
    throw IoError("EFE columns differ in length");
  std::vector<EfeBreakdown> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = {action[i].get<std::size_t>(), g[i], ext[i], epi[i], par[i]};
  return out;
}

}  // namespace

// --- run traces ----------------------------------------------------------------

void write_runs(std::ostream& out, std::span<const RunRecord> runs) {
  write_line(out, json_header("run-trace"));
  for (const auto& r : runs) {
    Json head;
    head["type"] = "run";
    head["agent"] = r.agent;
    head["seed"] = r.seed;
    head["steps"] = r.steps.size();
    head["episodes"] = r.episodes.size();
    write_line(out, head);
    for (const auto& s : r.steps) {
      Json j;
      j["type"] = "step";
      j["step"] = s.step;
      j["episode"] = s.episode;
      j["obs"] = s.obs;
      j["action"] = s.action;
      j["reward"] = num(s.reward);
      j["qos_fraction"] = num(s.qos_fraction);
      j["qos_all"] = s.qos_all;
      j["loss"] = s.loss ? num(*s.loss) : Json(nullptr);
      j["entropy"] = num(s.entropy);
      j["embb_throughput"] = num(s.embb_throughput);
      j["urllc_prb"] = num(s.urllc_prb);
      j["mmtc_tb"] = s.mmtc_tb;
      write_line(out, j);
    }
    for (const auto& e : r.episodes) {
      Json j;
      j["type"] = "episode";
      j["episode"] = e.episode;
      j["first_step"] = e.first_step;
      j["steps"] = e.steps;
      j["cumulative_reward"] = num(e.cumulative_reward);
      j["mean_loss"] = e.mean_loss ? num(*e.mean_loss) : Json(nullptr);
      j["entropy"] = num(e.entropy);
      j["qos_mean"] = num(e.qos_mean);
      write_line(out, j);
    }
  }
  if (!out) throw IoError("write failed");
}

std::vector<RunRecord> read_runs(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw IoError("empty run trace");
  check_json_header(parse_line(line, line_no), "run-trace");
  std::vector<RunRecord> runs;
  std::size_t want_steps = 0, want_episodes = 0;
  auto finish = [&] {
    if (!runs.empty() && (runs.back().steps.size() != want_steps || runs.back().episodes.size() != want_episodes))
      throw IoError("run '" + runs.back().agent + "' is truncated");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_line(line, line_no);
    try {
      const std::string type = get_str(j, "type");
      if (type == "run") {
        finish();
        RunRecord r;
        r.agent = get_str(j, "agent");
        r.seed = get_int<std::uint64_t>(j, "seed");
        want_steps = get_int<std::size_t>(j, "steps");
        want_episodes = get_int<std::size_t>(j, "episodes");
        runs.push_back(std::move(r));
      } else if (type == "step") {
        if (runs.empty()) throw IoError("step before any run");
        StepRow s;
        s.step = get_int<std::int64_t>(j, "step");
        s.episode = get_int<std::int64_t>(j, "episode");
        s.obs = get_int<std::size_t>(j, "obs");
        s.action = get_int<std::size_t>(j, "action");
        s.reward = get_num(j, "reward");
        s.qos_fraction = get_num(j, "qos_fraction");
        s.qos_all = get_bool(j, "qos_all");
        if (!j.at("loss").is_null()) s.loss = get_num(j, "loss");
        s.entropy = get_num(j, "entropy");
        s.embb_throughput = get_num(j, "embb_throughput");
        s.urllc_prb = get_num(j, "urllc_prb");
        s.mmtc_tb = get_int<std::int64_t>(j, "mmtc_tb");
        runs.back().steps.push_back(s);
      } else if (type == "episode") {
        if (runs.empty()) throw IoError("episode before any run");
        EpisodeRow e;
        e.episode = get_int<std::int64_t>(j, "episode");
        e.first_step = get_int<std::int64_t>(j, "first_step");
        e.steps = get_int<std::int64_t>(j, "steps");
        e.cumulative_reward = get_num(j, "cumulative_reward");
        if (!j.at("mean_loss").is_null()) e.mean_loss = get_num(j, "mean_loss");
        e.entropy = get_num(j, "entropy");
        e.qos_mean = get_num(j, "qos_mean");
        runs.back().episodes.push_back(e);
      } else {
        throw IoError("unknown record type '" + type + "'");
      }
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  finish();
  return runs;
}

// --- explanation traces ----------------------------------------------------------

void write_explanations(std::ostream& out, std::string_view agent, std::uint64_t seed,
                        std::span<const ExplanationRecord> records) {
  Json h = json_header("explanation-trace");
  h["agent"] = agent;
  h["seed"] = seed;
  write_line(out, h);
  for (const auto& r : records) {
    Json j;
    j["step"] = r.step;
    Json belief = Json::array();
    for (const auto& b : r.belief) belief.push_back(num_array(b.probs()));
    j["belief"] = belief;
    j["chosen"] = r.chosen;
    j["probe"] = r.probe;
    j["posterior_entropy"] = num(r.posterior_entropy);
    j["vfe"] = num(r.vfe);
    j["zero_evidence"] = r.zero_evidence;
    j["efe"] = breakdown_columns(r.efe);
    j["chosen_per_factor"] = breakdown_columns(r.chosen_per_factor);
    write_line(out, j);
  }
  if (!out) throw IoError("write failed");
}

ExplanationTrace read_explanations(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw IoError("empty explanation trace");
  const Json h = parse_line(line, line_no);
  check_json_header(h, "explanation-trace");
  ExplanationTrace t;
  t.agent = get_str(h, "agent");
  t.seed = get_int<std::uint64_t>(h, "seed");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_line(line, line_no);
    try {
      ExplanationRecord r;
      r.step = get_int<std::int64_t>(j, "step");
      for (const auto& b : j.at("belief")) r.belief.emplace_back(get_num_array(b));
      r.chosen = get_int<std::size_t>(j, "chosen");
      r.probe = get_bool(j, "probe");
      r.posterior_entropy = get_num(j, "posterior_entropy");
      r.vfe = get_num(j, "vfe");
      r.zero_evidence = get_bool(j, "zero_evidence");
      r.efe = get_breakdowns(j.at("efe"));
      r.chosen_per_factor = get_breakdowns(j.at("chosen_per_factor"));
      t.records.push_back(std::move(r));
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return t;
}

// --- environment traces ----------------------------------------------------------

namespace {

Json kpm_json(const KpmObservation& k) {
  Json j;
  j["throughput"] = num_array(k.throughput);
  j["buffer"] = num_array(k.buffer);
  j["tb_count"] = k.tb_count;
  return j;
}

template <class T>
PerSlice<T> per_slice_from(const std::vector<T>& v) {
  if (v.size() != kNumSlices) throw IoError("expected one value per slice");
  return {v[0], v[1], v[2]};
}

KpmObservation kpm_from(const Json& j) {
  KpmObservation k;
  k.throughput = per_slice_from(get_num_array(j.at("throughput")));
  k.buffer = per_slice_from(get_num_array(j.at("buffer")));
  k.tb_count = per_slice_from(j.at("tb_count").get<std::vector<std::int64_t>>());
  return k;
}

}  // namespace

void write_env_trace(std::ostream& out, std::uint64_t seed, std::span<const EnvTraceRow> rows) {
  Json h = json_header("env-trace");
  h["seed"] = seed;
  write_line(out, h);
  for (const auto& r : rows) {
    Json j;
    j["step"] = r.step;
    j["action"] = r.action;
    Json demand = Json::array();
    for (auto d : r.result.state.demand) demand.push_back(std::string(to_string(d)));
    j["demand"] = demand;
    j["queue_kb"] = num_array(r.result.state.queue_kb);
    j["state_step"] = r.result.state.step_index;
    j["arrivals"] = num_array(r.result.arrivals);
    j["observation"] = kpm_json(r.result.observation);
    j["kpm"] = kpm_json(r.result.kpm);
    j["reward"] = num(r.result.reward);
    write_line(out, j);
  }
  if (!out) throw IoError("write failed");
}

std::vector<EnvTraceRow> read_env_trace(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw IoError("empty env trace");
  check_json_header(parse_line(line, line_no), "env-trace");
  std::vector<EnvTraceRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const Json j = parse_line(line, line_no);
    try {
      EnvTraceRow r;
      r.step = get_int<std::int64_t>(j, "step");
      r.action = get_int<std::size_t>(j, "action");
      const auto& demand = j.at("demand");
      if (!demand.is_array() || demand.size() != kNumSlices) throw IoError("expected one demand level per slice");
      for (std::size_t k = 0; k < kNumSlices; ++k) {
        const auto name = demand[k].get<std::string>();
        bool found = false;
        for (auto d : {DemandLevel::kLow, DemandLevel::kMedium, DemandLevel::kHigh})
          if (to_string(d) == name) r.result.state.demand[k] = d, found = true;
        if (!found) throw IoError("unknown demand level '" + name + "'");
      }
      r.result.state.queue_kb = per_slice_from(get_num_array(j.at("queue_kb")));
      r.result.state.step_index = get_int<std::int64_t>(j, "state_step");
      r.result.arrivals = per_slice_from(get_num_array(j.at("arrivals")));
      r.result.observation = kpm_from(j.at("observation"));
      r.result.kpm = kpm_from(j.at("kpm"));
      r.result.reward = get_num(j, "reward");
      rows.push_back(std::move(r));
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

// --- curves ----------------------------------------------------------------------

CurveMetric parse_curve_metric(std::string_view name) {
  for (auto m : {CurveMetric::kReward, CurveMetric::kLoss, CurveMetric::kEntropy, CurveMetric::kQos})
    if (to_string(m) == name) return m;
  throw IoError("unknown curve metric '" + std::string(name) + "'");
}

std::vector<CurveRow> curve_rows(std::string_view agent, std::span<const RunRecord> runs) {
  std::vector<CurveRow> out;
  for (auto m : {CurveMetric::kReward, CurveMetric::kLoss, CurveMetric::kEntropy, CurveMetric::kQos})
    for (const auto& p : curve(runs, m)) out.push_back({std::string(agent), m, p});
  return out;
}

void write_curves(std::ostream& out, std::span<const CurveRow> rows) {
  write_table_start(out, "curves", kCurveColumns);
  for (const auto& r : rows) {
    const auto& p = r.point;
    out << checked_field(r.agent) << ',' << to_string(r.metric) << ',' << p.episode << ',' << p.step << ',' << p.n
        << ',' << format_double(p.mean) << ',' << format_double(p.ci_low) << ',' << format_double(p.ci_high) << '\n';
  }
  if (!out) throw IoError("write failed");
}

std::vector<CurveRow> read_curves(std::istream& in) {
  std::vector<CurveRow> out;
  for (const auto& f : read_table(in, "curves", kCurveColumns)) {
    CurveRow r;
    r.agent = f[0];
    r.metric = parse_curve_metric(f[1]);
    r.point.episode = parse_int<std::int64_t>(f[2]);
    r.point.step = parse_int<std::int64_t>(f[3]);
    r.point.n = parse_int<std::size_t>(f[4]);
    r.point.mean = parse_double(f[5]);
    r.point.ci_low = parse_double(f[6]);
    r.point.ci_high = parse_double(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

// --- CDFs ------------------------------------------------------------------------

void write_cdfs(std::ostream& out, std::span<const CdfRow> rows) {
  write_table_start(out, "cdf", kCdfColumns);
  for (const auto& r : rows)
    out << checked_field(r.slice) << ',' << checked_field(r.metric) << ',' << format_double(r.value) << ','
        << format_double(r.quantile) << '\n';
  if (!out) throw IoError("write failed");
}

std::vector<CdfRow> read_cdfs(std::istream& in) {
  std::vector<CdfRow> out;
  for (const auto& f : read_table(in, "cdf", kCdfColumns))
    out.push_back({f[0], f[1], parse_double(f[2]), parse_double(f[3])});
  return out;
}

// --- shift reports ---------------------------------------------------------------

void write_shift_reports(std::ostream& out, std::span<const ShiftReport> reports) {
  write_table_start(out, "shift-report", kShiftColumns);
  for (const auto& r : reports) {
    out << checked_field(r.agent) << ',' << r.seed << ',' << r.shift_step << ',' << format_double(r.pre_mean) << ','
        << format_double(r.post_min) << ',' << format_double(r.drop_depth) << ',';
    if (r.recovery_time) out << *r.recovery_time;
    out << ',' << format_double(r.post_mean) << '\n';
  }
  if (!out) throw IoError("write failed");
}

std::vector<ShiftReport> read_shift_reports(std::istream& in) {
  std::vector<ShiftReport> out;
  for (const auto& f : read_table(in, "shift-report", kShiftColumns)) {
    ShiftReport r;
    r.agent = f[0];
    r.seed = parse_int<std::uint64_t>(f[1]);
    r.shift_step = parse_int<std::int64_t>(f[2]);
    r.pre_mean = parse_double(f[3]);
    r.post_min = parse_double(f[4]);
    r.drop_depth = parse_double(f[5]);
    if (!f[6].empty()) r.recovery_time = parse_int<std::int64_t>(f[6]);
    r.post_mean = parse_double(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

// --- forgetting matrices -----------------------------------------------------------

void write_forgetting(std::ostream& out, std::span<const ForgettingReport> reports) {
  write_table_start(out, "forgetting", kForgettingColumns);
  for (const auto& r : reports) {
    if (r.performance.size() != r.phases.size()) throw IoError("forgetting matrix is not square over its phases");
    for (std::size_t i = 0; i < r.phases.size(); ++i) {
      if (r.performance[i].size() != r.phases.size()) throw IoError("forgetting matrix is not square over its phases");
      for (std::size_t j = 0; j < r.phases.size(); ++j)
        out << checked_field(r.agent) << ',' << r.seed << ',' << i << ',' << checked_field(r.phases[i]) << ',' << j
            << ',' << checked_field(r.phases[j]) << ',' << format_double(r.performance[i][j]) << '\n';
    }
  }
  if (!out) throw IoError("write failed");
}

std::vector<ForgettingReport> read_forgetting(std::istream& in) {
  struct Entry {
    std::size_t i, j;
    std::string profile, after;
    double value;
  };
  std::vector<ForgettingReport> out;
  std::vector<std::vector<Entry>> entries;
  for (const auto& f : read_table(in, "forgetting", kForgettingColumns)) {
    const std::uint64_t seed = parse_int<std::uint64_t>(f[1]);
    if (out.empty() || out.back().agent != f[0] || out.back().seed != seed) {
      ForgettingReport r;
      r.agent = f[0];
      r.seed = seed;
      out.push_back(std::move(r));
      entries.emplace_back();
    }
    entries.back().push_back(
        {parse_int<std::size_t>(f[2]), parse_int<std::size_t>(f[4]), f[3], f[5], parse_double(f[6])});
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& es = entries[k];
    std::size_t n = 0;
    while (n * n < es.size()) ++n;
    if (n * n != es.size()) throw IoError("forgetting matrix for '" + out[k].agent + "' is not square");
    out[k].phases.assign(n, "");
    out[k].performance.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t e = 0; e < es.size(); ++e) {
      const auto& x = es[e];
      if (x.i != e / n || x.j != e % n) throw IoError("forgetting rows out of order for '" + out[k].agent + "'");
      out[k].performance[x.i][x.j] = x.value;
      if (x.j == 0) out[k].phases[x.i] = x.profile;
    }
  }
  return out;
}

// --- files -------------------------------------------------------------------------

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& write) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write(out);
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace brain
