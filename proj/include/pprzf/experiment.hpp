// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// Experiment descriptions, their flat key = value text format, and the
// sweep driver that turns one into CSV rows.
//
//   network.n = 16
//   network.r2 = [0.6, 0.6, 0.6, 0.6, 0.6, 0.6]
//   constraint.kind = per_pu
//   experiment.snr_db = [-10, 0, 10, 20, 30]

#pragma once

#include "pprzf/channel.hpp"
#include "pprzf/detequiv.hpp"
#include "pprzf/montecarlo.hpp"
#include "pprzf/optimize.hpp"
#include "pprzf/validation.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pprzf {

enum class Mode { DeSweep, McSweep, Optimize, Validate };
enum class Objective { De, Mc };

struct ExperimentSpec {
  NetworkConfig config = uniform_config(16, 8, 6, 1.0, 0.6);
  std::vector<double> snr_grid_db{-10.0, 0.0, 10.0, 20.0, 30.0};
  std::optional<double> interference_db;  // unset: keep the configured thresholds
  std::vector<double> alpha_grid;        // empty: alpha optimized per beta
  std::vector<double> beta_grid;         // empty: beta optimized jointly
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  Mode mode = Mode::DeSweep;
  Objective objective = Objective::De;
  NuMode nu_mode = NuMode::De;
  std::size_t nu_batch = 500;
  double beta_step = 0.01;
  Suite suite = Suite::All;
  std::string output_path;  // empty: standard output

  void validate() const {
    config.validate();
    using detail::require;
    if (mode != Mode::Validate) require(!snr_grid_db.empty(), "experiment.snr_db: grid must not be empty");
    for (double a : alpha_grid) require(std::isfinite(a) && a > 0.0, "experiment.alpha: entries must be > 0");
    for (double b : beta_grid) require(b >= 0.0 && b <= 1.0, "experiment.beta: entries must lie in [0, 1]");
    for (double s : snr_grid_db) require(std::isfinite(s), "experiment.snr_db: entries must be finite");
    if (interference_db) require(std::isfinite(*interference_db), "experiment.interference_db must be finite");
    const bool mc = mode == Mode::McSweep || (mode == Mode::Optimize && objective == Objective::Mc);
    if (mc || mode == Mode::Validate) require(trials >= 2, "experiment.trials: must be >= 2");
    if (mc && nu_mode == NuMode::Mc) require(nu_batch >= 2, "experiment.nu_batch: must be >= 2");
    require(beta_step > 0.0 && beta_step <= 1.0, "experiment.beta_step: must lie in (0, 1]");
  }

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

// ---------------------------------------------------------------- text format

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + "]";
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s, const std::string& key) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
    throw ConfigError(key + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, const std::string& key) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
    throw ConfigError(key + ": expected a nonnegative integer, got '" + std::string(s) + "'");
  return v;
}

/// "[a, b, c]" or a bare scalar.
inline std::vector<double> parse_list(std::string_view s, const std::string& key) {
  s = trim(s);
  std::vector<double> out;
  if (s.empty()) throw ConfigError(key + ": missing value");
  if (s.front() != '[') {
    out.push_back(parse_double(s, key));
    return out;
  }
  if (s.back() != ']') throw ConfigError(key + ": unterminated list");
  s = trim(s.substr(1, s.size() - 2));
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_double(s.substr(0, comma), key));
    if (comma == std::string_view::npos) break;
    s = trim(s.substr(comma + 1));
    if (s.empty()) throw ConfigError(key + ": trailing comma");
  }
  return out;
}

template <typename E>
E parse_enum(std::string_view s, const std::string& key, std::initializer_list<std::pair<const char*, E>> table) {
  s = trim(s);
  std::string allowed;
  for (const auto& [name, value] : table) {
    if (s == name) return value;
    allowed += allowed.empty() ? name : std::string("|") + name;
  }
  throw ConfigError(key + ": expected one of {" + allowed + "}, got '" + std::string(s) + "'");
}

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::DeSweep: return "de_sweep";
    case Mode::McSweep: return "mc_sweep";
    case Mode::Optimize: return "optimize";
    case Mode::Validate: return "validate";
  }
  return "?";
}

inline const char* suite_name(Suite s) {
  switch (s) {
    case Suite::Rmt: return "rmt";
    case Suite::Appendix: return "appendix";
    case Suite::SpecialCases: return "specialcases";
    case Suite::All: return "all";
  }
  return "?";
}

}  // namespace detail

inline Suite parse_suite(std::string_view s, const std::string& key = "experiment.suite") {
  return detail::parse_enum<Suite>(s, key,
                                   {{"rmt", Suite::Rmt},
                                    {"appendix", Suite::Appendix},
                                    {"specialcases", Suite::SpecialCases},
                                    {"all", Suite::All}});
}

inline Objective parse_objective(std::string_view s, const std::string& key = "experiment.objective") {
  return detail::parse_enum<Objective>(s, key, {{"de", Objective::De}, {"mc", Objective::Mc}});
}

inline std::string serialize(const ExperimentSpec& spec) {
  using detail::format_double;
  using detail::format_list;
  const auto& c = spec.config;
  std::ostringstream os;
  os << "network.n = " << c.n_antennas << '\n'
     << "network.k = " << c.n_sus << '\n'
     << "network.l = " << c.n_pus << '\n'
     << "network.r1 = " << format_list(c.r1) << '\n'
     << "network.r2 = " << format_list(c.r2) << '\n'
     << "network.sigma2 = " << format_double(c.sigma2) << '\n'
     << "network.p_t = " << format_double(c.p_t) << '\n';
  if (const auto* per = std::get_if<PerPuConstraint>(&c.constraint))
    os << "constraint.kind = per_pu\n"
       << "constraint.theta = " << format_list(per->thetas) << '\n';
  else
    os << "constraint.kind = sum\n"
       << "constraint.theta_all = " << format_double(std::get<SumPowerConstraint>(c.constraint).theta_all) << '\n';
  os << "experiment.mode = " << detail::mode_name(spec.mode) << '\n'
     << "experiment.snr_db = " << format_list(spec.snr_grid_db) << '\n';
  if (spec.interference_db) os << "experiment.interference_db = " << format_double(*spec.interference_db) << '\n';
  os << "experiment.alpha = " << format_list(spec.alpha_grid) << '\n'
     << "experiment.beta = " << format_list(spec.beta_grid) << '\n'
     << "experiment.trials = " << spec.trials << '\n'
     << "experiment.seed = " << spec.seed << '\n'
     << "experiment.objective = " << (spec.objective == Objective::De ? "de" : "mc") << '\n'
     << "experiment.nu_mode = " << (spec.nu_mode == NuMode::De ? "de" : "mc") << '\n'
     << "experiment.nu_batch = " << spec.nu_batch << '\n'
     << "experiment.beta_step = " << format_double(spec.beta_step) << '\n'
     << "experiment.suite = " << detail::suite_name(spec.suite) << '\n';
  if (!spec.output_path.empty()) os << "experiment.output = " << spec.output_path << '\n';
  return os.str();
}

/// Parses the key = value format. Unset keys keep their defaults; a scalar
/// r1/r2/theta is broadcast to K/L entries. Throws ConfigError naming the
/// offending key.
inline ExperimentSpec parse_spec(std::string_view text) {
  using namespace detail;
  ExperimentSpec spec;
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (kv.count(key)) throw ConfigError(key + ": given more than once");
    kv[key] = std::string(trim(line.substr(eq + 1)));
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  auto& c = spec.config;
  if (auto v = take("network.n")) c.n_antennas = parse_uint(*v, "network.n");
  if (auto v = take("network.k")) c.n_sus = parse_uint(*v, "network.k");
  if (auto v = take("network.l")) c.n_pus = parse_uint(*v, "network.l");
  // Lists default to the first default entry, broadcast to the new size.
  const auto list_or = [&](const std::string& key, double fallback, std::size_t n) {
    std::vector<double> v = {fallback};
    if (auto raw = take(key)) v = parse_list(*raw, key);
    if (v.size() == 1 && n != 1) v.assign(n, v.front());
    return v;
  };
  c.r1 = list_or("network.r1", c.r1.front(), c.n_sus);
  c.r2 = list_or("network.r2", c.r2.front(), c.n_pus);
  if (auto v = take("network.sigma2")) c.sigma2 = parse_double(*v, "network.sigma2");
  if (auto v = take("network.p_t")) c.p_t = parse_double(*v, "network.p_t");

  bool per_pu = true;
  if (auto v = take("constraint.kind"))
    per_pu = parse_enum<bool>(*v, "constraint.kind", {{"per_pu", true}, {"sum", false}});
  if (per_pu) {
    if (kv.count("constraint.theta_all")) throw ConfigError("constraint.theta_all: only valid with kind = sum");
    c.constraint = PerPuConstraint{list_or("constraint.theta", 1.0, c.n_pus)};
  } else {
    if (kv.count("constraint.theta")) throw ConfigError("constraint.theta: only valid with kind = per_pu");
    double theta_all = static_cast<double>(c.n_pus);
    if (auto v = take("constraint.theta_all")) theta_all = parse_double(*v, "constraint.theta_all");
    c.constraint = SumPowerConstraint{theta_all};
  }

  if (auto v = take("experiment.mode"))
    spec.mode = parse_enum<Mode>(*v, "experiment.mode",
                                 {{"de_sweep", Mode::DeSweep},
                                  {"mc_sweep", Mode::McSweep},
                                  {"optimize", Mode::Optimize},
                                  {"validate", Mode::Validate}});
  if (auto v = take("experiment.snr_db")) spec.snr_grid_db = parse_list(*v, "experiment.snr_db");
  if (auto v = take("experiment.interference_db")) spec.interference_db = parse_double(*v, "experiment.interference_db");
  if (auto v = take("experiment.alpha")) spec.alpha_grid = parse_list(*v, "experiment.alpha");
  if (auto v = take("experiment.beta")) spec.beta_grid = parse_list(*v, "experiment.beta");
  if (auto v = take("experiment.trials")) spec.trials = parse_uint(*v, "experiment.trials");
  if (auto v = take("experiment.seed")) spec.seed = parse_uint(*v, "experiment.seed");
  if (auto v = take("experiment.objective")) spec.objective = parse_objective(*v);
  if (auto v = take("experiment.nu_mode"))
    spec.nu_mode = parse_enum<NuMode>(*v, "experiment.nu_mode", {{"de", NuMode::De}, {"mc", NuMode::Mc}});
  if (auto v = take("experiment.nu_batch")) spec.nu_batch = parse_uint(*v, "experiment.nu_batch");
  if (auto v = take("experiment.beta_step")) spec.beta_step = parse_double(*v, "experiment.beta_step");
  if (auto v = take("experiment.suite")) spec.suite = parse_suite(*v);
  if (auto v = take("experiment.output")) spec.output_path = *v;

  if (!kv.empty()) throw ConfigError(kv.begin()->first + ": unknown key");
  spec.validate();
  return spec;
}

// ------------------------------------------------------------------------ CSV

struct CsvRow {
  CsvRow() = default;
  CsvRow(double snr, double a, double b) : snr_db(snr), alpha(a), beta(b) {}

  double snr_db = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> de_sum_rate;
  std::optional<double> mc_sum_rate;
  std::optional<double> mc_std_err;
  std::string binding;
  std::optional<double> e;
  std::optional<double> t1;
  std::optional<double> t2;
  std::optional<double> nu_bar;
};

/// Writes the sweep table. Rates are carried in nats and converted only
/// here when `bits` is set.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, bool bits) : os_(os), scale_(bits ? 1.0 / std::log(2.0) : 1.0) {}

  void timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os_ << "# generated " << buf << '\n';
  }

  void comment(const std::string& text) { os_ << "# " << text << '\n'; }

  void header() {
    os_ << "snr_db,alpha,beta,de_sum_rate,mc_sum_rate,mc_std_err,binding_constraint,e,t1,t2,nu_bar\n";
  }

  void row(const CsvRow& r) {
    using detail::format_double;
    const auto opt = [](const std::optional<double>& v, double scale = 1.0) {
      return v ? format_double(*v * scale) : std::string();
    };
    os_ << format_double(r.snr_db) << ',' << format_double(r.alpha) << ',' << format_double(r.beta) << ','
        << opt(r.de_sum_rate, scale_) << ',' << opt(r.mc_sum_rate, scale_) << ',' << opt(r.mc_std_err, scale_) << ','
        << r.binding << ',' << opt(r.e) << ',' << opt(r.t1) << ',' << opt(r.t2) << ',' << opt(r.nu_bar) << '\n';
  }

  void failure(double snr_db, double alpha, double beta, const std::string& what) {
    comment("FAILED " + what);
    CsvRow r(snr_db, alpha, beta);
    r.binding = "FAILED";
    row(r);
    os_.flush();
  }

 private:
  std::ostream& os_;
  double scale_;
};

// --------------------------------------------------------------------- driver

enum ExitCode : int { kExitOk = 0, kExitChecksFailed = 1, kExitConfig = 2, kExitNumerical = 3 };

struct RunOptions {
  bool bits = false;
  unsigned threads = 0;
  bool timestamp = true;
};

/// Config for one SNR point: P_T from the SNR and, when an interference
/// level is given, thresholds from it.
inline NetworkConfig config_at(const ExperimentSpec& spec, double snr_db) {
  if (spec.interference_db) return at_operating_point(spec.config, snr_db, *spec.interference_db);
  NetworkConfig c = spec.config;
  c.p_t = db_to_linear(snr_db) * c.sigma2;
  return c;
}

namespace detail {

inline void fill_de(CsvRow& row, const NetworkConfig& cfg, double alpha, double beta) {
  const DeResult de = de_sinr(cfg, {alpha, beta});
  row.de_sum_rate = de.r_sum_bar;
  row.binding = de.binding.to_string();
  row.e = de.state.e;
  row.t1 = de.state.t1;
  row.t2 = de.state.t2;
  row.nu_bar = de.nu_bar;
}

/// (alpha, beta) cells for one SNR: the explicit grid product, alpha
/// optimized per listed beta, or the joint optimum.
inline std::vector<std::pair<double, double>> sweep_cells(const ExperimentSpec& spec, const NetworkConfig& cfg) {
  std::vector<std::pair<double, double>> cells;
  if (!spec.alpha_grid.empty()) {
    const std::vector<double> betas = spec.beta_grid.empty() ? std::vector<double>{0.0} : spec.beta_grid;
    for (double b : betas)
      for (double a : spec.alpha_grid) cells.emplace_back(a, b);
  } else if (!spec.beta_grid.empty()) {
    for (double b : spec.beta_grid) cells.emplace_back(optimize_alpha_given_beta(cfg, b).alpha, b);
  } else {
    const OptResult r = optimize_joint(cfg, {spec.beta_step, {}});
    cells.emplace_back(r.alpha_opt, r.beta_opt);
  }
  return cells;
}

inline McGrid mc_grid_for(const ExperimentSpec& spec) {
  McGrid g = McGrid::coarse();
  if (!spec.alpha_grid.empty()) g.alphas = spec.alpha_grid;
  if (!spec.beta_grid.empty()) g.betas = spec.beta_grid;
  return g;
}

}  // namespace detail

/// Runs one sweep and appends its rows (no header). Returns kExitOk or
/// kExitNumerical; on failure a marker row is written and the sweep stops.
inline int run_rows(const ExperimentSpec& spec, CsvWriter& csv, const RunOptions& opts) {
  McOptions mc;
  mc.n_trials = spec.trials;
  mc.threads = opts.threads;
  mc.nu_mode = spec.nu_mode;
  mc.nu_batch = spec.nu_batch;
  const RngSpec rng{spec.seed, 0};

  for (double snr : spec.snr_grid_db) {
    double alpha = 0.0;
    double beta = 0.0;
    try {
      const NetworkConfig cfg = config_at(spec, snr);
      if (spec.mode == Mode::Optimize && spec.objective == Objective::Mc) {
        const McOptResult r = optimize_mc(cfg, mc, detail::mc_grid_for(spec), rng);
        alpha = r.best.alpha_opt;
        beta = r.best.beta_opt;
        CsvRow row(snr, alpha, beta);
        detail::fill_de(row, cfg, alpha, beta);
        row.mc_sum_rate = r.best_estimate.mean;
        row.mc_std_err = r.best_estimate.std_err;
        csv.row(row);
        continue;
      }
      const auto cells = spec.mode == Mode::Optimize
                             ? std::vector<std::pair<double, double>>{[&] {
                                 const OptResult r = optimize_joint(cfg, {spec.beta_step, {}});
                                 return std::pair{r.alpha_opt, r.beta_opt};
                               }()}
                             : detail::sweep_cells(spec, cfg);
      for (const auto& [a, b] : cells) {
        alpha = a;
        beta = b;
        CsvRow row(snr, a, b);
        detail::fill_de(row, cfg, a, b);
        if (spec.mode == Mode::McSweep) {
          const RateEstimate est = ergodic_sum_rate_mc(cfg, {a, b}, mc, rng);
          row.mc_sum_rate = est.sum_rate.mean;
          row.mc_std_err = est.sum_rate.std_err;
        }
        csv.row(row);
      }
    } catch (const NumericalError& e) {
      csv.failure(snr, alpha, beta, e.what());
      return kExitNumerical;
    }
  }
  return kExitOk;
}

/// Validation report: suite,check,value,threshold,status,detail.
inline int run_validation(const ExperimentSpec& spec, std::ostream& os, const RunOptions& opts) {
  ValidationOptions vo;
  vo.trials = spec.trials;
  vo.seed = spec.seed;
  vo.threads = opts.threads;
  const auto results = run_suite(spec.suite, spec.config, vo);
  os << "suite,check,value,threshold,status,detail\n";
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    os << r.suite << ',' << r.name << ',' << detail::format_double(r.value) << ','
       << detail::format_double(r.threshold) << ',' << (r.passed ? "PASS" : "FAIL") << ',' << r.detail << '\n';
  }
  return all ? kExitOk : kExitChecksFailed;
}

/// Full run: header, rows, exit code.
inline int run(const ExperimentSpec& spec, std::ostream& os, const RunOptions& opts = {}) {
  spec.validate();
  if (spec.mode == Mode::Validate) return run_validation(spec, os, opts);
  CsvWriter csv(os, opts.bits);
  if (opts.timestamp) csv.timestamp();
  csv.header();
  return run_rows(spec, csv, opts);
}

// ---------------------------------------------------------------- figures

struct Series {
  std::string label;
  ExperimentSpec spec;
};

inline std::vector<double> default_snr_grid() { return {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0}; }

/// Desk-scale sweeps behind figures 2-6 (r1 = 1, r2 = 0.6, Case I).
/// Consecutive entries sharing a label form one series.
inline std::vector<Series> figure_series(int figure, std::size_t trials, std::uint64_t seed) {
  const auto base = [&](std::size_t n, std::size_t k, std::size_t l, double p_db) {
    ExperimentSpec s;
    s.config = uniform_config(n, k, l, 1.0, 0.6);
    s.snr_grid_db = default_snr_grid();
    s.interference_db = p_db;
    s.trials = trials;
    s.seed = seed;
    s.mode = Mode::McSweep;
    return s;
  };
  const auto label = [](std::size_t n, std::size_t k, std::size_t l, double p_db, const std::string& what) {
    return "n=" + std::to_string(n) + " k=" + std::to_string(k) + " l=" + std::to_string(l) +
           " p_db=" + detail::format_double(p_db) + " " + what;
  };

  std::vector<Series> out;
  switch (figure) {
    case 2:
      for (std::size_t n : {10u, 16u})
        for (double p : {-10.0, 0.0}) out.push_back({label(n, 8, 6, p, "de_opt"), base(n, 8, 6, p)});
      break;
    case 3: {
      out.push_back({label(16, 8, 6, 0.0, "de_opt"), base(16, 8, 6, 0.0)});
      auto mc = base(16, 8, 6, 0.0);
      mc.mode = Mode::Optimize;
      mc.objective = Objective::Mc;
      out.push_back({label(16, 8, 6, 0.0, "mc_opt"), mc});
      for (double b : {0.0, 1.0}) {
        auto s = base(16, 8, 6, 0.0);
        s.beta_grid = {b};
        out.push_back({label(16, 8, 6, 0.0, "beta=" + detail::format_double(b)), s});
      }
      break;
    }
    case 4:
    case 5:
      for (double p : {-10.0, 0.0}) {
        auto de = base(16, 8, 6, p);
        de.mode = Mode::Optimize;
        out.push_back({label(16, 8, 6, p, "de_opt"), de});
        auto mc = de;
        mc.objective = Objective::Mc;
        out.push_back({label(16, 8, 6, p, "mc_opt"), mc});
      }
      break;
    case 6:
      out.push_back({label(10, 8, 10, 0.0, "de_opt"), base(10, 8, 10, 0.0)});
      for (double b : {0.0, 0.2, 0.4, 0.6, 0.8})
        for (double snr : default_snr_grid()) {
          auto s = base(10, 8, 10, 0.0);
          s.snr_grid_db = {snr};
          s.beta_grid = {b};
          s.alpha_grid = {proposition1_relation(config_at(s, snr), b)};
          out.push_back({label(10, 8, 10, 0.0, "proposition1 beta=" + detail::format_double(b)), s});
        }
      break;
    default:
      throw ConfigError("repro --figure: expected one of 2, 3, 4, 5, 6");
  }
  return out;
}

inline int run_figure(int figure, std::size_t trials, std::uint64_t seed, std::ostream& os,
                      const RunOptions& opts = {}) {
  const auto series = figure_series(figure, trials, seed);
  CsvWriter csv(os, opts.bits);
  if (opts.timestamp) csv.timestamp();
  csv.comment("figure " + std::to_string(figure));
  csv.header();
  std::string current;
  for (const auto& s : series) {
    s.spec.validate();
    if (s.label != current) {
      csv.comment("series " + s.label);
      current = s.label;
    }
    if (const int rc = run_rows(s.spec, csv, opts); rc != kExitOk) return rc;
  }
  return kExitOk;
}

}  // namespace pprzf
