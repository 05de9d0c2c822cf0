// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// pprzf de-sweep | mc-sweep | optimize | validate | repro
//
// Exit codes: 0 success, 1 validation checks failed, 2 bad configuration,
// 3 numerical failure (the CSV is flushed up to a FAILED row).

#include "pprzf/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct Common {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  unsigned threads = 0;
  bool bits = false;
  std::vector<double> snr;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::optional<double> interference_db;
  bool no_timestamp = false;
};

void add_common(CLI::App* cmd, Common& c, bool grids) {
  cmd->add_option("--config", c.config_path, "Experiment file (key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_path, "Output path (default: experiment.output, else stdout)");
  cmd->add_option("--seed", c.seed, "Base RNG seed");
  cmd->add_option("--trials", c.trials, "Monte-Carlo trials");
  cmd->add_option("--threads", c.threads, "Worker threads (overrides PPRZF_THREADS)");
  cmd->add_flag("--bits", c.bits, "Report rates in bits instead of nats");
  cmd->add_flag("--no-timestamp", c.no_timestamp, "Omit the '# generated' line");
  if (!grids) return;
  cmd->add_option("--snr", c.snr, "SNR grid in dB");
  cmd->add_option("--alpha", c.alpha, "Alpha grid");
  cmd->add_option("--beta", c.beta, "Beta grid");
  cmd->add_option("--interference-db", c.interference_db, "Interference threshold P in dB");
}

pprzf::ExperimentSpec load_spec(const Common& c) {
  pprzf::ExperimentSpec spec;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw pprzf::ConfigError("--config: cannot read " + c.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    spec = pprzf::parse_spec(ss.str());
  }
  if (c.seed) spec.seed = *c.seed;
  if (c.trials) spec.trials = *c.trials;
  if (!c.snr.empty()) spec.snr_grid_db = c.snr;
  if (!c.alpha.empty()) spec.alpha_grid = c.alpha;
  if (!c.beta.empty()) spec.beta_grid = c.beta;
  if (c.interference_db) spec.interference_db = c.interference_db;
  return spec;
}

template <typename Fn>
int with_output(const Common& c, const std::string& spec_path, Fn&& fn) {
  const std::string& path = !c.out_path.empty() ? c.out_path : spec_path;
  if (path.empty()) return fn(std::cout);
  std::ofstream out(path);
  if (!out) throw pprzf::ConfigError("--out: cannot write " + path);
  return fn(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PP-RZF precoding: deterministic equivalents, Monte-Carlo sweeps and optimization"};
  app.require_subcommand(1);

  Common common;
  auto* de_sweep = app.add_subcommand("de-sweep", "Deterministic sum-rate over the SNR grid");
  auto* mc_sweep = app.add_subcommand("mc-sweep", "Deterministic and Monte-Carlo sum-rate over the SNR grid");
  auto* optimize = app.add_subcommand("optimize", "Optimal (alpha, beta) per SNR");
  auto* validate = app.add_subcommand("validate", "Random-matrix and special-case self checks");
  auto* repro = app.add_subcommand("repro", "Desk-scale reproduction of a figure's sweep");
  for (auto* cmd : {de_sweep, mc_sweep, optimize}) add_common(cmd, common, true);
  add_common(validate, common, false);
  add_common(repro, common, false);

  std::string objective = "de";
  optimize->add_option("--objective", objective, "de or mc")->check(CLI::IsMember({"de", "mc"}));
  std::string suite = "all";
  validate->add_option("--suite", suite, "rmt, appendix, specialcases or all")
      ->check(CLI::IsMember({"rmt", "appendix", "specialcases", "all"}));
  int figure = 2;
  repro->add_option("--figure", figure, "Figure number")->required()->check(CLI::Range(2, 6));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pprzf::kExitConfig;
  }

  pprzf::RunOptions opts;
  opts.bits = common.bits;
  opts.threads = common.threads;
  opts.timestamp = !common.no_timestamp;

  try {
    pprzf::ExperimentSpec spec = load_spec(common);
    if (repro->parsed()) {
      const std::size_t trials = common.trials.value_or(spec.trials);
      return with_output(common, spec.output_path,
                         [&](std::ostream& os) { return pprzf::run_figure(figure, trials, spec.seed, os, opts); });
    }
    if (de_sweep->parsed()) spec.mode = pprzf::Mode::DeSweep;
    if (mc_sweep->parsed()) spec.mode = pprzf::Mode::McSweep;
    if (optimize->parsed()) {
      spec.mode = pprzf::Mode::Optimize;
      spec.objective = pprzf::parse_objective(objective, "--objective");
    }
    if (validate->parsed()) {
      spec.mode = pprzf::Mode::Validate;
      spec.suite = pprzf::parse_suite(suite, "--suite");
      if (!common.trials) spec.trials = 200;
    }
    return with_output(common, spec.output_path, [&](std::ostream& os) { return pprzf::run(spec, os, opts); });
  } catch (const pprzf::ConfigError& e) {
    std::cerr << "pprzf: configuration error: " << e.what() << '\n';
    return pprzf::kExitConfig;
  } catch (const pprzf::NumericalError& e) {
    std::cerr << "pprzf: numerical failure: " << e.what() << '\n';
    return pprzf::kExitNumerical;
  }
}
