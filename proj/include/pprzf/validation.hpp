// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// Self-check suites run by `pprzf validate`.

#pragma once

#include "pprzf/channel.hpp"
#include "pprzf/detequiv.hpp"
#include "pprzf/optimize.hpp"
#include "pprzf/rmt_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace pprzf {

enum class Suite { Rmt, Appendix, SpecialCases, All };

struct CheckResult {
  std::string suite;
  std::string name;
  double value = 0.0;      // the measured error (or value) compared to the threshold
  double threshold = 0.0;  // pass iff value <= threshold
  bool passed = false;
  std::string detail;
};

struct ValidationOptions {
  std::size_t n = 256;
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double tolerance = 0.03;  // relative, for Monte-Carlo probes
};

namespace detail {

inline CheckResult check(const std::string& suite, const std::string& name, double value, double threshold,
                         std::string detail = {}) {
  return {suite, name, value, threshold, std::isfinite(value) && value <= threshold, std::move(detail)};
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline CheckResult probe_check(const std::string& suite, const StieltjesProbe& p, double tol) {
  return check(suite, p.name, p.rel_error, tol, "mc=" + fmt(p.mc_value) + " de=" + fmt(p.de_value));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace detail

/// Scales the ratios and mean gains of `base` to n antennas.
inline NetworkConfig scaled_config(const NetworkConfig& base, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::max(1.0, std::round(static_cast<double>(n) / base.c1())));
  const auto l = static_cast<std::size_t>(std::clamp(std::round(static_cast<double>(n) * base.c2()), 1.0,
                                                     static_cast<double>(n)));
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  NetworkConfig c = uniform_config(n, k, l, mean(base.r1), mean(base.r2), base.is_per_pu());
  c.sigma2 = base.sigma2;
  c.p_t = base.p_t;
  return c;
}

inline std::vector<CheckResult> rmt_suite(const NetworkConfig& base, const ValidationOptions& o) {
  const std::string s = "rmt";
  std::vector<CheckResult> out;
  const NetworkConfig cfg = scaled_config(base, o.n);
  const RngSpec root{o.seed, 0x524D54};
  const CMatrix qs[] = {identity_q(o.n), random_diagonal_q(o.n, root.substream(1)),
                        rank_one_spike_q(o.n, root.substream(2))};
  const char* q_names[] = {"identity", "diagonal", "spike"};

  for (int i = 0; i < 3; ++i) {
    for (double beta : {0.0, 0.5, 1.0}) {
      auto p = theorem2_check(cfg, {0.5, beta}, qs[i], o.trials, root.substream(10 + i), o.threads);
      p.name = std::string("theorem2/") + q_names[i] + "/beta=" + detail::fmt(beta);
      out.push_back(detail::probe_check(s, p, o.tolerance));
    }
  }
  for (int i = 0; i < 3; ++i) {
    auto p = lemma5_check(qs[i], 1.0, 0.5, o.n, o.trials, root.substream(20 + i), o.threads);
    p.name = std::string("lemma5/") + q_names[i];
    out.push_back(detail::probe_check(s, p, o.tolerance));
  }
  {
    auto p = lemma5_check(qs[1], 1.0, 1.0, o.n, 2, root.substream(23), o.threads);
    p.name = "lemma5/c2=1";
    out.push_back(detail::check(s, p.name, p.rel_error, 1e-10));
  }

  const std::size_t k = std::max<std::size_t>(1, o.n / 2);
  const CMatrix t_diag = random_diagonal_q(o.n, root.substream(30));
  const CMatrix r_diag = random_diagonal_q(k, root.substream(31));
  {
    auto p = lemma4_check(identity_q(o.n), identity_q(k), identity_q(o.n), 0.7, o.n, k, o.trials,
                          root.substream(32), o.threads);
    const double mp = zeta_closed_form(1.0, static_cast<double>(k) / static_cast<double>(o.n), 0.7).zeta;
    p.name = "lemma4/marcenko_pastur";
    out.push_back(detail::check(s, p.name, detail::rel(p.mc_value, mp), 0.02,
                                "mc=" + detail::fmt(p.mc_value) + " mp=" + detail::fmt(mp)));
  }
  {
    auto p = lemma4_check(t_diag, CMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)), qs[1],
                          0.7, o.n, k, 2, root.substream(33), o.threads);
    p.name = "lemma4/r=0";
    out.push_back(detail::check(s, p.name, p.rel_error, 1e-10));
  }
  {
    auto p = lemma4_check(t_diag, r_diag, qs[1], 0.7, o.n, k, o.trials, root.substream(34), o.threads);
    p.name = "lemma4/diagonal";
    out.push_back(detail::probe_check(s, p, o.tolerance));
  }
  return out;
}

inline std::vector<CheckResult> appendix_suite(const NetworkConfig& base, const ValidationOptions& o) {
  const std::string s = "appendix";
  std::vector<CheckResult> out;
  const NetworkConfig cfg = scaled_config(base, o.n);
  const RngSpec root{o.seed, 0x415050};
  for (double beta : {0.0, 0.5, 1.0}) {
    const auto probes = appendix_b_quadratic_checks(cfg, {0.5, beta}, o.trials, root.substream(1), o.threads);
    for (const auto& p : probes) {
      const std::string name = p.name + "/beta=" + detail::fmt(beta);
      if (p.name == "pu_quadratic" && beta == 1.0) {
        out.push_back(detail::check(s, name, std::abs(p.mc_value), 1e-10));
        continue;
      }
      auto c = detail::probe_check(s, p, o.tolerance);
      c.name = name;
      out.push_back(std::move(c));
      if (p.fd_value)
        out.push_back(detail::check(s, name + "/fd", detail::rel(*p.fd_value, p.mc_value), 1e-3,
                                    "fd=" + detail::fmt(*p.fd_value) + " direct=" + detail::fmt(p.mc_value)));
    }
  }
  return out;
}

inline std::vector<CheckResult> special_cases_suite(const ValidationOptions& o) {
  const std::string s = "specialcases";
  std::vector<CheckResult> out;

  {
    const auto st = solve_fixed_point(uniform_config(8, 8, 4, 1.0, 1.0), {0.5, 0.0});
    out.push_back(detail::check(s, "fixed_point/e=1", std::abs(st.e - 1.0), 1e-12));
    out.push_back(detail::check(s, "fixed_point/e=1/residual", st.residual, 1e-12));
  }
  {
    const auto st = solve_fixed_point(uniform_config(8, 4, 4, 1.0, 1.0), {2.0 / 3.0, 1.0});
    out.push_back(detail::check(s, "fixed_point/e=0.5", std::abs(st.e - 0.5), 1e-12));
  }
  out.push_back(detail::check(s, "zeta/mu=1_eta=1_alpha=0.5", std::abs(zeta_closed_form(1.0, 1.0, 0.5).zeta - 1.0), 1e-12));
  {
    double worst = 0.0;
    for (std::size_t k : {4u, 8u, 16u})
      for (double alpha : {0.05, 0.5, 2.0}) {
        const auto cfg = uniform_config(16, k, 4, 1.0, 1.0);
        const auto st = solve_fixed_point(cfg, {alpha, 0.0});
        const double z = zeta_closed_form(1.0, 1.0 / cfg.c1(), alpha).zeta;
        worst = std::max(worst, std::abs(alpha * (1.0 + st.e) * z - 1.0));
      }
    out.push_back(detail::check(s, "zeta_cross_identity", worst, 1e-12));
  }
  {
    const auto cfg = at_operating_point(uniform_config(16, 8, 6, 1.0, 0.6), 10.0, 0.0);
    double worst = 0.0;
    for (double alpha : {0.01, 0.1, 0.5, 2.0, 10.0})
      for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto st = solve_fixed_point(cfg, {alpha, beta});
        const double h = 1e-5 * alpha;
        const double fd =
            (solve_fixed_point(cfg, {alpha + h, beta}).e - solve_fixed_point(cfg, {alpha - h, beta}).e) / (2.0 * h);
        worst = std::max(worst, detail::rel(st.de_dalpha, fd));
      }
    out.push_back(detail::check(s, "de_dalpha_vs_fd", worst, 1e-4));
  }
  for (bool per_pu : {true, false}) {
    auto cfg = at_operating_point(uniform_config(10, 8, 10, 1.0, 0.6, per_pu), 10.0, 0.0);
    double worst = 0.0;
    for (double alpha : {0.05, 0.3, 1.0})
      for (double beta : {0.0, 0.4, 0.9}) {
        const auto c = corollary1_sinr(cfg, {alpha, beta});
        worst = std::max(worst, detail::rel(c.gamma_bar, de_sinr(cfg, {alpha, beta}).gamma_bar.front()));
      }
    out.push_back(detail::check(s, std::string("corollary1_vs_general/") + (per_pu ? "per_pu" : "sum"), worst, 1e-9));
  }
  {
    auto cfg = uniform_config(16, 8, 6, 1.0, 0.6);
    double worst0 = 0.0;
    double worst1 = 0.0;
    for (double snr : {-10.0, 10.0, 30.0}) {
      const auto c = at_operating_point(cfg, snr, -10.0);
      const double nu0 = std::max(1.0, c.interference_ratio());
      worst0 = std::max(worst0, detail::rel(optimize_alpha_given_beta(c, 0.0).alpha, nu0 / (c.c1() * c.rho())));
      worst1 = std::max(worst1, detail::rel(optimize_alpha_given_beta(c, 1.0).alpha, 1.0 / (c.c1() * c.rho())));
    }
    out.push_back(detail::check(s, "alpha_opt/beta=0", worst0, 0.02));
    out.push_back(detail::check(s, "alpha_opt/beta=1", worst1, 0.02));
  }
  {
    const auto cfg = at_operating_point(uniform_config(10, 8, 10, 1.0, 0.6), 10.0, 0.0);
    std::vector<double> rates;
    for (double beta : {0.0, 0.2, 0.4, 0.6, 0.8})
      rates.push_back(de_sum_rate(cfg, proposition1_relation(cfg, beta), beta));
    const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
    out.push_back(detail::check(s, "proposition1/constant", (*hi - *lo) / *hi, 1e-6));
    const auto grid = dense_grid_max(cfg);
    out.push_back(detail::check(s, "proposition1/grid_max", detail::rel(grid.objective, rates.front()), 1e-3,
                                "curve=" + detail::fmt(rates.front()) + " grid=" + detail::fmt(grid.objective)));
  }
  {
    const auto cfg = at_operating_point(uniform_config(16, 8, 6, 1.0, 0.6), 10.0, 0.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < 20; ++t) {
      const auto real = sample_channels(cfg, RngSpec{o.seed, 0x5A45524F}.substream(t));
      const CMatrix g = regularized_inverse(partially_project(real, 1.0), 0.3);
      worst = std::max(worst, (real.f * g).norm());
    }
    out.push_back(detail::check(s, "beta=1/leakage", worst, 1e-10));
    const auto full = at_operating_point(uniform_config(10, 8, 10, 1.0, 0.6), 10.0, 0.0);
    const auto de = de_sinr(full, {0.3, 1.0});
    const double g_max = *std::max_element(de.gamma_bar.begin(), de.gamma_bar.end());
    out.push_back(detail::check(s, "beta=1_c2=1/gamma_bar", g_max, 0.0));
  }
  return out;
}

inline std::vector<CheckResult> run_suite(Suite suite, const NetworkConfig& base, const ValidationOptions& o) {
  std::vector<CheckResult> out;
  const auto append = [&](std::vector<CheckResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (suite == Suite::Rmt || suite == Suite::All) append(rmt_suite(base, o));
  if (suite == Suite::Appendix || suite == Suite::All) append(appendix_suite(base, o));
  if (suite == Suite::SpecialCases || suite == Suite::All) append(special_cases_suite(o));
  return out;
}

}  // namespace pprzf
