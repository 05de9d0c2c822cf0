// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// End-to-end acceptance run. Prints one PASS/FAIL line per criterion,
// followed by indented detail lines, and exits nonzero if any criterion
// fails. Tolerances are fixed here on purpose.

#include "pprzf/detequiv.hpp"
#include "pprzf/montecarlo.hpp"
#include "pprzf/optimize.hpp"
#include "pprzf/rmt_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace pprzf;

namespace {

// ---- pinned tolerances
constexpr double kDeRelTol = 0.03;          // 1: DE vs MC, relative
constexpr double kDeSeTol = 3.0;            // 1: ... or this many standard errors
constexpr std::size_t kDeTrials = 10000;    // 1
constexpr double kDeMinutes = 5.0;          // 1
constexpr double kSaturationTol = 0.05;     // 2: 20 -> 30 dB change when interference-limited
constexpr double kGrowthMin = 0.15;         // 2: 20 -> 30 dB growth when not
constexpr std::size_t kSatTrials = 10000;   // 2
constexpr double kOptRelTol = 0.02;         // 3
constexpr double kOptSeTol = 3.0;           // 3
constexpr std::size_t kOptTrials = 1000;    // 3
constexpr double kOptMinutes = 15.0;        // 3
constexpr double kBetaLowMax = 0.2;         // 4: "close to 0" at -10 dB
constexpr double kBetaHighMin = 0.8;        // 4: "close to 1" at 30 dB
constexpr int kMaxInversions = 1;           // 4, 9
constexpr double kEndpointTol = 0.02;       // 5
constexpr double kProp1FlatTol = 1e-6;      // 6
constexpr double kProp1GridTol = 1e-3;      // 6
constexpr double kUnitTol = 1e-12;          // 7
constexpr double kFdTol = 1e-4;             // 8
constexpr double kRmtTol = 0.03;            // 9
constexpr std::size_t kRmtTrials = 200;     // 9
constexpr double kRmtMinutes = 10.0;        // 9
constexpr double kExactTol = 1e-10;         // 9 exact identities, 10

using Clock = std::chrono::steady_clock;

double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void note(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    details.emplace_back(buf);
  }
  void require(bool ok, const char* what) {
    if (!ok) {
      pass = false;
      details.push_back(std::string("violated: ") + what);
    }
  }
};

NetworkConfig ref_config(std::size_t n, std::size_t k, std::size_t l, double snr_db, double p_db) {
  return at_operating_point(uniform_config(n, k, l, 1.0, 0.6), snr_db, p_db);
}

McOptions mc_opts(std::size_t trials) {
  McOptions o;
  o.n_trials = trials;
  return o;
}

// 1. DE accuracy at N = 16 on the DE-optimal pair.
Outcome de_accuracy() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double snr : {0.0, 10.0, 20.0}) {
    const auto c = ref_config(16, 8, 6, snr, 0.0);
    const auto opt = optimize_joint(c);
    const PrecoderParams p{opt.alpha_opt, opt.beta_opt};
    const auto mc = ergodic_sum_rate_mc(c, p, mc_opts(kDeTrials), RngSpec{101, 0});
    const double de = opt.objective;
    const double gap = std::abs(mc.sum_rate.mean - de);
    const double allowed = std::max(kDeSeTol * mc.sum_rate.std_err, kDeRelTol * de);
    o.note("snr=%g dB alpha=%.4g beta=%.2f de=%.5f mc=%.5f se=%.5f gap=%.3f%% allowed=%.3f%%", snr, p.alpha, p.beta,
           de, mc.sum_rate.mean, mc.sum_rate.std_err, 100.0 * gap / de, 100.0 * allowed / de);
    o.require(gap <= allowed, "|MC - DE| <= max(3 se, 3% DE)");

    auto alt = mc_opts(kDeTrials);
    alt.nu_mode = NuMode::Mc;
    const auto mc_nu = ergodic_sum_rate_mc(c, p, alt, RngSpec{101, 0});
    o.note("  same with sample-mean normalization: mc=%.5f (not graded)", mc_nu.sum_rate.mean);
  }
  const double mins = minutes_since(t0);
  o.note("runtime %.2f min (limit %.0f)", mins, kDeMinutes);
  o.require(mins <= kDeMinutes, "runtime");
  return o;
}

// 2. Saturation at N = 10 versus growth at N = 16, P = -10 dB.
Outcome saturation() {
  Outcome o;
  const auto rate = [](std::size_t n, double snr, std::optional<double> beta) {
    const auto c = ref_config(n, 8, 6, snr, -10.0);
    PrecoderParams p;
    if (beta) {
      p = {optimize_alpha_given_beta(c, *beta).alpha, *beta};
    } else {
      const auto opt = optimize_joint(c);
      p = {opt.alpha_opt, opt.beta_opt};
    }
    return std::pair{ergodic_sum_rate_mc(c, p, mc_opts(kSatTrials), RngSpec{202, n}).sum_rate.mean, p};
  };
  const auto [r10_20, p10_20] = rate(10, 20.0, 0.0);
  const auto [r10_30, p10_30] = rate(10, 30.0, 0.0);
  const double change10 = (r10_30 - r10_20) / r10_20;
  o.note("N=10 beta=0: R(20 dB)=%.4f R(30 dB)=%.4f change=%.2f%%", r10_20, r10_30, 100.0 * change10);
  o.require(std::abs(change10) < kSaturationTol, "N=10 changes by < 5% from 20 to 30 dB");

  const auto [r16_20, p16_20] = rate(16, 20.0, std::nullopt);
  const auto [r16_30, p16_30] = rate(16, 30.0, std::nullopt);
  const double growth16 = (r16_30 - r16_20) / r16_20;
  o.note("N=16 optimal pair (beta=%.2f, %.2f): R(20 dB)=%.4f R(30 dB)=%.4f growth=%.2f%%", p16_20.beta, p16_30.beta,
         r16_20, r16_30, 100.0 * growth16);
  o.require(growth16 > kGrowthMin, "N=16 grows by > 15% from 20 to 30 dB");

  const auto [r16b_20, q1] = rate(16, 20.0, 0.0);
  const auto [r16b_30, q2] = rate(16, 30.0, 0.0);
  o.note("  N=16 at beta=0 for comparison: growth=%.2f%% (not graded)", 100.0 * (r16b_30 - r16b_20) / r16b_20);
  const auto [r10o_20, q3] = rate(10, 20.0, std::nullopt);
  const auto [r10o_30, q4] = rate(10, 30.0, std::nullopt);
  o.note("  N=10 at its optimal pair: change=%.2f%% (not graded)", 100.0 * (r10o_30 - r10o_20) / r10o_20);
  return o;
}

// 3. DE-optimal pair under MC versus the MC grid optimum.
Outcome optimizer_fidelity() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double snr : {-10.0, 10.0, 30.0}) {
    const auto c = ref_config(16, 8, 6, snr, 0.0);
    const RngSpec rng{303, 0};
    const auto grid = optimize_mc(c, mc_opts(kOptTrials), McGrid::coarse(), rng);
    const auto de = optimize_joint(c);
    const auto at_de = ergodic_sum_rate_mc(c, {de.alpha_opt, de.beta_opt}, mc_opts(kOptTrials), rng);
    const double shortfall = grid.best.objective - at_de.sum_rate.mean;
    const double allowed = kOptRelTol * grid.best.objective + kOptSeTol * grid.best_estimate.std_err;
    o.note("snr=%g dB grid best %.4f at (%.3g, %.1f); DE pair (%.3g, %.2f) gives %.4f; shortfall %.4f allowed %.4f",
           snr, grid.best.objective, grid.best.alpha_opt, grid.best.beta_opt, de.alpha_opt, de.beta_opt,
           at_de.sum_rate.mean, shortfall, allowed);
    o.require(shortfall <= allowed, "DE pair within 2% + 3 se of the MC grid optimum");
  }
  const double mins = minutes_since(t0);
  o.note("runtime %.2f min (limit %.0f)", mins, kOptMinutes);
  o.require(mins <= kOptMinutes, "runtime");
  return o;
}

// 4. Trends of the optimal pair with SNR.
Outcome parameter_trends() {
  Outcome o;
  for (double p_db : {-10.0, 0.0}) {
    std::vector<double> alphas;
    std::vector<double> betas;
    std::string line;
    for (double snr = -10.0; snr <= 30.0; snr += 5.0) {
      const auto opt = optimize_joint(ref_config(16, 8, 6, snr, p_db));
      alphas.push_back(opt.alpha_opt);
      betas.push_back(opt.beta_opt);
      char buf[64];
      std::snprintf(buf, sizeof buf, " (%.3g, %.2f)", opt.alpha_opt, opt.beta_opt);
      line += buf;
    }
    int a_inv = 0;
    int b_inv = 0;
    for (std::size_t i = 1; i < alphas.size(); ++i) {
      a_inv += alphas[i] > alphas[i - 1] * (1.0 + 1e-6);
      b_inv += betas[i] < betas[i - 1] - 0.01 - 1e-12;
    }
    o.note("P=%g dB (alpha, beta) over -10..30 dB:%s", p_db, line.c_str());
    o.note("  alpha inversions %d, beta inversions %d", a_inv, b_inv);
    o.require(a_inv <= kMaxInversions, "alpha_opt nonincreasing");
    o.require(b_inv <= kMaxInversions, "beta_opt nondecreasing");
    o.require(betas.front() <= kBetaLowMax, "beta_opt near 0 at -10 dB");
    o.require(betas.back() >= kBetaHighMin, "beta_opt near 1 at 30 dB");
  }
  return o;
}

// 5. Endpoint alphas.
Outcome endpoints() {
  Outcome o;
  for (double p_db : {-10.0, 0.0})
    for (double snr : {-10.0, 10.0, 30.0}) {
      const auto c = ref_config(16, 8, 6, snr, p_db);
      const double nu0 = std::max(1.0, c.interference_ratio());
      const double a0 = optimize_alpha_given_beta(c, 0.0).alpha;
      const double a1 = optimize_alpha_given_beta(c, 1.0).alpha;
      const double e0 = rel(a0, nu0 / (c.c1() * c.rho()));
      const double e1 = rel(a1, 1.0 / (c.c1() * c.rho()));
      o.note("P=%g snr=%g: beta=0 alpha %.5g (rel %.1e), beta=1 alpha %.5g (rel %.1e)", p_db, snr, a0, e0, a1, e1);
      o.require(e0 <= kEndpointTol && e1 <= kEndpointTol, "endpoint alpha within 2%");
    }
  return o;
}

// 6. Flat optimum along the proposition 1 curve.
Outcome proposition1() {
  Outcome o;
  for (bool per_pu : {true, false})
    for (double snr : {0.0, 10.0, 20.0}) {
      const auto c = at_operating_point(uniform_config(10, 8, 10, 1.0, 0.6, per_pu), snr, 0.0);
      std::vector<double> rates;
      for (double beta : {0.0, 0.2, 0.4, 0.6, 0.8}) rates.push_back(de_sum_rate(c, proposition1_relation(c, beta), beta));
      const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
      const double spread = (*hi - *lo) / *hi;
      const auto grid = dense_grid_max(c);
      const double grid_gap = rel(grid.objective, rates.front());
      o.note("%s snr=%g: curve %.6f spread %.1e, dense grid %.6f gap %.1e", per_pu ? "per_pu" : "sum", snr,
             rates.front(), spread, grid.objective, grid_gap);
      o.require(spread < kProp1FlatTol, "curve constant within 1e-6");
      o.require(grid_gap < kProp1GridTol, "curve matches the dense grid within 0.1%");
    }
  return o;
}

// 7. Fixed-point unit values.
Outcome unit_values() {
  Outcome o;
  const auto a = solve_fixed_point(uniform_config(8, 8, 4, 1.0, 1.0), {0.5, 0.0});
  o.note("c1=1 beta=0 alpha=0.5: e=%.15g residual %.1e", a.e, a.residual);
  o.require(std::abs(a.e - 1.0) < kUnitTol && a.residual < kUnitTol, "e = 1");
  const auto b = solve_fixed_point(uniform_config(8, 4, 4, 1.0, 1.0), {2.0 / 3.0, 1.0});
  o.note("c1=2 c2=0.5 beta=1 alpha=2/3: e=%.15g", b.e);
  o.require(std::abs(b.e - 0.5) < kUnitTol, "e = 0.5");
  const double z = zeta_closed_form(1.0, 1.0, 0.5).zeta;
  o.note("zeta(1, 1, 0.5) = %.15g", z);
  o.require(std::abs(z - 1.0) < kUnitTol, "zeta = 1");
  const double cross = 1.0 / (0.5 * (1.0 + a.e));
  o.note("1/(alpha(1+e)) = %.15g", cross);
  o.require(std::abs(cross - z) < kUnitTol, "cross identity");
  return o;
}

// 8. de/dalpha against central differences.
Outcome derivative() {
  Outcome o;
  const auto c = ref_config(16, 8, 6, 10.0, 0.0);
  double worst = 0.0;
  for (double alpha : {0.01, 0.1, 0.5, 2.0, 10.0})
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double h = 1e-5 * alpha;
      const double fd =
          (solve_fixed_point(c, {alpha + h, beta}).e - solve_fixed_point(c, {alpha - h, beta}).e) / (2.0 * h);
      worst = std::max(worst, rel(solve_fixed_point(c, {alpha, beta}).de_dalpha, fd));
    }
  o.note("worst relative error over the 5x5 grid: %.2e", worst);
  o.require(worst < kFdTol, "relative error < 1e-4");
  return o;
}

// 9. Random-matrix oracles at N = 256 and their trend from N = 64.
Outcome rmt_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  std::map<std::string, std::vector<double>> errors;
  std::vector<std::pair<std::string, double>> exact;
  for (std::size_t n : {64u, 128u, 256u}) {
    const auto c = ref_config(n, n / 2, 3 * n / 8, 10.0, 0.0);
    const RngSpec root{909, n};
    const CMatrix qs[] = {identity_q(n), random_diagonal_q(n, root.substream(1)), rank_one_spike_q(n, root.substream(2))};
    const char* qn[] = {"identity", "diagonal", "spike"};
    for (int i = 0; i < 3; ++i) {
      for (double beta : {0.0, 0.5, 1.0})
        errors[std::string("theorem2/") + qn[i] + "/beta=" + std::to_string(beta).substr(0, 3)].push_back(
            theorem2_check(c, {0.5, beta}, qs[i], kRmtTrials, root.substream(10 + i)).rel_error);
      const double l5 = lemma5_check(qs[i], 1.0, 0.5, n, kRmtTrials, root.substream(20 + i)).rel_error;
      // Q = I sees only the spectrum of a projection, which is not random
      if (i == 0)
        exact.emplace_back("lemma5/identity/N=" + std::to_string(n), l5);
      else
        errors[std::string("lemma5/") + qn[i]].push_back(l5);
    }
    const std::size_t k = 3 * n / 4;
    errors["lemma4/diagonal"].push_back(lemma4_check(random_diagonal_q(n, root.substream(30)),
                                                     random_diagonal_q(k, root.substream(31)), qs[1], 0.7, n, k,
                                                     kRmtTrials, root.substream(32))
                                            .rel_error);
    errors["lemma4/marcenko_pastur"].push_back(
        lemma4_check(identity_q(n), identity_q(k), identity_q(n), 0.7, n, k, kRmtTrials, root.substream(33))
            .rel_error);
    for (double beta : {0.0, 0.5, 1.0})
      for (const auto& p : appendix_b_quadratic_checks(c, {0.5, beta}, kRmtTrials, root.substream(40))) {
        const std::string name = "appendix/" + p.name + "/beta=" + std::to_string(beta).substr(0, 3);
        if (p.name == "pu_quadratic" && beta == 1.0) {
          exact.emplace_back(name + "/N=" + std::to_string(n), std::abs(p.mc_value));
          continue;
        }
        errors[name].push_back(p.rel_error);
      }
    if (n == 256) {
      exact.emplace_back("lemma5/c2=1", lemma5_check(qs[1], 1.0, 1.0, n, 2, root.substream(50)).rel_error);
      exact.emplace_back("lemma4/r=0", lemma4_check(qs[1], CMatrix::Zero(static_cast<Eigen::Index>(k),
                                                                         static_cast<Eigen::Index>(k)),
                                                    qs[1], 0.7, n, k, 2, root.substream(51))
                                           .rel_error);
    }
  }
  int worst_count = 0;
  for (const auto& [name, v] : errors) {
    int inv = 0;
    for (std::size_t i = 1; i < v.size(); ++i) inv += v[i] > v[i - 1];
    const bool ok = v.back() <= kRmtTol && inv <= kMaxInversions;
    o.note("%-40s N=64 %.2e  N=128 %.2e  N=256 %.2e%s", name.c_str(), v[0], v[1], v[2], ok ? "" : "  <-");
    if (!ok) ++worst_count;
  }
  for (const auto& [name, v] : exact) {
    o.note("%-40s exact identity, error %.1e", name.c_str(), v);
    o.require(v <= kExactTol, "exact identity");
  }
  o.require(worst_count == 0, "rel_error <= 3% at N=256 and shrinking from N=64 (one inversion allowed)");
  const double mins = minutes_since(t0);
  o.note("runtime %.2f min (limit %.0f)", mins, kRmtMinutes);
  o.require(mins <= kRmtMinutes, "runtime");
  return o;
}

// 10. Exact zeros of full projection.
Outcome exact_zeros() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t n : {16u, 64u})
    for (std::size_t t = 0; t < 200; ++t) {
      const auto c = ref_config(n, n / 2, 3 * n / 8, 10.0, 0.0);
      const auto real = sample_channels(c, RngSpec{1010, n}.substream(t));
      for (double alpha : {1e-3, 0.3, 10.0})
        worst = std::max(worst, (real.f * regularized_inverse(partially_project(real, 1.0), alpha)).norm());
    }
  o.note("beta=1: worst ||F G|| over 1200 realizations %.2e", worst);
  o.require(worst <= kExactTol, "||F G|| <= 1e-10");
  const auto c = ref_config(10, 8, 10, 10.0, 0.0);
  double g_max = 0.0;
  for (double alpha : {1e-3, 0.3, 10.0}) {
    const auto de = de_sinr(c, {alpha, 1.0});
    for (double g : de.gamma_bar) g_max = std::max(g_max, g);
  }
  o.note("c2=1, beta=1: max gamma_bar %.1e", g_max);
  o.require(g_max == 0.0, "gamma_bar = 0 exactly");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "de_accuracy", de_accuracy},
      {2, "interference_limited_saturation", saturation},
      {3, "optimizer_fidelity", optimizer_fidelity},
      {4, "parameter_trends", parameter_trends},
      {5, "closed_form_endpoints", endpoints},
      {6, "proposition1_flat_optimum", proposition1},
      {7, "fixed_point_unit_values", unit_values},
      {8, "derivative_check", derivative},
      {9, "rmt_oracles", rmt_oracles},
      {10, "exact_zero_projections", exact_zeros},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.details.push_back(std::string("exception: ") + e.what());
    }
    std::printf("%s %2d %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name, minutes_since(t0) * 60.0);
    for (const auto& d : out.details) std::printf("       %s\n", d.c_str());
    std::fflush(stdout);
    failed += !out.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
