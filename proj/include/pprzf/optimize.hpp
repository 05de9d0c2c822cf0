// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// Choosing (alpha, beta). The deterministic sum-rate is maximized by a
// nested search: an exhaustive sweep over beta in [0, 1] and, for each beta,
// a log-grid scan over alpha refined by golden-section search. A plain
// Monte-Carlo grid search serves as the reference.

#pragma once

#include "pprzf/detequiv.hpp"
#include "pprzf/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pprzf {

struct LineSearchOptions {
  double alpha_min = 1e-6;
  double alpha_max = 1e3;
  std::size_t grid_points = 64;
  double rel_width = 1e-6;
};

struct AlphaSearch {
  double alpha = 0.0;
  double objective = 0.0;
  bool grid_fallback = false;  // golden-section refinement lost to the coarse grid
};

/// Deterministic sum-rate, or -inf where the fixed point cannot be trusted.
inline double de_sum_rate(const NetworkConfig& config, double alpha, double beta) {
  try {
    return de_sinr(config, {alpha, beta}).r_sum_bar;
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

inline AlphaSearch optimize_alpha_given_beta(const NetworkConfig& config, double beta,
                                             const LineSearchOptions& opts = {}) {
  config.validate();
  detail::require(beta >= 0.0 && beta <= 1.0, "optimize_alpha_given_beta: beta must lie in [0, 1]");
  detail::require(opts.alpha_min > 0.0 && opts.alpha_max > opts.alpha_min && opts.grid_points >= 3,
                  "optimize_alpha_given_beta: invalid search range");

  const auto grid = log_grid(opts.alpha_min, opts.alpha_max, opts.grid_points);
  std::size_t best = grid.size();
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = de_sum_rate(config, grid[i], beta);
    if (std::isfinite(v) && (best == grid.size() || v > best_val)) {
      best = i;
      best_val = v;
    }
  }
  if (best == grid.size()) throw NumericalError("optimize_alpha_given_beta: objective non-finite at every probe");

  // Golden section on log(alpha) over the neighbouring grid cells.
  double lo = std::log(grid[best == 0 ? 0 : best - 1]);
  double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  const auto f = [&](double x) { return de_sum_rate(config, std::exp(x), beta); };
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  // log width ~ relative width for small widths
  while (hi - lo > opts.rel_width) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double x_star = 0.5 * (lo + hi);
  const double v_star = f(x_star);
  if (std::isfinite(v_star) && v_star >= best_val) return {std::exp(x_star), v_star, false};
  return {grid[best], best_val, true};
}

struct OptProbe {
  double beta = 0.0;
  double alpha = 0.0;
  double objective = 0.0;
};

struct OptResult {
  double alpha_opt = 0.0;
  double beta_opt = 0.0;
  double objective = 0.0;
  std::vector<OptProbe> trace;
};

struct JointSearchOptions {
  double beta_step = 0.01;
  LineSearchOptions line;
};

inline std::vector<double> beta_grid(double step) {
  detail::require(step > 0.0 && step <= 1.0, "beta grid: step must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = std::min(1.0, static_cast<double>(i) * step);
  g.back() = 1.0;
  return g;
}

/// Nested search maximizing the deterministic sum-rate.
inline OptResult optimize_joint(const NetworkConfig& config, const JointSearchOptions& opts = {}) {
  OptResult res;
  res.objective = -std::numeric_limits<double>::infinity();
  for (double beta : beta_grid(opts.beta_step)) {
    AlphaSearch s;
    try {
      s = optimize_alpha_given_beta(config, beta, opts.line);
    } catch (const NumericalError&) {
      continue;
    }
    res.trace.push_back({beta, s.alpha, s.objective});
    if (s.objective > res.objective) {
      res.objective = s.objective;
      res.alpha_opt = s.alpha;
      res.beta_opt = beta;
    }
  }
  if (res.trace.empty()) throw NumericalError("optimize_joint: no beta produced a finite objective");
  return res;
}

/// Brute-force argmax of the deterministic sum-rate on an n_beta x n_alpha
/// grid (beta uniform on [0, 1], alpha log-uniform).
inline OptResult dense_grid_max(const NetworkConfig& config, std::size_t n_beta = 101, std::size_t n_alpha = 64,
                                double alpha_min = 1e-6, double alpha_max = 1e3) {
  OptResult res;
  res.objective = -std::numeric_limits<double>::infinity();
  const auto alphas = log_grid(alpha_min, alpha_max, n_alpha);
  for (std::size_t i = 0; i < n_beta; ++i) {
    const double beta = n_beta == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n_beta - 1);
    for (double alpha : alphas) {
      const double v = de_sum_rate(config, alpha, beta);
      if (v > res.objective) res = {alpha, beta, v, {}};
    }
  }
  return res;
}

/// Optimal alpha paired with `beta` when L = N and R1 = r1 I:
///   alpha = nu0 (1 - beta)^2 / (rho c1 r1),   nu0 = r1 max{1, max_l r2_l/theta_l}
/// (Case I) or r1 max{1, tr R2 / theta_all} (Case II). Every such pair attains
/// the same, maximal, deterministic sum-rate.
inline double proposition1_relation(const NetworkConfig& config, double beta) {
  config.validate();
  detail::require(config.n_pus == config.n_antennas, "proposition1_relation: requires L = N");
  const double r1 = config.r1.front();
  detail::require(std::all_of(config.r1.begin(), config.r1.end(),
                              [r1](double r) { return std::abs(r - r1) <= 1e-12 * r1; }),
                  "proposition1_relation: requires uniform r1");
  detail::require(beta >= 0.0 && beta < 1.0, "proposition1_relation: beta must lie in [0, 1)");
  const double nu0 = r1 * std::max(1.0, config.interference_ratio());
  return nu0 * (1.0 - beta) * (1.0 - beta) / (config.rho() * config.c1() * r1);
}

struct McGrid {
  std::vector<double> alphas;
  std::vector<double> betas;

  /// 16 log-spaced alphas on [1e-4, 10] by 11 betas on {0, 0.1, ..., 1}.
  static McGrid coarse() {
    McGrid g;
    g.alphas = log_grid(1e-4, 10.0, 16);
    g.betas = beta_grid(0.1);
    return g;
  }
};

struct McCell {
  double alpha = 0.0;
  double beta = 0.0;
  McEstimate estimate;
};

struct McOptResult {
  OptResult best;
  McEstimate best_estimate;
  std::vector<McCell> cells;  // beta-major order
};

/// Monte-Carlo grid argmax. Every cell sees the same channel draws (common
/// random numbers), so cell differences are not masked by sampling noise.
inline McOptResult optimize_mc(const NetworkConfig& config, const McOptions& opts, const McGrid& grid,
                               const RngSpec& rng) {
  detail::require(!grid.alphas.empty() && !grid.betas.empty(), "optimize_mc: empty grid");
  McOptResult out;
  out.cells.resize(grid.alphas.size() * grid.betas.size());
  McOptions inner = opts;
  inner.threads = 1;
  parallel_for(out.cells.size(), opts.threads, [&](std::size_t i) {
    const double beta = grid.betas[i / grid.alphas.size()];
    const double alpha = grid.alphas[i % grid.alphas.size()];
    out.cells[i] = {alpha, beta, ergodic_sum_rate_mc(config, {alpha, beta}, inner, rng).sum_rate};
  });

  out.best.objective = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < grid.betas.size(); ++b) {
    const McCell* row_best = nullptr;
    for (std::size_t a = 0; a < grid.alphas.size(); ++a) {
      const McCell& c = out.cells[b * grid.alphas.size() + a];
      if (!row_best || c.estimate.mean > row_best->estimate.mean) row_best = &c;
    }
    out.best.trace.push_back({row_best->beta, row_best->alpha, row_best->estimate.mean});
    if (row_best->estimate.mean > out.best.objective) {
      out.best.objective = row_best->estimate.mean;
      out.best.alpha_opt = row_best->alpha;
      out.best.beta_opt = row_best->beta;
      out.best_estimate = row_best->estimate;
    }
  }
  return out;
}

}  // namespace pprzf
