// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// Large-system deterministic equivalents of the PP-RZF SINR and sum-rate.
//
// Everything is driven by the scalar e solving
//
//   e = (1/N) sum_k r1_k / (alpha + (t1 + (1-beta)^2 t2) r1_k),
//   t1 = (1 - c2) / (1 + e),   t2 = c2 / (1 + (1-beta)^2 e).
//
// The power terms need de/dalpha, which is negative. The quantities built
// from it (interference power, normalization) are positive, so they are
// formed with -de/dalpha throughout.

#pragma once

#include "pprzf/channel.hpp"
#include "pprzf/expectations.hpp"
#include "pprzf/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace pprzf {

struct FixedPointOptions {
  double damping = 0.5;
  double tolerance = 1e-13;  // on |e_new - e|, relative to max(1, e)
  std::size_t max_iterations = 100000;
  double initial_e = 1.0;
};

struct FixedPointState {
  double e = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double de_dalpha = 0.0;
  double residual = 0.0;  // |rhs(e) - e|
  std::size_t iterations = 0;
  bool bracketed = false;  // true when the damped iteration stalled and bisection finished the job
};

namespace detail {

struct FixedPointMap {
  const std::vector<double>& r1;
  double inv_n;
  double c2;
  double alpha;
  double b2;  // (1 - beta)^2

  [[nodiscard]] double t1(double e) const { return (1.0 - c2) / (1.0 + e); }
  [[nodiscard]] double t2(double e) const { return c2 / (1.0 + b2 * e); }
  [[nodiscard]] double slope(double e) const { return t1(e) + b2 * t2(e); }

  [[nodiscard]] double operator()(double e) const {
    const double s = slope(e);
    double acc = 0.0;
    for (double r : r1) acc += r / (alpha + s * r);
    return inv_n * acc;
  }
};

inline FixedPointMap make_map(const NetworkConfig& config, const PrecoderParams& params) {
  const double one_minus_beta = 1.0 - params.beta;
  return {config.r1, 1.0 / static_cast<double>(config.n_antennas), config.c2(), params.alpha,
          one_minus_beta * one_minus_beta};
}

}  // namespace detail

/// Closed form of de/dalpha at a converged fixed point (negative).
inline double e_alpha_derivative(const FixedPointState& state, const NetworkConfig& config,
                                 const PrecoderParams& params) {
  const auto map = detail::make_map(config, params);
  const double s = state.t1 + map.b2 * state.t2;
  double sum_sq = 0.0;   // (1/N) tr R1 (alpha I + s R1)^{-2}
  double sum_sq2 = 0.0;  // (1/N) tr (R1 (alpha I + s R1)^{-1})^2
  for (double r : config.r1) {
    const double d = params.alpha + s * r;
    sum_sq += r / (d * d);
    sum_sq2 += (r / d) * (r / d);
  }
  sum_sq *= map.inv_n;
  sum_sq2 *= map.inv_n;
  const double coupling = state.t1 / (1.0 + state.e) + map.b2 * map.b2 * state.t2 / (1.0 + map.b2 * state.e);
  const double denom = 1.0 - coupling * sum_sq2;
  if (!(denom > 0.0)) throw NumericalError("e_alpha_derivative: non-positive denominator, fixed point is not valid");
  return -sum_sq / denom;
}

/// Damped Picard iteration on the fully coupled map (t1, t2 refreshed every
/// step). If the iteration has not settled after max_iterations, the root is
/// finished by bisection on [0, tr(R1)/(N alpha)], which always brackets it.
inline FixedPointState solve_fixed_point(const NetworkConfig& config, const PrecoderParams& params,
                                         const FixedPointOptions& opts = {}) {
  config.validate();
  params.validate();
  const auto map = detail::make_map(config, params);

  FixedPointState st;
  double e = opts.initial_e;
  bool converged = false;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    const double next = (1.0 - opts.damping) * e + opts.damping * map(e);
    const double step = std::abs(next - e);
    e = next;
    st.iterations = it + 1;
    if (step <= opts.tolerance * std::max(1.0, e)) {
      converged = true;
      break;
    }
  }
  if (!converged || !(e > 0.0)) {
    double lo = 0.0;
    double hi = map.inv_n * std::accumulate(config.r1.begin(), config.r1.end(), 0.0) / params.alpha;
    for (int it = 0; it < 400 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (map(mid) - mid > 0.0 ? lo : hi) = mid;
    }
    e = 0.5 * (lo + hi);
    st.bracketed = true;
  }

  st.e = e;
  st.t1 = map.t1(e);
  st.t2 = map.t2(e);
  st.residual = std::abs(map(e) - e);
  if (!(st.e > 0.0) || !std::isfinite(st.e) || st.residual > 1e-12 * std::max(1.0, e))
    throw NumericalError("solve_fixed_point: no converged solution (residual " + std::to_string(st.residual) + ")");
  st.de_dalpha = e_alpha_derivative(st, config, params);
  return st;
}

enum class DeWarning { None, EmptyNullSpace };

struct DeResult {
  std::vector<double> a_bar;
  std::vector<double> b_bar;
  double nu_bar = 0.0;
  Binding binding;
  std::vector<double> gamma_bar;
  double r_sum_bar = 0.0;
  FixedPointState state;
  ExpectationEstimate expectations;  // deterministic equivalents of the normalization terms
  DeWarning warning = DeWarning::None;
};

/// Deterministic equivalents of the three power terms behind nu:
///   transmit  dt1/dalpha + dt2/dalpha
///   PU l      (r2_l / c2) dt2/dalpha
///   sum       (tr R2 / c2) dt2/dalpha
inline ExpectationEstimate de_expectations(const FixedPointState& st, const NetworkConfig& config,
                                           const PrecoderParams& params) {
  const double b2 = (1.0 - params.beta) * (1.0 - params.beta);
  const double neg_de = -st.de_dalpha;
  const double dt1 = st.t1 / (1.0 + st.e) * neg_de;
  const double dt2 = b2 * st.t2 / (1.0 + b2 * st.e) * neg_de;
  ExpectationEstimate ex;
  ex.transmit_trace = dt1 + dt2;
  ex.pu_quadratics.resize(config.n_pus);
  const double c2 = config.c2();
  for (std::size_t l = 0; l < config.n_pus; ++l) {
    ex.pu_quadratics[l] = config.r2[l] / c2 * dt2;
    ex.sum_interference += ex.pu_quadratics[l];
  }
  return ex;
}

inline ExpectationEstimate de_expectations(const NetworkConfig& config, const PrecoderParams& params) {
  return de_expectations(solve_fixed_point(config, params), config, params);
}

inline DeResult de_sinr(const NetworkConfig& config, const PrecoderParams& params,
                        const FixedPointOptions& opts = {}) {
  DeResult res;
  res.state = solve_fixed_point(config, params, opts);
  const auto& st = res.state;
  const double one_minus_beta = 1.0 - params.beta;
  const double b2 = one_minus_beta * one_minus_beta;
  const double neg_de = -st.de_dalpha;
  const double rho = config.rho();
  const double w1 = st.t1 / (1.0 + st.e);
  const double w2 = b2 * st.t2 / (1.0 + b2 * st.e);

  res.expectations = de_expectations(st, config, params);
  const NuSelection sel = select_nu(res.expectations, config);
  res.nu_bar = sel.nu;
  res.binding = sel.binding;

  const std::size_t k_users = config.n_sus;
  res.a_bar.resize(k_users);
  res.b_bar.resize(k_users);
  res.gamma_bar.resize(k_users);

  const bool empty_null_space = params.beta == 1.0 && config.n_pus == config.n_antennas;
  if (empty_null_space) res.warning = DeWarning::EmptyNullSpace;

  for (std::size_t k = 0; k < k_users; ++k) {
    const double r = config.r1[k];
    const double a = r * (st.t1 + st.t2 * one_minus_beta) / (params.alpha + r * (st.t1 + st.t2 * b2));
    const double u = 1.0 - one_minus_beta * a;
    const double b = r * ((1.0 - a) * (1.0 - a) * w1 + u * u * w2) * neg_de;
    res.a_bar[k] = a;
    res.b_bar[k] = b;
    res.gamma_bar[k] = empty_null_space ? 0.0 : rho * a * a / (rho * b + res.nu_bar);
    res.r_sum_bar += std::log1p(res.gamma_bar[k]);
  }
  return res;
}

/// Marcenko-Pastur type constants; zeta(1, eta, alpha) is the Stieltjes
/// transform of the MP law with ratio eta evaluated at -alpha.
struct MpParams {
  double mu = 1.0;   // (N - L) / N
  double eta = 1.0;  // K / N
  double zeta = 0.0;
};

inline MpParams zeta_closed_form(double mu, double eta, double alpha) {
  detail::require(alpha > 0.0, "zeta_closed_form: alpha must be > 0");
  detail::require(eta > 0.0, "zeta_closed_form: eta must be > 0");
  detail::require(mu >= 0.0 && mu <= 1.0, "zeta_closed_form: mu must lie in [0, 1]");
  const double d = (mu - eta) / alpha;
  const double disc = d * d + 2.0 * (mu + eta) / alpha + 1.0;
  const double root = std::sqrt(disc);
  // for d < 1 the rationalized form avoids cancellation; disc - (d-1)^2 = 4 mu / alpha
  if (d >= 1.0) return {mu, eta, 0.5 * (d - 1.0 + root)};
  return {mu, eta, 2.0 * mu / (alpha * (root - d + 1.0))};
}

/// zeta solves alpha z^2 + (alpha + eta - mu) z - mu = 0; returns the defect.
inline double zeta_residual(const MpParams& p, double alpha) {
  return alpha * p.zeta * p.zeta + (alpha + p.eta - p.mu) * p.zeta - p.mu;
}

struct Corollary1Result {
  double gamma_bar = 0.0;
  double e = 0.0;
  double nu0 = 0.0;
  std::optional<double> gamma_two_branch;  // Case II only
};

/// Special case L = N, R1 = r1 I, beta < 1. Scalar fixed point
///   e = r1 (1 + b2 e) / (c1 alpha (1 + b2 e) + c1 r1 b2),   b2 = (1-beta)^2
/// and gamma = rho (c1 r1^2 - (c1 alpha e - r1)^2) / (rho (c1 alpha e)^2 + nu0).
inline Corollary1Result corollary1_sinr(const NetworkConfig& config, const PrecoderParams& params,
                                        const FixedPointOptions& opts = {}) {
  config.validate();
  params.validate();
  detail::require(config.n_pus == config.n_antennas, "corollary1_sinr: requires L = N");
  const double r1 = config.r1.front();
  detail::require(std::all_of(config.r1.begin(), config.r1.end(),
                              [r1](double r) { return std::abs(r - r1) <= 1e-12 * r1; }),
                  "corollary1_sinr: requires uniform r1");
  detail::require(params.beta < 1.0, "corollary1_sinr: requires beta < 1");

  const double c1 = config.c1();
  const double alpha = params.alpha;
  const double b2 = (1.0 - params.beta) * (1.0 - params.beta);
  const auto rhs = [&](double e) { return r1 * (1.0 + b2 * e) / (c1 * alpha * (1.0 + b2 * e) + c1 * r1 * b2); };

  double e = opts.initial_e;
  bool converged = false;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    const double next = (1.0 - opts.damping) * e + opts.damping * rhs(e);
    const double step = std::abs(next - e);
    e = next;
    if (step <= opts.tolerance * std::max(1.0, e)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("corollary1_sinr: fixed point did not converge");

  Corollary1Result res;
  res.e = e;
  res.nu0 = r1 * std::max(1.0, config.interference_ratio());
  const double rho = config.rho();
  const double cae = c1 * alpha * e;
  const double numerator = c1 * r1 * r1 - (cae - r1) * (cae - r1);
  res.gamma_bar = rho * numerator / (rho * cae * cae + res.nu0);

  if (const auto* sum = std::get_if<SumPowerConstraint>(&config.constraint)) {
    // rho sigma^2 tr(R2) / P_all with P_all = theta_all P_T.
    const double tr_r2 = std::accumulate(config.r2.begin(), config.r2.end(), 0.0);
    const double p_all = sum->theta_all * config.p_t;
    const double load = rho * config.sigma2 * tr_r2 / p_all;
    const double floor = load <= 1.0 ? r1 / rho : r1 * config.sigma2 * tr_r2 / p_all;
    res.gamma_two_branch = numerator / (cae * cae + floor);
    if (std::abs(*res.gamma_two_branch - res.gamma_bar) > 1e-9 * std::max(1.0, res.gamma_bar))
      throw NumericalError("corollary1_sinr: two-branch form disagrees with the direct form");
  }
  return res;
}

}  // namespace pprzf
