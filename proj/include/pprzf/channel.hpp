// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// Network description, channel sampling and the partial null-space
// projection of the secondary users' channel onto the primary users.

#pragma once

#include "pprzf/rng.hpp"
#include "pprzf/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

namespace pprzf {

/// Case I: average interference at PU l must stay below theta_l * P_T.
struct PerPuConstraint {
  std::vector<double> thetas;
  friend bool operator==(const PerPuConstraint&, const PerPuConstraint&) = default;
};

/// Case II: total average interference over all PUs below theta_all * P_T.
struct SumPowerConstraint {
  double theta_all = 1.0;
  friend bool operator==(const SumPowerConstraint&, const SumPowerConstraint&) = default;
};

using InterferenceConstraint = std::variant<PerPuConstraint, SumPowerConstraint>;

/// Largest admissible r2/theta ratio. The per-PU maximum in the noise
/// normalization is only meaningful for bounded ratios.
inline constexpr double kMaxInterferenceRatio = 1e12;

struct NetworkConfig {
  std::size_t n_antennas = 1;  // N
  std::size_t n_sus = 1;       // K
  std::size_t n_pus = 1;       // L
  std::vector<double> r1;      // path gains BS -> SU, size K
  std::vector<double> r2;      // path gains BS -> PU, size L
  double sigma2 = 1.0;
  double p_t = 1.0;
  InterferenceConstraint constraint = PerPuConstraint{};

  [[nodiscard]] double c1() const noexcept { return static_cast<double>(n_antennas) / static_cast<double>(n_sus); }
  [[nodiscard]] double c2() const noexcept { return static_cast<double>(n_pus) / static_cast<double>(n_antennas); }
  [[nodiscard]] double rho() const noexcept { return p_t / sigma2; }
  [[nodiscard]] bool is_per_pu() const noexcept { return std::holds_alternative<PerPuConstraint>(constraint); }

  /// max_l r2_l / theta_l (Case I) or tr(R2) / theta_all (Case II).
  [[nodiscard]] double interference_ratio() const {
    if (const auto* per = std::get_if<PerPuConstraint>(&constraint)) {
      double m = 0.0;
      for (std::size_t l = 0; l < r2.size(); ++l) m = std::max(m, r2[l] / per->thetas[l]);
      return m;
    }
    const auto& sum = std::get<SumPowerConstraint>(constraint);
    return std::accumulate(r2.begin(), r2.end(), 0.0) / sum.theta_all;
  }

  void validate() const {
    using detail::require;
    require(n_antennas > 0 && n_sus > 0 && n_pus > 0, "network: N, K and L must be positive");
    require(n_pus <= n_antennas, "network: L must not exceed N");
    require(r1.size() == n_sus, "network.r1: expected K entries");
    require(r2.size() == n_pus, "network.r2: expected L entries");
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(std::all_of(r1.begin(), r1.end(), positive), "network.r1: gains must be positive and finite");
    require(std::all_of(r2.begin(), r2.end(), positive), "network.r2: gains must be positive and finite");
    require(positive(sigma2), "network.sigma2 must be positive");
    require(positive(p_t), "network.p_t must be positive");
    if (const auto* per = std::get_if<PerPuConstraint>(&constraint)) {
      require(per->thetas.size() == n_pus, "constraint.theta: expected L entries");
      require(std::all_of(per->thetas.begin(), per->thetas.end(), positive),
              "constraint.theta: thresholds must be positive and finite");
    } else {
      require(positive(std::get<SumPowerConstraint>(constraint).theta_all),
              "constraint.theta_all must be positive");
    }
    require(interference_ratio() <= kMaxInterferenceRatio, "constraint: r2/theta ratio is unbounded");
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Config with every r1_k, r2_l equal and unit thresholds; callers usually
/// follow up with `at_operating_point`.
inline NetworkConfig uniform_config(std::size_t n, std::size_t k, std::size_t l, double r1, double r2,
                                    bool per_pu = true) {
  NetworkConfig c;
  c.n_antennas = n;
  c.n_sus = k;
  c.n_pus = l;
  c.r1.assign(k, r1);
  c.r2.assign(l, r2);
  if (per_pu)
    c.constraint = PerPuConstraint{std::vector<double>(l, 1.0)};
  else
    c.constraint = SumPowerConstraint{static_cast<double>(l)};
  return c;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Sets P_T = rho * sigma2 for the given SNR and converts an absolute
/// interference threshold P (dB) into theta_l = P / P_T (Case I) or
/// theta_all = L * P / P_T (Case II).
inline NetworkConfig at_operating_point(NetworkConfig c, double snr_db, double interference_db) {
  c.p_t = db_to_linear(snr_db) * c.sigma2;
  const double p = db_to_linear(interference_db);
  if (auto* per = std::get_if<PerPuConstraint>(&c.constraint))
    per->thetas.assign(c.n_pus, p / c.p_t);
  else
    std::get<SumPowerConstraint>(c.constraint).theta_all = static_cast<double>(c.n_pus) * p / c.p_t;
  return c;
}

struct ChannelRealization {
  CMatrix h;     // K x N, rows h_k^H
  CMatrix f;     // L x N, rows f_l^H
  CMatrix gram;  // N x N projector onto the row space of F
};

/// F^H (F F^H)^{-1} F through a Cholesky solve of the L x L Gram matrix.
inline CMatrix projection_gram(const CMatrix& f) {
  const CMatrix ffh = f * f.adjoint();
  Eigen::LLT<CMatrix> llt(ffh);
  if (llt.info() != Eigen::Success)
    throw NumericalError("projection_gram: F F^H is not positive definite (rank-deficient F)");
  CMatrix gram = f.adjoint() * llt.solve(f);
  // Hermitian up to rounding; symmetrize so downstream solvers see an exact
  // Hermitian matrix.
  gram = 0.5 * (gram + gram.adjoint()).eval();
  return gram;
}

inline ChannelRealization make_realization(CMatrix h, CMatrix f) {
  detail::require(h.cols() == f.cols(), "make_realization: H and F must have N columns");
  ChannelRealization real{std::move(h), std::move(f), {}};
  real.gram = projection_gram(real.f);
  return real;
}

/// H = R1^{1/2} H~, F = R2^{1/2} F~ with H~, F~ entries CN(0, 1/N).
/// H is drawn before F from the same stream.
inline ChannelRealization sample_channels(const NetworkConfig& config, const RngSpec& rng) {
  const auto n = static_cast<Eigen::Index>(config.n_antennas);
  const auto k = static_cast<Eigen::Index>(config.n_sus);
  const auto l = static_cast<Eigen::Index>(config.n_pus);
  const double inv_n = 1.0 / static_cast<double>(config.n_antennas);
  StreamEngine eng(rng);
  CMatrix h = complex_gaussian(k, n, eng, inv_n);
  for (Eigen::Index i = 0; i < k; ++i) h.row(i) *= std::sqrt(config.r1[static_cast<std::size_t>(i)]);
  CMatrix f = complex_gaussian(l, n, eng, inv_n);
  for (Eigen::Index i = 0; i < l; ++i) f.row(i) *= std::sqrt(config.r2[static_cast<std::size_t>(i)]);
  return make_realization(std::move(h), std::move(f));
}

/// H (I - beta W^H W). beta = 0 returns H unchanged.
inline CMatrix partially_project(const ChannelRealization& real, double beta) {
  detail::require(beta >= 0.0 && beta <= 1.0, "partially_project: beta must lie in [0, 1]");
  if (beta == 0.0) return real.h;
  return real.h - beta * (real.h * real.gram);
}

}  // namespace pprzf
