// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// PP-RZF precoder G = xi (Hc^H Hc + alpha I)^{-1} Hc^H with Hc the partially
// projected channel, its power normalization, and per-realization SINR.

#pragma once

#include "pprzf/channel.hpp"
#include "pprzf/expectations.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pprzf {

struct PrecoderParams {
  double alpha = 1.0;
  double beta = 0.0;

  void validate() const {
    detail::require(std::isfinite(alpha) && alpha > 0.0, "precoder: alpha must be > 0");
    detail::require(beta >= 0.0 && beta <= 1.0, "precoder: beta must lie in [0, 1]");
  }
};

enum class BindingKind { Transmit, Pu, SumInterference };

/// Which power constraint fixed the normalization.
struct Binding {
  BindingKind kind = BindingKind::Transmit;
  std::size_t pu_index = 0;

  [[nodiscard]] std::string to_string() const {
    switch (kind) {
      case BindingKind::Transmit:
        return "transmit";
      case BindingKind::Pu:
        return "pu" + std::to_string(pu_index);
      case BindingKind::SumInterference:
        return "sum_interference";
    }
    return "unknown";
  }
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct PrecoderOutput {
  CMatrix g_unnormalized;  // N x K
  double xi2 = 0.0;
  double nu = 0.0;
  Binding binding;

  [[nodiscard]] CMatrix precoder() const { return std::sqrt(xi2) * g_unnormalized; }
};

struct NuSelection {
  double nu = 0.0;
  Binding binding;
};

/// nu = P_T / xi^2 = max over the transmit term and the interference terms
/// scaled by their thresholds. Ties resolve to the transmit constraint.
inline NuSelection select_nu(const ExpectationEstimate& ex, const NetworkConfig& config) {
  NuSelection sel{ex.transmit_trace, {BindingKind::Transmit, 0}};
  if (const auto* per = std::get_if<PerPuConstraint>(&config.constraint)) {
    detail::require(ex.pu_quadratics.size() == config.n_pus, "select_nu: expected L PU quadratics");
    for (std::size_t l = 0; l < config.n_pus; ++l) {
      const double term = ex.pu_quadratics[l] / per->thetas[l];
      if (term > sel.nu) sel = {term, {BindingKind::Pu, l}};
    }
  } else {
    const double term = ex.sum_interference / std::get<SumPowerConstraint>(config.constraint).theta_all;
    if (term > sel.nu) sel = {term, {BindingKind::SumInterference, 0}};
  }
  return sel;
}

/// (Hc^H Hc + alpha I)^{-1} Hc^H, Hc given as K x N.
inline CMatrix regularized_inverse(const CMatrix& h_check, double alpha) {
  CMatrix a = h_check.adjoint() * h_check;
  a.diagonal().array() += alpha;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("regularized_inverse: Cholesky failed");
  return llt.solve(h_check.adjoint());
}

struct ConstraintTerms {
  double transmit_trace = 0.0;       // (1/N) ||G~||_F^2
  std::vector<double> pu_quadratics;  // ||G~^H f_l||^2
  double sum_interference = 0.0;      // ||F G~||_F^2
};

inline ConstraintTerms constraint_terms(const CMatrix& g_unnormalized, const CMatrix& f) {
  ConstraintTerms t;
  t.transmit_trace = g_unnormalized.squaredNorm() / static_cast<double>(g_unnormalized.rows());
  const CMatrix fg = f * g_unnormalized;
  t.pu_quadratics.resize(static_cast<std::size_t>(f.rows()));
  for (Eigen::Index l = 0; l < f.rows(); ++l) {
    t.pu_quadratics[static_cast<std::size_t>(l)] = fg.row(l).squaredNorm();
    t.sum_interference += t.pu_quadratics[static_cast<std::size_t>(l)];
  }
  return t;
}

inline PrecoderOutput build_precoder(const ChannelRealization& real, const PrecoderParams& params,
                                     const NetworkConfig& config, const ExpectationEstimate& expectations) {
  params.validate();
  detail::require(real.h.rows() == static_cast<Eigen::Index>(config.n_sus) &&
                      real.h.cols() == static_cast<Eigen::Index>(config.n_antennas) &&
                      real.f.rows() == static_cast<Eigen::Index>(config.n_pus),
                  "build_precoder: realization dimensions do not match the network config");
  PrecoderOutput out;
  out.g_unnormalized = regularized_inverse(partially_project(real, params.beta), params.alpha);
  const NuSelection sel = select_nu(expectations, config);
  if (!(sel.nu > 0.0)) throw NumericalError("build_precoder: normalization terms vanish (nothing is radiated)");
  out.nu = sel.nu;
  out.binding = sel.binding;
  out.xi2 = config.p_t / sel.nu;
  return out;
}

/// SINR of every SU for a given unnormalized precoder:
///   gamma_k = rho |h_k^H G~_k|^2 / (rho sum_{j != k} |h_k^H G~_j|^2 + nu)
/// where G~_j = A^{-1} hc_j, i.e. the interference uses Hc_[k] exactly.
inline std::vector<double> sinr_from_unnormalized(const CMatrix& h, const CMatrix& g_unnormalized, double rho,
                                                  double nu) {
  if (!(nu > 0.0)) throw ConfigError("sinr: nu must be positive");
  const CMatrix m = h * g_unnormalized;  // K x K, m(k, j) = h_k^H A^{-1} hc_j
  std::vector<double> gamma(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    const double signal = std::norm(m(k, k));
    double interference = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (j != k) interference += std::norm(m(k, j));
    gamma[static_cast<std::size_t>(k)] = rho * signal / (rho * interference + nu);
  }
  return gamma;
}

inline std::vector<double> instantaneous_sinr(const ChannelRealization& real, const PrecoderParams& params,
                                              const NetworkConfig& config, double nu) {
  params.validate();
  if (!(nu > 0.0)) throw ConfigError("instantaneous_sinr: nu must be positive");
  const CMatrix g = regularized_inverse(partially_project(real, params.beta), params.alpha);
  return sinr_from_unnormalized(real.h, g, config.rho(), nu);
}

/// Shared resolvent A^{-1} = (Hc^H Hc + alpha I)^{-1} with leave-one-out
/// access: A_[k]^{-1} = A^{-1} + A^{-1} hc_k hc_k^H A^{-1} / (1 - hc_k^H A^{-1} hc_k)
/// (rank-one downdate), O(N^2) per user instead of a fresh factorization.
class LeaveOneOutResolvent {
 public:
  LeaveOneOutResolvent(const CMatrix& h_check, double alpha) : h_check_(h_check) {
    const auto n = h_check.cols();
    CMatrix a = h_check.adjoint() * h_check;
    a.diagonal().array() += alpha;
    Eigen::LLT<CMatrix> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("LeaveOneOutResolvent: Cholesky failed");
    inverse_ = llt.solve(CMatrix::Identity(n, n));
  }

  [[nodiscard]] const CMatrix& inverse() const noexcept { return inverse_; }

  /// A_[k]^{-1} x without forming A_[k]^{-1}.
  [[nodiscard]] CVector apply_without(Eigen::Index k, const CVector& x) const {
    const CVector hk = h_check_.row(k).adjoint();
    const CVector p = inverse_ * hk;
    const double s = hk.dot(p).real();
    const cplx px = p.dot(x);  // hc_k^H A^{-1} x
    return inverse_ * x + p * (px / (1.0 - s));
  }

  /// Explicit A_[k]^{-1}; used by tests to cross-check the downdate.
  [[nodiscard]] CMatrix inverse_without(Eigen::Index k) const {
    const CVector hk = h_check_.row(k).adjoint();
    const CVector p = inverse_ * hk;
    const double s = hk.dot(p).real();
    return inverse_ + p * p.adjoint() / (1.0 - s);
  }

 private:
  CMatrix h_check_;
  CMatrix inverse_;
};

/// sum_k log(1 + gamma_k) in nats.
inline double sum_rate_instantaneous(std::span<const double> gammas) {
  double r = 0.0;
  for (double g : gammas) {
    if (!(g >= 0.0)) throw ConfigError("sum_rate: SINR values must be nonnegative");
    r += std::log1p(g);
  }
  return r;
}

}  // namespace pprzf
