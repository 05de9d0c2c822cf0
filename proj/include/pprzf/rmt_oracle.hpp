// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// Monte-Carlo probes of the random-matrix approximations the deterministic
// equivalents rest on: Stieltjes-type traces of the projected Gram matrix,
// the Haar-projector trace, the separable-covariance trace, and the
// leave-one-out quadratic forms behind the signal, interference and power
// terms.

#pragma once

#include "pprzf/channel.hpp"
#include "pprzf/detequiv.hpp"
#include "pprzf/montecarlo.hpp"
#include "pprzf/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace pprzf {

/// Largest spectral norm accepted for a test matrix Q.
inline constexpr double kDefaultQNormCap = 1024.0;

struct StieltjesProbe {
  std::string name;
  CMatrix q;  // test matrix; empty for the quadratic-form probes
  double alpha_or_omega = 0.0;
  std::size_t n = 0;
  std::size_t n_trials = 0;
  double mc_value = 0.0;
  double mc_std_err = 0.0;
  double de_value = 0.0;
  double rel_error = 0.0;
  std::optional<double> fd_value;  // -d/dalpha of the first-order form, same channels

  void finish() { rel_error = std::abs(mc_value - de_value) / std::max(std::abs(de_value), 1e-12); }
};

/// Checks that q is an n x n nonnegative definite Hermitian matrix with
/// spectral norm at most `cap`.
inline void validate_test_matrix(const CMatrix& q, std::size_t n, double cap = kDefaultQNormCap) {
  const auto nn = static_cast<Eigen::Index>(n);
  detail::require(q.rows() == nn && q.cols() == nn, "test matrix Q: expected N x N");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  detail::require((q - q.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale, "test matrix Q: not Hermitian");
  if (n == 0) return;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(q, Eigen::EigenvaluesOnly);
  const RVector& ev = eig.eigenvalues();
  detail::require(ev.minCoeff() >= -1e-10 * scale, "test matrix Q: not nonnegative definite");
  detail::require(ev.maxCoeff() <= cap, "test matrix Q: spectral norm exceeds the configured cap");
}

inline CMatrix identity_q(std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  return CMatrix::Identity(nn, nn);
}

/// Diagonal with i.i.d. entries uniform on [0, 2].
inline CMatrix random_diagonal_q(std::size_t n, const RngSpec& rng) {
  StreamEngine eng(rng);
  const auto nn = static_cast<Eigen::Index>(n);
  CMatrix q = CMatrix::Zero(nn, nn);
  for (Eigen::Index i = 0; i < nn; ++i) q(i, i) = eng.uniform(0.0, 2.0);
  return q;
}

/// N u u^H with u uniform on the unit sphere: trace N, spectral norm N.
inline CMatrix rank_one_spike_q(std::size_t n, const RngSpec& rng) {
  StreamEngine eng(rng);
  const auto nn = static_cast<Eigen::Index>(n);
  CVector u = complex_gaussian(nn, 1, eng, 1.0).col(0);
  u /= u.norm();
  return static_cast<double>(n) * (u * u.adjoint());
}

/// `l` orthonormal rows of an n x n Haar unitary: Householder QR of a
/// Gaussian n x l matrix with the phases of diag(R) moved into Q.
inline CMatrix haar_rows(std::size_t n, std::size_t l, const RngSpec& rng) {
  detail::require(l >= 1 && l <= n, "haar_rows: need 1 <= l <= n");
  const auto nn = static_cast<Eigen::Index>(n);
  const auto ll = static_cast<Eigen::Index>(l);
  StreamEngine eng(rng);
  const CMatrix z = complex_gaussian(nn, ll, eng, 1.0);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(nn, ll);
  const CMatrix& packed = qr.matrixQR();
  for (Eigen::Index j = 0; j < ll; ++j) {
    const double mag = std::abs(packed(j, j));
    if (!(mag > 1e-12)) throw NumericalError("haar_rows: Gaussian draw is rank deficient");
    q.col(j) *= packed(j, j) / mag;
  }
  return q.adjoint();
}

namespace detail {

inline double trace_product(const CMatrix& q, const CMatrix& m) {
  // tr(Q M) without forming the product
  return q.transpose().cwiseProduct(m).sum().real();
}

inline CMatrix resolvent(const CMatrix& b, double shift) {
  CMatrix a = b;
  a.diagonal().array() += shift;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("resolvent: Cholesky failed");
  return llt.solve(CMatrix::Identity(a.rows(), a.cols()));
}

template <typename TrialFn>
McEstimate run_trials(std::size_t n_trials, const RngSpec& rng, unsigned threads, TrialFn&& fn) {
  detail::require(n_trials >= 2, "probe: n_trials must be >= 2");
  std::vector<double> v(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t t) { v[t] = fn(rng.substream(t)); });
  return summarize(v, rng);
}

}  // namespace detail

/// (1/N) tr Q (Hc^H Hc + alpha I)^{-1} against (t1 + t2)/alpha (1/N) tr Q.
inline StieltjesProbe theorem2_check(const NetworkConfig& config, const PrecoderParams& params, const CMatrix& q,
                                     std::size_t n_trials, const RngSpec& rng, unsigned threads = 0,
                                     double q_cap = kDefaultQNormCap) {
  config.validate();
  params.validate();
  validate_test_matrix(q, config.n_antennas, q_cap);
  const double inv_n = 1.0 / static_cast<double>(config.n_antennas);

  const McEstimate mc = detail::run_trials(n_trials, rng, threads, [&](const RngSpec& s) {
    const auto real = sample_channels(config, s);
    const CMatrix hc = partially_project(real, params.beta);
    return inv_n * detail::trace_product(q, detail::resolvent(hc.adjoint() * hc, params.alpha));
  });
  const auto st = solve_fixed_point(config, params);

  StieltjesProbe p;
  p.name = "theorem2";
  p.q = q;
  p.alpha_or_omega = params.alpha;
  p.n = config.n_antennas;
  p.n_trials = n_trials;
  p.mc_value = mc.mean;
  p.mc_std_err = mc.std_err;
  p.de_value = (st.t1 + st.t2) / params.alpha * inv_n * q.trace().real();
  p.finish();
  return p;
}

/// (1/N) tr Q (W^H W + omega I)^{-1} for L = round(c2 N) Haar rows W,
/// against delta (1/N) tr Q with delta = c2/(omega+1) + (1-c2)/omega.
inline StieltjesProbe lemma5_check(const CMatrix& q, double omega, double c2, std::size_t n, std::size_t n_trials,
                                   const RngSpec& rng, unsigned threads = 0, double q_cap = kDefaultQNormCap) {
  detail::require(omega > 0.0, "lemma5_check: omega must be > 0");
  detail::require(c2 > 0.0 && c2 <= 1.0, "lemma5_check: c2 must lie in (0, 1]");
  validate_test_matrix(q, n, q_cap);
  const auto l = static_cast<std::size_t>(std::llround(c2 * static_cast<double>(n)));
  detail::require(l >= 1 && l <= n, "lemma5_check: c2 N rounds outside [1, N]");
  const double c2_eff = static_cast<double>(l) / static_cast<double>(n);
  const double inv_n = 1.0 / static_cast<double>(n);

  const McEstimate mc = detail::run_trials(n_trials, rng, threads, [&](const RngSpec& s) {
    const CMatrix w = haar_rows(n, l, s);
    return inv_n * detail::trace_product(q, detail::resolvent(w.adjoint() * w, omega));
  });

  StieltjesProbe p;
  p.name = "lemma5";
  p.q = q;
  p.alpha_or_omega = omega;
  p.n = n;
  p.n_trials = n_trials;
  p.mc_value = mc.mean;
  p.mc_std_err = mc.std_err;
  const double delta = c2_eff / (omega + 1.0) + (1.0 - c2_eff) / omega;
  p.de_value = delta * inv_n * q.trace().real();
  p.finish();
  return p;
}

struct Lemma4FixedPoint {
  double e = 0.0;
  double e_tilde = 0.0;
  std::size_t iterations = 0;
};

/// e = (1/N) tr R (omega I + e~ R)^{-1},  e~ = (1/N) tr T (I + e T)^{-1},
/// given the eigenvalues of T (N of them) and R (K of them).
inline Lemma4FixedPoint lemma4_fixed_point(const RVector& t_eig, const RVector& r_eig, double omega, std::size_t n,
                                           const FixedPointOptions& opts = {}) {
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto e_tilde_of = [&](double e) { return inv_n * (t_eig.array() / (1.0 + e * t_eig.array())).sum(); };
  const auto e_of = [&](double et) { return inv_n * (r_eig.array() / (omega + et * r_eig.array())).sum(); };
  Lemma4FixedPoint fp;
  double e = opts.initial_e;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    const double next = (1.0 - opts.damping) * e + opts.damping * e_of(e_tilde_of(e));
    const double step = std::abs(next - e);
    e = next;
    fp.iterations = it + 1;
    if (step <= opts.tolerance * std::max(1.0, e)) {
      fp.e = e;
      fp.e_tilde = e_tilde_of(e);
      return fp;
    }
  }
  throw NumericalError("lemma4_fixed_point: no convergence");
}

/// B = T^{1/2} X R X^H T^{1/2} with X (N x K) entries CN(0, 1/N):
/// (1/N) tr Q (B + omega I)^{-1} against (1/N) tr Q (omega I + omega e T)^{-1}.
inline StieltjesProbe lemma4_check(const CMatrix& t, const CMatrix& r, const CMatrix& q, double omega,
                                   std::size_t n, std::size_t k, std::size_t n_trials, const RngSpec& rng,
                                   unsigned threads = 0, double q_cap = kDefaultQNormCap) {
  detail::require(omega > 0.0, "lemma4_check: omega must be > 0");
  detail::require(k >= 1, "lemma4_check: K must be positive");
  validate_test_matrix(q, n, q_cap);
  validate_test_matrix(t, n, q_cap);
  validate_test_matrix(r, k, q_cap);
  const auto nn = static_cast<Eigen::Index>(n);
  const auto kk = static_cast<Eigen::Index>(k);
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<CMatrix> t_eig(t);
  Eigen::SelfAdjointEigenSolver<CMatrix> r_eig(r);
  const RVector t_vals = t_eig.eigenvalues().cwiseMax(0.0);
  const RVector r_vals = r_eig.eigenvalues().cwiseMax(0.0);
  const CMatrix t_half = t_eig.eigenvectors() * t_vals.cwiseSqrt().cast<cplx>().asDiagonal() *
                         t_eig.eigenvectors().adjoint();

  const McEstimate mc = detail::run_trials(n_trials, rng, threads, [&](const RngSpec& s) {
    StreamEngine eng(s);
    const CMatrix x = complex_gaussian(nn, kk, eng, inv_n);
    const CMatrix tx = t_half * x;
    return inv_n * detail::trace_product(q, detail::resolvent(tx * r * tx.adjoint(), omega));
  });

  const auto fp = lemma4_fixed_point(t_vals, r_vals, omega, n);
  const RVector weights = (omega + omega * fp.e * t_vals.array()).inverse().matrix();
  const CMatrix de_mat = t_eig.eigenvectors() * weights.cast<cplx>().asDiagonal() * t_eig.eigenvectors().adjoint();

  StieltjesProbe p;
  p.name = "lemma4";
  p.q = q;
  p.alpha_or_omega = omega;
  p.n = n;
  p.n_trials = n_trials;
  p.mc_value = mc.mean;
  p.mc_std_err = mc.std_err;
  p.de_value = inv_n * detail::trace_product(q, de_mat);
  p.finish();
  return p;
}

/// Per-realization leave-one-out forms, averaged over the SUs.
struct LooForms {
  double signal_loo = 0.0;    // h_k^H A_[k]^{-1} hc_k
  double check_loo = 0.0;     // hc_k^H A_[k]^{-1} hc_k
  double direct_loo = 0.0;    // h_k^H A_[k]^{-1} h_k
  double direct_sq = 0.0;     // h_k^H A_[k]^{-2} h_k
  double cross_sq = 0.0;      // hc_k^H A_[k]^{-2} h_k
  double check_sq = 0.0;      // hc_k^H A_[k]^{-2} hc_k
  double signal = 0.0;        // h_k^H A^{-1} hc_k
  double interference = 0.0;  // h_k^H A^{-1} Hc_[k]^H Hc_[k] A^{-1} h_k
};

namespace detail {

/// All leave-one-out terms from two N x K solves: with p = A^{-1} hc_k and
/// s = hc_k^H p, A_[k]^{-1} x = A^{-1} x + p (p^H x) / (1 - s).
inline LooForms loo_forms(const CMatrix& h, const CMatrix& hc, double alpha) {
  CMatrix a = hc.adjoint() * hc;
  a.diagonal().array() += alpha;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("loo_forms: Cholesky failed");
  const CMatrix x = llt.solve(h.adjoint());   // A^{-1} h_k
  const CMatrix pm = llt.solve(hc.adjoint());  // A^{-1} hc_k
  const CMatrix cross = hc * x;                // (j, k): hc_j^H A^{-1} h_k

  LooForms f;
  const auto k_users = h.rows();
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const auto p = pm.col(k);
    const cplx hp = (h.row(k) * p)(0, 0);
    const double s = (hc.row(k) * p)(0, 0).real();
    const double inv = 1.0 / (1.0 - s);
    const cplx hah = (h.row(k) * x.col(k))(0, 0);
    const CVector u_h = x.col(k) + p * (std::conj(hp) * inv);
    const CVector u_c = p * inv;
    f.signal_loo += (hp * inv).real();
    f.check_loo += s * inv;
    f.direct_loo += hah.real() + std::norm(hp) * inv;
    f.direct_sq += u_h.squaredNorm();
    f.cross_sq += u_c.dot(u_h).real();
    f.check_sq += u_c.squaredNorm();
    f.signal += hp.real();
    f.interference += cross.col(k).squaredNorm() - std::norm(cross(k, k));
  }
  const double inv_k = 1.0 / static_cast<double>(k_users);
  for (double* v : {&f.signal_loo, &f.check_loo, &f.direct_loo, &f.direct_sq, &f.cross_sq, &f.check_sq, &f.signal,
                    &f.interference})
    *v *= inv_k;
  return f;
}

}  // namespace detail

/// Leave-one-out quadratic forms, transmit trace and PU quadratic against
/// their deterministic equivalents. The three squared-resolvent probes also
/// carry fd_value, the central difference (step fd_step * alpha) of the
/// matching first-order form on the same channels.
inline std::vector<StieltjesProbe> appendix_b_quadratic_checks(const NetworkConfig& config,
                                                               const PrecoderParams& params, std::size_t n_trials,
                                                               const RngSpec& rng, unsigned threads = 0,
                                                               double fd_step = 1e-4) {
  config.validate();
  params.validate();
  detail::require(n_trials >= 2, "appendix_b_quadratic_checks: n_trials must be >= 2");
  constexpr std::size_t kTerms = 13;  // 8 loo forms, transmit, pu, 3 finite differences
  std::vector<double> samples(n_trials * kTerms);
  const double alpha = params.alpha;
  const double h_step = fd_step * alpha;

  parallel_for(n_trials, threads, [&](std::size_t t) {
    const auto real = sample_channels(config, rng.substream(t));
    const CMatrix hc = partially_project(real, params.beta);
    const LooForms f = detail::loo_forms(real.h, hc, alpha);
    const ConstraintTerms ct = constraint_terms(regularized_inverse(hc, alpha), real.f);
    const LooForms up = detail::loo_forms(real.h, hc, alpha + h_step);
    const LooForms dn = detail::loo_forms(real.h, hc, alpha - h_step);
    const auto fd = [&](double LooForms::*m) { return -(up.*m - dn.*m) / (2.0 * h_step); };
    double* row = samples.data() + t * kTerms;
    row[0] = f.signal_loo;
    row[1] = f.check_loo;
    row[2] = f.direct_loo;
    row[3] = f.direct_sq;
    row[4] = f.cross_sq;
    row[5] = f.check_sq;
    row[6] = f.signal;
    row[7] = f.interference;
    row[8] = ct.transmit_trace;
    row[9] = ct.sum_interference / static_cast<double>(config.n_pus);
    row[10] = fd(&LooForms::direct_loo);
    row[11] = fd(&LooForms::signal_loo);
    row[12] = fd(&LooForms::check_loo);
  });
  const auto column = [&](std::size_t j) {
    std::vector<double> c(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t) c[t] = samples[t * kTerms + j];
    return summarize(c, rng);
  };

  // Deterministic side.
  const DeResult de = de_sinr(config, params);
  const auto& st = de.state;
  const double omb = 1.0 - params.beta;
  const double b2 = omb * omb;
  const double de_da = st.de_dalpha;
  const double t1p = -st.t1 / (1.0 + st.e) * de_da;
  const double t2p = -b2 * st.t2 / (1.0 + b2 * st.e) * de_da;
  const auto mean_r1 = [&] {
    double s = 0.0;
    for (double r : config.r1) s += r;
    return s / static_cast<double>(config.n_sus);
  }();
  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  // X(w) = t1 + w t2;  X/alpha and -d/dalpha (X/alpha) = -X'/alpha + X/alpha^2
  const auto first = [&](double w) { return mean_r1 * (st.t1 + w * st.t2) / alpha; };
  const auto second = [&](double w) {
    const double x = st.t1 + w * st.t2;
    const double xp = t1p + w * t2p;
    return mean_r1 * (-xp / alpha + x / (alpha * alpha));
  };
  double pu_de = 0.0;
  for (double r2 : config.r2) pu_de += r2 / config.c2() * t2p;
  pu_de /= static_cast<double>(config.n_pus);

  struct Spec {
    const char* name;
    std::size_t col;
    double de;
    std::optional<std::size_t> fd_col;
  };
  const Spec specs[] = {
      {"signal_loo", 0, first(omb), std::nullopt},
      {"check_loo", 1, first(b2), std::nullopt},
      {"direct_loo", 2, first(1.0), std::nullopt},
      {"direct_loo_sq", 3, second(1.0), 10},
      {"cross_loo_sq", 4, second(omb), 11},
      {"check_loo_sq", 5, second(b2), 12},
      {"signal_power", 6, mean_of(de.a_bar), std::nullopt},
      {"interference_power", 7, mean_of(de.b_bar), std::nullopt},
      {"transmit_trace", 8, t1p + t2p, std::nullopt},
      {"pu_quadratic", 9, pu_de, std::nullopt},
  };

  std::vector<StieltjesProbe> out;
  for (const auto& s : specs) {
    const McEstimate mc = column(s.col);
    StieltjesProbe p;
    p.name = s.name;
    p.alpha_or_omega = alpha;
    p.n = config.n_antennas;
    p.n_trials = n_trials;
    p.mc_value = mc.mean;
    p.mc_std_err = mc.std_err;
    p.de_value = s.de;
    if (s.fd_col) p.fd_value = column(*s.fd_col).mean;
    p.finish();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace pprzf
