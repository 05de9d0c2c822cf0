// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------

#include "pprzf/detequiv.hpp"
#include "pprzf/montecarlo.hpp"
#include "pprzf/precoder.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>

using namespace pprzf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NetworkConfig fig_config() { return uniform_config(16, 8, 6, 1.0, 0.6); }

ExpectationEstimate terms_as_estimate(const ConstraintTerms& t) {
  return {t.transmit_trace, t.pu_quadratics, t.sum_interference};
}

}  // namespace

TEST_CASE("K = 1, N = 2 worked example", "[precoder]") {
  NetworkConfig c = uniform_config(2, 1, 1, 1.0, 1.0);
  CMatrix h(1, 2);
  h << 1.0, 0.0;
  CMatrix f(1, 2);
  f << 0.0, 1.0;
  const auto real = make_realization(h, f);
  const CMatrix g = regularized_inverse(real.h, 1.0);
  CHECK_THAT(g(0, 0).real(), WithinAbs(0.5, 1e-15));
  CHECK(std::abs(g(1, 0)) < 1e-15);

  const auto t = constraint_terms(g, real.f);
  CHECK_THAT(t.transmit_trace, WithinAbs(0.125, 1e-15));
  CHECK(t.pu_quadratics[0] < 1e-30);

  // the PU is orthogonal to the SU so transmit power binds
  const auto out = build_precoder(real, {1.0, 0.0}, c, terms_as_estimate(t));
  CHECK(out.binding.kind == BindingKind::Transmit);
  CHECK_THAT(out.xi2, WithinRel(8.0, 1e-14));

  // |h g|^2 = 1/4, no interference: gamma = rho (1/4) / nu = 2 rho
  const auto gamma = sinr_from_unnormalized(real.h, g, 3.0, out.nu);
  CHECK_THAT(gamma[0], WithinRel(6.0, 1e-14));
}

TEST_CASE("binding constraint selection", "[precoder]") {
  auto c = fig_config();
  ExpectationEstimate ex{0.1, {0.01, 0.05, 0.02, 0.01, 0.03, 0.04}, 0.16};
  SECTION("loose thresholds leave the transmit constraint binding") {
    const auto sel = select_nu(ex, c);
    CHECK(sel.binding.kind == BindingKind::Transmit);
    CHECK(sel.nu == 0.1);
  }
  SECTION("a tight threshold on one PU") {
    std::get<PerPuConstraint>(c.constraint).thetas[1] = 0.05;
    const auto sel = select_nu(ex, c);
    CHECK(sel.binding.kind == BindingKind::Pu);
    CHECK(sel.binding.pu_index == 1);
    CHECK(sel.nu == 1.0);
    CHECK(sel.binding.to_string() == "pu1");
  }
  SECTION("sum constraint") {
    c.constraint = SumPowerConstraint{0.32};
    const auto sel = select_nu(ex, c);
    CHECK(sel.binding.kind == BindingKind::SumInterference);
    CHECK_THAT(sel.nu, WithinRel(0.5, 1e-14));
  }
  SECTION("ties resolve to transmit") {
    std::get<PerPuConstraint>(c.constraint).thetas[1] = 0.5;
    const auto sel = select_nu(ex, c);
    CHECK(sel.binding.kind == BindingKind::Transmit);
  }
}

TEST_CASE("beta = 1 always binds the transmit constraint", "[precoder]") {
  auto c = at_operating_point(fig_config(), 10.0, -30.0);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto real = sample_channels(c, RngSpec{5, 0}.substream(t));
    const CMatrix g = regularized_inverse(partially_project(real, 1.0), 0.3);
    const auto terms = constraint_terms(g, real.f);
    const auto out = build_precoder(real, {0.3, 1.0}, c, terms_as_estimate(terms));
    CHECK(out.binding.kind == BindingKind::Transmit);
  }
}

TEST_CASE("xi^2 scales linearly with P_T when transmit binds", "[precoder]") {
  auto c = fig_config();
  const auto real = sample_channels(c, RngSpec{9, 0});
  const CMatrix g = regularized_inverse(partially_project(real, 1.0), 0.5);
  const auto ex = terms_as_estimate(constraint_terms(g, real.f));
  const auto a = build_precoder(real, {0.5, 1.0}, c, ex);
  c.p_t *= 2.0;
  const auto b = build_precoder(real, {0.5, 1.0}, c, ex);
  CHECK_THAT(b.xi2, WithinRel(2.0 * a.xi2, 1e-14));
  CHECK(a.nu == b.nu);
}

TEST_CASE("instantaneous SINR matches the dense leave-one-out oracle", "[precoder]") {
  const auto c = at_operating_point(fig_config(), 10.0, 0.0);
  for (double beta : {0.0, 0.4, 1.0}) {
    for (double alpha : {0.01, 0.5, 5.0}) {
      const auto real = sample_channels(c, RngSpec{17, 3});
      const CMatrix hc = partially_project(real, beta);
      const auto lib = instantaneous_sinr(real, {alpha, beta}, c, 0.7);
      const auto ref = oracle::dense_sinr(real.h, hc, alpha, c.rho(), 0.7);
      REQUIRE(lib.size() == ref.size());
      for (std::size_t k = 0; k < lib.size(); ++k) CHECK_THAT(lib[k], WithinRel(ref[k], 1e-9));
      const CMatrix g_ref = oracle::dense_precoder(hc, alpha);
      CHECK((regularized_inverse(hc, alpha) - g_ref).norm() <= 1e-10 * g_ref.norm());
    }
  }
}

TEST_CASE("single user has no interference", "[precoder]") {
  NetworkConfig c = uniform_config(6, 1, 2, 1.0, 1.0);
  const auto real = sample_channels(c, RngSpec{4, 0});
  const double alpha = 0.2;
  const double nu = 0.3;
  const double rho = 10.0;
  const CMatrix g = regularized_inverse(real.h, alpha);
  const auto gamma = sinr_from_unnormalized(real.h, g, rho, nu);
  // h (h^H h + a I)^{-1} h^H = |h|^2 / (|h|^2 + a)
  const double h2 = real.h.squaredNorm();
  const double s = h2 / (h2 + alpha);
  CHECK_THAT(gamma[0], WithinRel(rho * s * s / nu, 1e-12));
}

TEST_CASE("large alpha shrinks the precoder like 1/alpha", "[precoder]") {
  const auto real = sample_channels(fig_config(), RngSpec{8, 0});
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {1e2, 1e3, 1e4, 1e5}) {
    const CMatrix g = regularized_inverse(real.h, alpha);
    const double scaled = alpha * g.norm();
    CHECK_THAT(scaled, WithinRel(real.h.norm(), 2.0 * real.h.squaredNorm() / alpha));
    CHECK(g.norm() < prev);
    prev = g.norm();
  }
}

TEST_CASE("SINR is invariant to per-user phase rotations", "[precoder]") {
  const auto c = at_operating_point(fig_config(), 20.0, 0.0);
  const auto real = sample_channels(c, RngSpec{21, 0});
  const auto base = instantaneous_sinr(real, {0.2, 0.5}, c, 1.0);
  ChannelRealization rotated = real;
  for (Eigen::Index k = 0; k < rotated.h.rows(); ++k) rotated.h.row(k) *= std::polar(1.0, 0.37 * (k + 1));
  const auto rot = instantaneous_sinr(rotated, {0.2, 0.5}, c, 1.0);
  for (std::size_t k = 0; k < base.size(); ++k) CHECK_THAT(rot[k], WithinRel(base[k], 1e-10));
}

TEST_CASE("leave-one-out resolvent agrees with a fresh inverse", "[precoder]") {
  const auto real = sample_channels(fig_config(), RngSpec{12, 0});
  const CMatrix hc = partially_project(real, 0.6);
  const double alpha = 0.05;
  const LeaveOneOutResolvent loo(hc, alpha);
  CVector x = CVector::Random(16);
  for (Eigen::Index k = 0; k < hc.rows(); ++k) {
    CMatrix hc_minus(hc.rows() - 1, hc.cols());
    for (Eigen::Index j = 0, r = 0; j < hc.rows(); ++j)
      if (j != k) hc_minus.row(r++) = hc.row(j);
    const CMatrix explicit_inv =
        (hc_minus.adjoint() * hc_minus + alpha * CMatrix::Identity(16, 16)).fullPivLu().inverse();
    CHECK((loo.inverse_without(k) - explicit_inv).norm() <= 1e-9 * explicit_inv.norm());
    CHECK((loo.apply_without(k, x) - explicit_inv * x).norm() <= 1e-9 * (explicit_inv * x).norm());
  }
}

TEST_CASE("sum rate of known SINRs", "[precoder]") {
  const std::array<double, 3> g{0.0, 1.0, std::exp(2.0) - 1.0};
  CHECK_THAT(sum_rate_instantaneous(g), WithinAbs(std::log(2.0) + 2.0, 1e-14));
  const std::array<double, 1> neg{-0.1};
  CHECK_THROWS_AS(sum_rate_instantaneous(neg), ConfigError);
  CHECK_THROWS_AS(sinr_from_unnormalized(CMatrix::Ones(1, 2), CMatrix::Ones(2, 1), 1.0, 0.0), ConfigError);
}

TEST_CASE("normalized precoder satisfies every constraint on average", "[precoder]") {
  // with nu from the sample means, E{xi^2 ||G~||^2 / N} <= P_T and
  // E{xi^2 ||G~^H f_l||^2} <= theta_l P_T, with equality on the binding one
  for (double p_db : {-10.0, 10.0}) {
    const auto c = at_operating_point(fig_config(), 10.0, p_db);
    const PrecoderParams params{0.1, 0.5};
    const auto ex = estimate_expectations(c, params, 400, RngSpec{31, 0}, 1);
    const auto sel = select_nu(ex, c);
    const double xi2 = c.p_t / sel.nu;
    CHECK(xi2 * ex.transmit_trace <= c.p_t * (1.0 + 1e-12));
    const auto& th = std::get<PerPuConstraint>(c.constraint).thetas;
    double slack = c.p_t - xi2 * ex.transmit_trace;
    for (std::size_t l = 0; l < c.n_pus; ++l) {
      CHECK(xi2 * ex.pu_quadratics[l] <= th[l] * c.p_t * (1.0 + 1e-12));
      slack = std::min(slack, th[l] * c.p_t - xi2 * ex.pu_quadratics[l]);
    }
    CHECK(std::abs(slack) <= 1e-10 * c.p_t);
  }
}
