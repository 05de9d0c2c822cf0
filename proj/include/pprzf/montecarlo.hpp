// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------
//
// Monte-Carlo estimation of ergodic quantities. Trial t always draws its
// channel from rng.substream(t), and per-trial results are reduced in trial
// order, so estimates are bit-identical for any thread count.

#pragma once

#include "pprzf/channel.hpp"
#include "pprzf/detequiv.hpp"
#include "pprzf/expectations.hpp"
#include "pprzf/precoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace pprzf {

/// Worker count: PPRZF_THREADS if set and positive, else the hardware count.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("PPRZF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = default).
/// fn must only write to state owned by index i.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;  // sample standard deviation / sqrt(n_trials)
  std::size_t n_trials = 0;
  RngSpec seed;
};

inline McEstimate summarize(std::span<const double> samples, const RngSpec& seed) {
  McEstimate est;
  est.n_trials = samples.size();
  est.seed = seed;
  if (samples.empty()) return est;
  double sum = 0.0;
  for (double v : samples) sum += v;
  est.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - est.mean) * (v - est.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    est.std_err = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return est;
}

/// How the normalization nu is obtained for a Monte-Carlo rate estimate.
enum class NuMode {
  De,  // deterministic equivalents of the expectations
  Mc,  // sample means over an independent batch of channels
};

struct McOptions {
  std::size_t n_trials = 10000;
  unsigned threads = 0;
  NuMode nu_mode = NuMode::De;
  std::size_t nu_batch = 500;
};

/// Substream reserved for the normalization batch; disjoint from the rate
/// trials, which use substreams 0..n_trials-1 of the caller's stream.
inline constexpr std::uint64_t kNuBatchStream = 0x4E5542415443480AULL;

inline ExpectationEstimate estimate_expectations(const NetworkConfig& config, const PrecoderParams& params,
                                                 std::size_t n_trials, const RngSpec& rng, unsigned threads = 0) {
  config.validate();
  params.validate();
  if (n_trials < 2) throw ConfigError("estimate_expectations: n_trials must be >= 2");

  std::vector<ConstraintTerms> per_trial(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t t) {
    const auto real = sample_channels(config, rng.substream(t));
    const CMatrix g = regularized_inverse(partially_project(real, params.beta), params.alpha);
    per_trial[t] = constraint_terms(g, real.f);
  });

  ExpectationEstimate ex;
  ex.pu_quadratics.assign(config.n_pus, 0.0);
  for (const auto& t : per_trial) {
    ex.transmit_trace += t.transmit_trace;
    ex.sum_interference += t.sum_interference;
    for (std::size_t l = 0; l < config.n_pus; ++l) ex.pu_quadratics[l] += t.pu_quadratics[l];
  }
  const double inv = 1.0 / static_cast<double>(n_trials);
  ex.transmit_trace *= inv;
  ex.sum_interference *= inv;
  for (auto& q : ex.pu_quadratics) q *= inv;
  return ex;
}

struct RateEstimate {
  McEstimate sum_rate;
  std::vector<McEstimate> per_user;
  double nu = 0.0;
  Binding binding;
  ExpectationEstimate expectations;
};

/// Normalization expectations for the chosen mode.
inline ExpectationEstimate normalization_expectations(const NetworkConfig& config, const PrecoderParams& params,
                                                      const McOptions& opts, const RngSpec& rng) {
  if (opts.nu_mode == NuMode::De) return de_expectations(config, params);
  return estimate_expectations(config, params, opts.nu_batch, rng.substream(kNuBatchStream), opts.threads);
}

/// Ergodic sum-rate sum_k E{log(1 + gamma_k)} (nats) over opts.n_trials
/// channels. When nothing can be radiated (nu = 0, e.g. beta = 1 with L = N)
/// every SINR is zero.
inline RateEstimate ergodic_sum_rate_mc(const NetworkConfig& config, const PrecoderParams& params,
                                        const McOptions& opts, const RngSpec& rng) {
  config.validate();
  params.validate();
  if (opts.n_trials < 2) throw ConfigError("ergodic_sum_rate_mc: n_trials must be >= 2");

  RateEstimate out;
  out.expectations = normalization_expectations(config, params, opts, rng);
  const NuSelection sel = select_nu(out.expectations, config);
  out.nu = sel.nu;
  out.binding = sel.binding;
  const bool silent = !(sel.nu > 0.0);
  const double rho = config.rho();
  const std::size_t k_users = config.n_sus;

  std::vector<double> rates(opts.n_trials * k_users, 0.0);
  if (!silent) {
    parallel_for(opts.n_trials, opts.threads, [&](std::size_t t) {
      const auto real = sample_channels(config, rng.substream(t));
      const CMatrix g = regularized_inverse(partially_project(real, params.beta), params.alpha);
      const auto gamma = sinr_from_unnormalized(real.h, g, rho, sel.nu);
      for (std::size_t k = 0; k < k_users; ++k) rates[t * k_users + k] = std::log1p(gamma[k]);
    });
  }

  std::vector<double> totals(opts.n_trials, 0.0);
  std::vector<double> column(opts.n_trials);
  out.per_user.reserve(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    for (std::size_t t = 0; t < opts.n_trials; ++t) {
      column[t] = rates[t * k_users + k];
      totals[t] += column[t];
    }
    out.per_user.push_back(summarize(column, rng));
  }
  out.sum_rate = summarize(totals, rng);
  return out;
}

}  // namespace pprzf
