// SPDX-License-Identifier: Apache-2.0
//
// pprzf - partially-projected regularized zero-forcing precoding toolkit
// ------------------------------------------------------------------------

#pragma once

#include <vector>

namespace pprzf {

/// Channel-averaged power terms entering the precoder normalization:
///   transmit_trace   E{ (1/N) tr G~ G~^H }
///   pu_quadratics[l] E{ f_l^H G~ G~^H f_l }
///   sum_interference E{ tr F G~ G~^H F^H }
/// with G~ the unnormalized precoder. Produced either by Monte-Carlo
/// averaging or by the deterministic equivalents.
struct ExpectationEstimate {
  double transmit_trace = 0.0;
  std::vector<double> pu_quadratics;
  double sum_interference = 0.0;
};

}  // namespace pprzf
