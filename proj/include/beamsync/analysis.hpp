// SPDX-License-Identifier: Apache-2.0
//
// beamsync: angle-domain frequency synchronization for multiuser OFDM uplink
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "beamsync/numerics.hpp"

namespace beamsync::analysis {

/// Closed-form CFO estimation MSE:
/// noise_var * Tr(R^3) / (2 ||R||_F^4 ||P_B^perp D^H B Sigma_h||_F^2)
/// with R the user's spatial correlation, B its training matrix and
/// Sigma_h the diagonal of per-tap amplitudes (square roots of the PDP).
double theoretical_mse(const ComplexMatrix& correlation, const ComplexMatrix& training_matrix,
                       const RealVector& tap_amplitudes, double noise_var);

/// Large-M/N limit: 3 (noise_var/signal_var) / (2 pi^2 M N).
double asymptotic_mse(double signal_var, double noise_var, int antennas, int subcarriers);

/// Relative errors of the large-array identities used by the asymptote.
struct AsymptoticDiagnostics {
  double corr_sq_rel_err;      // ||R^2 - cR|| / ||cR||, c = pi/(spread*chi*sin(theta))
  double trace_cube_rel_err;   // Tr(R^3) vs M pi^2/(spread^2 chi^2 sin^2(theta))
  double ramp_energy_ratio;    // ||P^perp D^H B Sigma||^2 / (pi^2 N sigma_s^2 / 3)
};

AsymptoticDiagnostics appendix_identities(const ComplexMatrix& correlation, double theta,
                                          double spread, double chi,
                                          const ComplexMatrix& training_matrix,
                                          const RealVector& tap_amplitudes);

}  // namespace beamsync::analysis
