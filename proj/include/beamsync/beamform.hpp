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

#include "beamsync/estimator.hpp"

#include <vector>

namespace beamsync {

/// Grid directions whose signal-to-residual ratio clears the threshold.
/// When none clears it, the single best bin is kept and `degraded` set.
struct QualifiedDoaSet {
  int user = -1;
  std::vector<int> bin_pos;     // positions into the grid, ascending theta
  std::vector<double> metrics;  // ratio per kept bin
  bool degraded = false;
};

/// Per-user symbol decisions for one data block. `decisions` uses -1 for an
/// erasure (counted as an error by the harness).
struct DetectedBlock {
  ComplexVector equalized;
  std::vector<int> decisions;
  bool erasures = false;
};

namespace beamform {

/// Residual below this fraction of the in-span power reports the sentinel.
inline constexpr double kMetricSentinel = 1e12;

/// Signal-subspace to residual power ratio of one beam after CFO
/// compensation: ||P_B E^H(cfo) y||^2 / ||P_B^perp E^H(cfo) y||^2.
double beam_metric(int bin_pos, double cfo_hat, const BeamSpectrum& spectrum,
                   const ComplexMatrix& basis);

QualifiedDoaSet qualified_doas(int user, double cfo_hat, const BeamSpectrum& spectrum,
                               const ComplexMatrix& basis, const SystemConfig& cfg);

/// Receive beamforming matrix, one conjugate steering column per kept bin.
ComplexMatrix beamforming_matrix(const QualifiedDoaSet& set, const DoaGrid& grid, int antennas);

/// Least-squares equivalent channel of the beamformed training block:
/// (B^H B)^{-1} B^H E^H(cfo) Y W, shape L x branches.
ComplexMatrix equivalent_channel(const ComplexMatrix& y_train, const TrainingBlock& training,
                                 double cfo_hat, const ComplexMatrix& w);

/// CFO/rotation compensation, per-subcarrier maximum-ratio combining across
/// the branches, and constellation slicing of one data block.
DetectedBlock detect_single_user(const ComplexMatrix& y_data, const ComplexMatrix& h_eq,
                                 double cfo_hat, const ComplexMatrix& w, int block_index,
                                 const SystemConfig& cfg);

}  // namespace beamform
}  // namespace beamsync
