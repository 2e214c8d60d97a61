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

#include "beamsync/signal.hpp"

#include <utility>
#include <vector>

namespace beamsync {

/// Spatial FFT grid. Bin k of an fft_size-point transform across the array
/// is the beam towards spatial frequency -k/fft_size wrapped into
/// [-1/2, 1/2), i.e. towards theta = arccos(2*pi*freq/chi). Bins whose
/// wrapped frequency maps outside |cos| <= 1 are direction-less and dropped.
struct DoaGrid {
  struct Bin {
    int fft_index;        // column into the beam spectrum
    double spatial_freq;  // wrapped cycles per antenna, in [-1/2, 1/2)
    double cos_theta;     // 2*pi*spatial_freq/chi
    double theta;         // radians, in (0, pi]
  };

  int fft_size = 0;
  double chi = kPi;
  std::vector<Bin> bins;  // valid directions, sorted by theta ascending

  static DoaGrid make(int fft_size, double chi);

  /// Half-open range [lo, hi) of positions in `bins` with
  /// |theta_bin - theta| < spread.
  std::pair<int, int> neighbor_range(double theta, double spread) const;

  /// Positions in `bins` within the spread; empty means no grid support there.
  std::vector<int> neighbor_bins(double theta, double spread) const;

  /// Position in `bins` of the angle closest to theta.
  int nearest_bin(double theta) const;

  /// Conjugate steering vector of a bin, evaluated from its exact grid
  /// frequency so that it matches the FFT column bit-for-bit in exponent.
  ComplexVector conj_steering(int bin_pos, int antennas) const;
};

/// Beams of one received block on the full FFT grid plus the per-bin powers
/// every search below consumes. Computed once per block, shared by users.
struct BeamSpectrum {
  DoaGrid grid;
  ComplexMatrix beams;    // N x fft_size, column k = Y a*(bin k)
  RealVector beam_power;  // ||column||^2 per FFT index
  RealVector ramp_power;  // ||D^H column||^2 per FFT index
  double block_power = 0;  // ||Y||^2 of the underlying block
};

BeamSpectrum beamspace_transform(const ComplexMatrix& block, const DoaGrid& grid);

struct IterationRecord {
  double cfo;
  double doa;
  double cost;
};

struct CfoDoaEstimate {
  double cfo = 0.0;
  double doa = 0.0;
  std::vector<IterationRecord> trace;
  bool degenerate = false;  // a vertex step had a vanishing curvature
};

namespace estimator {

/// Discretized alignment cost in [0, 1]: 1 - sum_S ||Q^H E^H(cfo) y||^2 /
/// sum_S ||y||^2 over the neighbor bins S of theta.
/// Throws std::runtime_error when the window carries no beam energy.
double cost(double theta, double cfo_trial, const BeamSpectrum& spectrum,
            const ComplexMatrix& basis, double spread);

struct VertexStep {
  double delta = 0.0;
  bool degenerate = false;
};

/// Closed-form vertex of the local quadratic model of the cost in the CFO
/// around cfo_anchor, summed over the neighbor bins of theta.
VertexStep delta_phi_vertex(double theta, double cfo_anchor, const BeamSpectrum& spectrum,
                            const ComplexMatrix& basis, double spread);

struct DoaSearchResult {
  int bin_pos = -1;        // position into spectrum.grid.bins
  double theta = 0.0;
  double objective = 0.0;  // corrected alignment objective, higher is better
  VertexStep vertex;       // CFO step evaluated at the winning window
};

/// Grid maximization of the alignment objective with the quadratic CFO
/// correction folded in. Ties break towards the lower FFT bin index.
DoaSearchResult doa_search(double cfo_anchor, const BeamSpectrum& spectrum,
                           const ComplexMatrix& basis, double spread);

/// Full per-user joint estimate: cfg.iterations rounds of DOA search plus
/// vertex CFO update, starting from cfo = 0. Stops early once the step
/// falls below 1e-9.
CfoDoaEstimate estimate_user(const BeamSpectrum& spectrum, const TrainingBlock& training,
                             const SystemConfig& cfg);
CfoDoaEstimate estimate_user(const ComplexMatrix& block, const TrainingBlock& training,
                             const SystemConfig& cfg);

}  // namespace estimator
}  // namespace beamsync
