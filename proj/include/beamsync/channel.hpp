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

#include <cstdint>
#include <vector>

namespace beamsync {

/// Scenario-wide physical and algorithmic parameters. Angles are radians.
struct SystemConfig {
  int subcarriers = 64;  // N, OFDM block length
  int cp_len = 9;        // cyclic prefix samples
  int antennas = 128;    // M, ULA size
  int users = 4;         // K
  int taps = 10;         // L, channel length
  int rays = 50;         // P, scatterer rays per tap

  double angular_spread = deg2rad(5.0);  // half-width of each user's DOA region
  double chi = kPi;                      // 2*pi*d/lambda (pi for half-wavelength spacing)
  double max_cfo = 0.2;                  // CFOs drawn uniformly from [-max_cfo, max_cfo]
  double snr_db = 10.0;                  // sigma_s^2 / sigma_n^2 in dB, sigma_s^2 = 1

  int fft_size = 256;                 // spatial FFT grid size, >= antennas
  double beam_threshold = 10.0;       // t_h, qualified-DOA factor on L/(N-L)
  double critical_ratio = 2.0 / 3.0;  // rho_th, critical-user factor
  double guard = deg2rad(25.0);       // grouping guard interval
  int iterations = 5;                 // joint estimation rounds
  std::uint64_t seed = 1;

  std::vector<double> pdp;  // per-tap variances, empty means uniform 1/taps

  int short_train_len = 16;      // N_s for the time-division baselines
  int first_data_index = 1;      // block index carried by the first data block
  bool group_dist_min = false;   // use min instead of max qualified-DOA distance

  /// Per-tap variances with the uniform default applied.
  std::vector<double> tap_powers() const;
  /// Noise variance for the configured SNR (signal power fixed to 1).
  double noise_var() const;
  double noise_var_at(double snr_db_point) const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// One user's multipath channel plus ground truth used by the simulator.
struct UserChannel {
  ComplexMatrix taps;       // L x M, row l = tap l across antennas
  double cfo = 0.0;         // normalized CFO, |cfo| < 0.5
  double mean_doa = 0.0;    // radians
  RealMatrix ray_doas;      // L x P
  ComplexMatrix ray_gains;  // L x P
};

namespace channel {

/// ULA steering vector, entry m = exp(-j*chi*m*cos(theta)).
ComplexVector steering_vector(double theta, int antennas, double chi);

/// Deterministic channel synthesis from explicit rays (used by draw_channel
/// and by tests that pin rays).
UserChannel from_rays(const RealMatrix& ray_doas, const ComplexMatrix& ray_gains, int antennas,
                      double chi, double cfo, double mean_doa);

/// One-ring draw: per tap, `rays` DOAs uniform on the spread and circular
/// complex Gaussian gains of variance tap_power/rays each.
/// Throws std::invalid_argument if the DOA region leaves (0, pi).
UserChannel draw_channel(const SystemConfig& cfg, double mean_doa, Rng& rng);

/// Spatial correlation of the one-ring region; entry (i,j) =
/// (1/(2*spread)) * integral of exp(j*chi*(i-j)*cos(t)) over the spread.
ComplexMatrix spatial_correlation(double mean_doa, double spread, double chi, int antennas);

/// i.i.d. uniform CFOs on [-max_cfo, max_cfo]. Requires max_cfo in [0, 0.5).
std::vector<double> draw_cfos(int users, double max_cfo, Rng& rng);

/// Circular complex Gaussian matrix, each entry of variance `var`.
ComplexMatrix complex_gaussian(int rows, int cols, double var, Rng& rng);

}  // namespace channel
}  // namespace beamsync
