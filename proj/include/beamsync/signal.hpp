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

#include "beamsync/channel.hpp"

#include <cstdint>
#include <vector>

namespace beamsync {

/// Frequency-domain training block and its time-domain matrix
/// B = sqrt(N) F^H diag(x) F_L.
struct TrainingBlock {
  ComplexVector symbols;      // length N, constant modulus (QPSK)
  ComplexMatrix time_matrix;  // N x L
};

/// One 16-QAM frequency-domain data block.
struct DataBlock {
  std::vector<int> indices;  // constellation point per subcarrier
  ComplexVector symbols;     // mapped, average power 1
};

enum class BlockKind { training, data };

struct ReceivedBlock {
  ComplexMatrix samples;  // N x M
  BlockKind kind = BlockKind::training;
  int block_index = 0;
};

namespace signal {

/// Diagonal of the phase-rotation operator E(phi): entry n =
/// exp(j*2*pi*n*phi/length). `period` defaults to the vector length; the
/// time-division baselines rotate short blocks against the full OFDM period.
ComplexVector phase_rotation(double cfo, int length);
ComplexVector phase_ramp(double cfo, int length, int period);

/// Accumulated phase of data block i: exp(j*2*pi*i*(N+N_cp)*cfo/N).
Complex data_phase(double cfo, int block_index, int subcarriers, int cp_len);

/// B = sqrt(N) F^H diag(x) F_L with N = x.size().
ComplexMatrix build_training_matrix(const ComplexVector& x, int taps);

TrainingBlock random_training(int subcarriers, int taps, Rng& rng);
DataBlock random_data(int subcarriers, Rng& rng);

/// Received training block: Y = sum_k E(cfo_k) B_k H_k + noise, noise
/// entries i.i.d. circular complex Gaussian of variance noise_var.
ReceivedBlock synthesize_training(const SystemConfig& cfg, const std::vector<UserChannel>& users,
                                  const std::vector<TrainingBlock>& trainings, double noise_var,
                                  Rng& rng);

/// Received data block i per the accumulative-rotation model.
ReceivedBlock synthesize_data(const SystemConfig& cfg, const std::vector<UserChannel>& users,
                              const std::vector<DataBlock>& blocks, int block_index,
                              double noise_var, Rng& rng);

// Gray-mapped 16-QAM scaled to unit average power. Decisions are
// minimum-distance; index -1 marks an erasure and never comes from decide.
Complex qam16_point(int index);
int qam16_decide(Complex v);
ComplexVector qam16_map(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> qam16_demap(const ComplexVector& symbols);

Complex qpsk_point(int index);
ComplexVector qpsk_random(int length, Rng& rng);

}  // namespace signal
}  // namespace beamsync
