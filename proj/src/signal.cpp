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

#include "beamsync/signal.hpp"

#include <cmath>
#include <stdexcept>

namespace beamsync::signal {

namespace {

// Gray code per axis: bit pair 00,01,11,10 -> -3,-1,+1,+3, all over sqrt(10).
constexpr double kQamScale = 0.31622776601683794;  // 1/sqrt(10)

double gray_level(int two_bits) {
  switch (two_bits) {
    case 0: return -3.0;
    case 1: return -1.0;
    case 3: return 1.0;
    default: return 3.0;  // 2
  }
}

int gray_bits(double level) {
  if (level < -2.0) return 0;
  if (level < 0.0) return 1;
  if (level < 2.0) return 3;
  return 2;
}

}  // namespace

ComplexVector phase_rotation(double cfo, int length) { return phase_ramp(cfo, length, length); }

ComplexVector phase_ramp(double cfo, int length, int period) {
  ComplexVector e(length);
  const double step = 2.0 * kPi * cfo / period;
  for (int n = 0; n < length; ++n) {
    e(n) = Complex(std::cos(step * n), std::sin(step * n));
  }
  return e;
}

Complex data_phase(double cfo, int block_index, int subcarriers, int cp_len) {
  const double arg = 2.0 * kPi * block_index * (subcarriers + cp_len) * cfo / subcarriers;
  return Complex(std::cos(arg), std::sin(arg));
}

ComplexMatrix build_training_matrix(const ComplexVector& x, int taps) {
  const int n = static_cast<int>(x.size());
  if (taps < 1 || taps > n) {
    throw std::invalid_argument("build_training_matrix: taps must lie in [1, N]");
  }
  const ComplexMatrix f = numerics::dft_matrix(n);
  return std::sqrt(static_cast<double>(n)) * f.adjoint() * (x.asDiagonal() * f.leftCols(taps));
}

TrainingBlock random_training(int subcarriers, int taps, Rng& rng) {
  TrainingBlock t;
  t.symbols = qpsk_random(subcarriers, rng);
  t.time_matrix = build_training_matrix(t.symbols, taps);
  return t;
}

DataBlock random_data(int subcarriers, Rng& rng) {
  DataBlock d;
  d.indices.resize(static_cast<std::size_t>(subcarriers));
  d.symbols.resize(subcarriers);
  std::uniform_int_distribution<int> dist(0, 15);
  for (int n = 0; n < subcarriers; ++n) {
    d.indices[static_cast<std::size_t>(n)] = dist(rng);
    d.symbols(n) = qam16_point(d.indices[static_cast<std::size_t>(n)]);
  }
  return d;
}

ReceivedBlock synthesize_training(const SystemConfig& cfg, const std::vector<UserChannel>& users,
                                  const std::vector<TrainingBlock>& trainings, double noise_var,
                                  Rng& rng) {
  if (users.size() != trainings.size()) {
    throw std::invalid_argument("synthesize_training: user/training count mismatch");
  }
  ComplexMatrix y = ComplexMatrix::Zero(cfg.subcarriers, cfg.antennas);
  for (std::size_t k = 0; k < users.size(); ++k) {
    const ComplexVector e = phase_rotation(users[k].cfo, cfg.subcarriers);
    y += e.asDiagonal() * (trainings[k].time_matrix * users[k].taps);
  }
  y += channel::complex_gaussian(cfg.subcarriers, cfg.antennas, noise_var, rng);
  return {std::move(y), BlockKind::training, 0};
}

ReceivedBlock synthesize_data(const SystemConfig& cfg, const std::vector<UserChannel>& users,
                              const std::vector<DataBlock>& blocks, int block_index,
                              double noise_var, Rng& rng) {
  if (users.size() != blocks.size()) {
    throw std::invalid_argument("synthesize_data: user/block count mismatch");
  }
  const int n = cfg.subcarriers;
  const ComplexMatrix f = numerics::dft_matrix(n);
  const ComplexMatrix fl = f.leftCols(cfg.taps);
  const double root_n = std::sqrt(static_cast<double>(n));
  ComplexMatrix y = ComplexMatrix::Zero(n, cfg.antennas);
  for (std::size_t k = 0; k < users.size(); ++k) {
    const ComplexMatrix freq = blocks[k].symbols.asDiagonal() * (fl * users[k].taps);
    const Complex eta = data_phase(users[k].cfo, block_index, n, cfg.cp_len);
    const ComplexVector e = phase_rotation(users[k].cfo, n);
    y += (root_n * eta) * (e.asDiagonal() * (f.adjoint() * freq));
  }
  y += channel::complex_gaussian(n, cfg.antennas, noise_var, rng);
  return {std::move(y), BlockKind::data, block_index};
}

Complex qam16_point(int index) {
  if (index < 0 || index > 15) {
    throw std::invalid_argument("qam16_point: index out of range");
  }
  return kQamScale * Complex(gray_level((index >> 2) & 3), gray_level(index & 3));
}

int qam16_decide(Complex v) {
  const int hi = gray_bits(v.real() / kQamScale);
  const int lo = gray_bits(v.imag() / kQamScale);
  return (hi << 2) | lo;
}

ComplexVector qam16_map(const std::vector<std::uint8_t>& bits) {
  if (bits.size() % 4 != 0) {
    throw std::invalid_argument("qam16_map: bit count must be a multiple of 4");
  }
  ComplexVector out(bits.size() / 4);
  for (Eigen::Index s = 0; s < out.size(); ++s) {
    const std::size_t b = static_cast<std::size_t>(s) * 4;
    const int idx = (bits[b] << 3) | (bits[b + 1] << 2) | (bits[b + 2] << 1) | bits[b + 3];
    out(s) = qam16_point(idx);
  }
  return out;
}

std::vector<std::uint8_t> qam16_demap(const ComplexVector& symbols) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(symbols.size()) * 4);
  for (Eigen::Index s = 0; s < symbols.size(); ++s) {
    const int idx = qam16_decide(symbols(s));
    const std::size_t b = static_cast<std::size_t>(s) * 4;
    bits[b] = static_cast<std::uint8_t>((idx >> 3) & 1);
    bits[b + 1] = static_cast<std::uint8_t>((idx >> 2) & 1);
    bits[b + 2] = static_cast<std::uint8_t>((idx >> 1) & 1);
    bits[b + 3] = static_cast<std::uint8_t>(idx & 1);
  }
  return bits;
}

Complex qpsk_point(int index) {
  static const double s = 1.0 / std::sqrt(2.0);
  switch (index & 3) {
    case 0: return {s, s};
    case 1: return {s, -s};
    case 2: return {-s, s};
    default: return {-s, -s};
  }
}

ComplexVector qpsk_random(int length, Rng& rng) {
  ComplexVector x(length);
  std::uniform_int_distribution<int> dist(0, 3);
  for (int n = 0; n < length; ++n) {
    x(n) = qpsk_point(dist(rng));
  }
  return x;
}

}  // namespace beamsync::signal
