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

#include "beamsync/beamform.hpp"

#include <cmath>
#include <stdexcept>

namespace beamsync::beamform {

double beam_metric(int bin_pos, double cfo_hat, const BeamSpectrum& spectrum,
                   const ComplexMatrix& basis) {
  const auto& bin = spectrum.grid.bins.at(static_cast<std::size_t>(bin_pos));
  const Eigen::Index n = spectrum.beams.rows();
  const ComplexVector rot = signal::phase_rotation(cfo_hat, static_cast<int>(n));
  const ComplexVector z = rot.conjugate().asDiagonal() * spectrum.beams.col(bin.fft_index);
  const double total = spectrum.beam_power(bin.fft_index);
  if (total <= 0.0) {
    return 0.0;
  }
  const double in_span = (basis.adjoint() * z).squaredNorm();
  const double residual = total - in_span;
  if (residual < 1e-12 * in_span) {
    return kMetricSentinel;
  }
  return in_span / residual;
}

QualifiedDoaSet qualified_doas(int user, double cfo_hat, const BeamSpectrum& spectrum,
                               const ComplexMatrix& basis, const SystemConfig& cfg) {
  const double floor_ratio =
      static_cast<double>(cfg.taps) / (cfg.subcarriers - cfg.taps);
  const double threshold = cfg.beam_threshold * floor_ratio;

  QualifiedDoaSet set;
  set.user = user;
  int best_pos = -1;
  double best_metric = -1.0;
  for (int p = 0; p < static_cast<int>(spectrum.grid.bins.size()); ++p) {
    const double m = beam_metric(p, cfo_hat, spectrum, basis);
    if (m >= threshold) {
      set.bin_pos.push_back(p);
      set.metrics.push_back(m);
    }
    if (m > best_metric) {
      best_metric = m;
      best_pos = p;
    }
  }
  if (set.bin_pos.empty() && best_pos >= 0) {
    set.bin_pos.push_back(best_pos);
    set.metrics.push_back(best_metric);
    set.degraded = true;
  }
  return set;
}

ComplexMatrix beamforming_matrix(const QualifiedDoaSet& set, const DoaGrid& grid, int antennas) {
  ComplexMatrix w(antennas, static_cast<Eigen::Index>(set.bin_pos.size()));
  for (std::size_t i = 0; i < set.bin_pos.size(); ++i) {
    w.col(static_cast<Eigen::Index>(i)) = grid.conj_steering(set.bin_pos[i], antennas);
  }
  return w;
}

ComplexMatrix equivalent_channel(const ComplexMatrix& y_train, const TrainingBlock& training,
                                 double cfo_hat, const ComplexMatrix& w) {
  const Eigen::Index n = y_train.rows();
  const ComplexVector rot = signal::phase_rotation(cfo_hat, static_cast<int>(n));
  const ComplexMatrix compensated = rot.conjugate().asDiagonal() * (y_train * w);
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(training.time_matrix);
  qr.setThreshold(numerics::kRankTolerance);
  if (qr.rank() < training.time_matrix.cols()) {
    throw std::runtime_error("equivalent_channel: rank-deficient training matrix");
  }
  return qr.solve(compensated);
}

DetectedBlock detect_single_user(const ComplexMatrix& y_data, const ComplexMatrix& h_eq,
                                 double cfo_hat, const ComplexMatrix& w, int block_index,
                                 const SystemConfig& cfg) {
  if (w.cols() < 1 || h_eq.cols() != w.cols()) {
    throw std::invalid_argument("detect_single_user: branch count mismatch");
  }
  const int n = cfg.subcarriers;
  const ComplexMatrix f = numerics::dft_matrix(n);
  const ComplexVector rot = signal::phase_rotation(cfo_hat, n);
  const Complex eta = signal::data_phase(cfo_hat, block_index, n, cfg.cp_len);

  // Branch observations in the frequency domain and their responses.
  const ComplexMatrix compensated =
      std::conj(eta) * (rot.conjugate().asDiagonal() * (y_data * w));
  const ComplexMatrix received = f * compensated;                           // N x branches
  const ComplexMatrix response = std::sqrt(static_cast<double>(n)) *
                                 (f.leftCols(cfg.taps) * h_eq);             // N x branches

  DetectedBlock out;
  out.equalized.resize(n);
  out.decisions.resize(static_cast<std::size_t>(n));
  const double power_floor = 1e-20 * std::max(response.squaredNorm() / n, 1e-300);
  for (int sc = 0; sc < n; ++sc) {
    const double gain = response.row(sc).squaredNorm();
    if (gain <= power_floor) {
      out.equalized(sc) = Complex(0.0, 0.0);
      out.decisions[static_cast<std::size_t>(sc)] = -1;
      out.erasures = true;
      continue;
    }
    const Complex combined = (response.row(sc).conjugate().cwiseProduct(received.row(sc))).sum();
    out.equalized(sc) = combined / gain;
    out.decisions[static_cast<std::size_t>(sc)] = signal::qam16_decide(out.equalized(sc));
  }
  return out;
}

}  // namespace beamsync::beamform
