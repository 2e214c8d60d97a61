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

#include "beamsync/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace beamsync {

DoaGrid DoaGrid::make(int fft_size, double chi) {
  if (fft_size < 1) {
    throw std::invalid_argument("DoaGrid: fft_size must be positive");
  }
  if (!(chi > 0.0)) {
    throw std::invalid_argument("DoaGrid: chi must be positive");
  }
  DoaGrid grid;
  grid.fft_size = fft_size;
  grid.chi = chi;
  grid.bins.reserve(static_cast<std::size_t>(fft_size));
  for (int k = 0; k < fft_size; ++k) {
    double freq = -static_cast<double>(k) / fft_size;  // in (-1, 0]
    if (freq < -0.5) {
      freq += 1.0;
    }
    const double c = 2.0 * kPi * freq / chi;
    if (c < -1.0 || c >= 1.0) {
      continue;  // no physical direction for this bin
    }
    grid.bins.push_back({k, freq, c, std::acos(c)});
  }
  std::sort(grid.bins.begin(), grid.bins.end(),
            [](const Bin& a, const Bin& b) { return a.theta < b.theta; });
  return grid;
}

std::pair<int, int> DoaGrid::neighbor_range(double theta, double spread) const {
  auto lo = std::upper_bound(bins.begin(), bins.end(), theta - spread,
                             [](double v, const Bin& b) { return v < b.theta; });
  auto hi = std::lower_bound(bins.begin(), bins.end(), theta + spread,
                             [](const Bin& b, double v) { return b.theta < v; });
  return {static_cast<int>(lo - bins.begin()), static_cast<int>(hi - bins.begin())};
}

std::vector<int> DoaGrid::neighbor_bins(double theta, double spread) const {
  const auto [lo, hi] = neighbor_range(theta, spread);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(std::max(0, hi - lo)));
  for (int p = lo; p < hi; ++p) {
    out.push_back(p);
  }
  return out;
}

int DoaGrid::nearest_bin(double theta) const {
  if (bins.empty()) {
    throw std::runtime_error("DoaGrid: empty grid");
  }
  auto it = std::lower_bound(bins.begin(), bins.end(), theta,
                             [](const Bin& b, double v) { return b.theta < v; });
  if (it == bins.begin()) {
    return 0;
  }
  if (it == bins.end()) {
    return static_cast<int>(bins.size()) - 1;
  }
  const int hi = static_cast<int>(it - bins.begin());
  const int lo = hi - 1;
  return (theta - bins[lo].theta <= bins[hi].theta - theta) ? lo : hi;
}

ComplexVector DoaGrid::conj_steering(int bin_pos, int antennas) const {
  const Bin& bin = bins.at(static_cast<std::size_t>(bin_pos));
  ComplexVector a(antennas);
  const double step = -2.0 * kPi * bin.spatial_freq;
  for (int m = 0; m < antennas; ++m) {
    const double arg = step * m;
    a(m) = Complex(std::cos(arg), std::sin(arg));
  }
  return a;
}

BeamSpectrum beamspace_transform(const ComplexMatrix& block, const DoaGrid& grid) {
  if (grid.fft_size < block.cols()) {
    throw std::invalid_argument("beamspace_transform: grid smaller than array");
  }
  BeamSpectrum sp;
  sp.grid = grid;
  sp.beams = numerics::fft_rows(block, grid.fft_size);
  sp.beam_power = sp.beams.colwise().squaredNorm().transpose();
  RealVector ramp(block.rows());
  for (Eigen::Index n = 0; n < block.rows(); ++n) {
    const double r = 2.0 * kPi * static_cast<double>(n) / block.rows();
    ramp(n) = r * r;
  }
  sp.ramp_power = (sp.beams.cwiseAbs2().transpose() * ramp);
  sp.block_power = block.squaredNorm();
  return sp;
}

namespace estimator {

namespace {

// Per-bin sufficient statistics at a fixed CFO anchor, in sorted-bin order:
//   signal  = ||Q^H z||^2
//   ramp    = ||Q^H D^H z||^2
//   cross   = Re((Q^H D^H z)^H (Q^H z))
// with z = E^H(anchor) y(bin). The cross term is the negated first
// derivative of the projection residual in the CFO; see delta_phi_vertex.
struct BinStats {
  RealVector power;   // ||y||^2
  RealVector signal;
  RealVector ramp;    // full ||D^H y||^2
  RealVector proj_ramp;
  RealVector cross;
};

BinStats stats_for_range(const BeamSpectrum& sp, const ComplexMatrix& basis, double anchor,
                         int lo, int hi) {
  const int count = std::max(0, hi - lo);
  const Eigen::Index n = sp.beams.rows();
  BinStats st;
  st.power.resize(count);
  st.signal.resize(count);
  st.ramp.resize(count);
  st.proj_ramp.resize(count);
  st.cross.resize(count);

  const ComplexVector rot = signal::phase_rotation(anchor, static_cast<int>(n));
  ComplexVector z(n), dz(n);
  for (int p = 0; p < count; ++p) {
    const int col = sp.grid.bins[static_cast<std::size_t>(lo + p)].fft_index;
    z = rot.conjugate().asDiagonal() * sp.beams.col(col);
    for (Eigen::Index r = 0; r < n; ++r) {
      dz(r) = Complex(0.0, -2.0 * kPi * static_cast<double>(r) / n) * z(r);
    }
    const ComplexVector u = basis.adjoint() * z;
    const ComplexVector v = basis.adjoint() * dz;
    st.power(p) = sp.beam_power(col);
    st.signal(p) = u.squaredNorm();
    st.ramp(p) = sp.ramp_power(col);
    st.proj_ramp(p) = v.squaredNorm();
    st.cross(p) = v.dot(u).real();
  }
  return st;
}

BinStats stats_all(const BeamSpectrum& sp, const ComplexMatrix& basis, double anchor) {
  const Eigen::Index n = sp.beams.rows();
  const int count = static_cast<int>(sp.grid.bins.size());
  const ComplexVector rot = signal::phase_rotation(anchor, static_cast<int>(n));

  ComplexMatrix z(n, count);
  for (int p = 0; p < count; ++p) {
    z.col(p) = sp.beams.col(sp.grid.bins[static_cast<std::size_t>(p)].fft_index);
  }
  z = rot.conjugate().asDiagonal() * z;
  ComplexVector ramp(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    ramp(r) = Complex(0.0, -2.0 * kPi * static_cast<double>(r) / n);
  }
  const ComplexMatrix u = basis.adjoint() * z;
  const ComplexMatrix v = basis.adjoint() * (ramp.asDiagonal() * z);

  BinStats st;
  st.power.resize(count);
  st.ramp.resize(count);
  for (int p = 0; p < count; ++p) {
    const int col = sp.grid.bins[static_cast<std::size_t>(p)].fft_index;
    st.power(p) = sp.beam_power(col);
    st.ramp(p) = sp.ramp_power(col);
  }
  st.signal = u.colwise().squaredNorm().transpose();
  st.proj_ramp = v.colwise().squaredNorm().transpose();
  st.cross = v.conjugate().cwiseProduct(u).colwise().sum().real().transpose();
  return st;
}

inline double curvature(double ramp_sum, double proj_ramp_sum) {
  return std::max(0.0, ramp_sum - proj_ramp_sum);
}

inline bool curvature_degenerate(double curv, double ramp_sum) {
  return curv <= 1e-12 * std::max(ramp_sum, 1.0);
}

}  // namespace

double cost(double theta, double cfo_trial, const BeamSpectrum& spectrum,
            const ComplexMatrix& basis, double spread) {
  const auto [lo, hi] = spectrum.grid.neighbor_range(theta, spread);
  if (hi <= lo) {
    throw std::runtime_error("cost: empty neighbor set");
  }
  const BinStats st = stats_for_range(spectrum, basis, cfo_trial, lo, hi);
  const double power = st.power.sum();
  if (power <= 0.0) {
    throw std::runtime_error("cost: zero beam energy in window");
  }
  return 1.0 - st.signal.sum() / power;
}

VertexStep delta_phi_vertex(double theta, double cfo_anchor, const BeamSpectrum& spectrum,
                            const ComplexMatrix& basis, double spread) {
  const auto [lo, hi] = spectrum.grid.neighbor_range(theta, spread);
  if (hi <= lo) {
    throw std::runtime_error("delta_phi_vertex: empty neighbor set");
  }
  const BinStats st = stats_for_range(spectrum, basis, cfo_anchor, lo, hi);
  const double curv = curvature(st.ramp.sum(), st.proj_ramp.sum());
  if (curvature_degenerate(curv, st.ramp.sum())) {
    return {0.0, true};
  }
  return {st.cross.sum() / curv, false};
}

DoaSearchResult doa_search(double cfo_anchor, const BeamSpectrum& spectrum,
                           const ComplexMatrix& basis, double spread) {
  const auto& bins = spectrum.grid.bins;
  const int count = static_cast<int>(bins.size());
  DoaSearchResult best;
  if (count == 0) {
    return best;
  }
  const BinStats st = stats_all(spectrum, basis, cfo_anchor);

  // Prefix sums over the theta-sorted bins make every window O(1).
  RealVector cp(count + 1), cs(count + 1), cc(count + 1), cd(count + 1), cpr(count + 1);
  cp(0) = cs(0) = cc(0) = cd(0) = cpr(0) = 0.0;
  for (int p = 0; p < count; ++p) {
    cp(p + 1) = cp(p) + st.power(p);
    cs(p + 1) = cs(p) + st.signal(p);
    cc(p + 1) = cc(p) + st.cross(p);
    cd(p + 1) = cd(p) + st.ramp(p);
    cpr(p + 1) = cpr(p) + st.proj_ramp(p);
  }

  bool have = false;
  for (int p = 0; p < count; ++p) {
    const auto [lo, hi] = spectrum.grid.neighbor_range(bins[static_cast<std::size_t>(p)].theta, spread);
    if (hi <= lo) {
      continue;
    }
    const double power = cp(hi) - cp(lo);
    if (power <= 0.0) {
      continue;
    }
    const double sig = cs(hi) - cs(lo);
    const double cross = cc(hi) - cc(lo);
    const double ramp = cd(hi) - cd(lo);
    const double curv = curvature(ramp, cpr(hi) - cpr(lo));
    const bool degen = curvature_degenerate(curv, ramp);
    const double corrected = degen ? sig : sig + cross * cross / curv;
    const double objective = corrected / power;

    const int fft_index = bins[static_cast<std::size_t>(p)].fft_index;
    const bool better =
        !have || objective > best.objective ||
        (objective == best.objective && fft_index < bins[static_cast<std::size_t>(best.bin_pos)].fft_index);
    if (better) {
      best.bin_pos = p;
      best.theta = bins[static_cast<std::size_t>(p)].theta;
      best.objective = objective;
      best.vertex = degen ? VertexStep{0.0, true} : VertexStep{cross / curv, false};
      have = true;
    }
  }
  return best;
}

CfoDoaEstimate estimate_user(const BeamSpectrum& spectrum, const TrainingBlock& training,
                             const SystemConfig& cfg) {
  const ComplexMatrix basis = numerics::orthonormal_basis(training.time_matrix);
  CfoDoaEstimate est;
  constexpr double kCfoLimit = 0.5 - 1e-12;
  double phi = 0.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const DoaSearchResult res = doa_search(phi, spectrum, basis, cfg.angular_spread);
    if (res.bin_pos < 0) {
      est.degenerate = true;
      break;
    }
    phi = std::clamp(phi + res.vertex.delta, -kCfoLimit, kCfoLimit);
    est.degenerate = est.degenerate || res.vertex.degenerate;
    est.cfo = phi;
    est.doa = res.theta;
    est.trace.push_back({phi, res.theta, cost(res.theta, phi, spectrum, basis, cfg.angular_spread)});
    if (std::abs(res.vertex.delta) < 1e-9) {
      break;
    }
  }
  return est;
}

CfoDoaEstimate estimate_user(const ComplexMatrix& block, const TrainingBlock& training,
                             const SystemConfig& cfg) {
  const DoaGrid grid = DoaGrid::make(cfg.fft_size, cfg.chi);
  return estimate_user(beamspace_transform(block, grid), training, cfg);
}

}  // namespace estimator
}  // namespace beamsync
