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

#include "beamsync/channel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace beamsync {

std::vector<double> SystemConfig::tap_powers() const {
  if (!pdp.empty()) {
    return pdp;
  }
  return std::vector<double>(static_cast<std::size_t>(taps), 1.0 / taps);
}

double SystemConfig::noise_var() const { return noise_var_at(snr_db); }

double SystemConfig::noise_var_at(double snr_db_point) const {
  return std::pow(10.0, -snr_db_point / 10.0);
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (subcarriers < 1) fail("subcarriers must be positive");
  if (antennas < 1) fail("antennas must be positive");
  if (users < 1) fail("users must be positive");
  if (taps < 1 || taps > subcarriers) fail("taps must lie in [1, subcarriers]");
  if (cp_len < taps - 1) fail("cp_len shorter than taps-1 (inter-block interference)");
  if (rays < 1) fail("rays must be positive");
  if (!(angular_spread >= 0.0)) fail("angular_spread must be non-negative");
  if (!(chi > 0.0)) fail("chi must be positive");
  if (!(max_cfo >= 0.0 && max_cfo < 0.5)) fail("max_cfo must lie in [0, 0.5) (fractional CFO)");
  if (fft_size < antennas) fail("fft_size must be at least antennas");
  if (beam_threshold <= 0.0) fail("beam_threshold must be positive");
  if (critical_ratio < 0.0) fail("critical_ratio must be non-negative");
  if (guard < 0.0) fail("guard must be non-negative");
  if (iterations < 1) fail("iterations must be positive");
  if (short_train_len < taps || short_train_len > subcarriers) {
    fail("short_train_len must lie in [taps, subcarriers]");
  }
  if (!pdp.empty()) {
    if (static_cast<int>(pdp.size()) != taps) fail("pdp length must equal taps");
    double sum = std::accumulate(pdp.begin(), pdp.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) fail("pdp must sum to 1");
    for (double v : pdp) {
      if (v < 0.0) fail("pdp entries must be non-negative");
    }
  }
}

namespace channel {

ComplexVector steering_vector(double theta, int antennas, double chi) {
  ComplexVector a(antennas);
  const double step = -chi * std::cos(theta);
  for (int m = 0; m < antennas; ++m) {
    const double arg = step * m;
    a(m) = Complex(std::cos(arg), std::sin(arg));
  }
  return a;
}

UserChannel from_rays(const RealMatrix& ray_doas, const ComplexMatrix& ray_gains, int antennas,
                      double chi, double cfo, double mean_doa) {
  if (ray_doas.rows() != ray_gains.rows() || ray_doas.cols() != ray_gains.cols()) {
    throw std::invalid_argument("from_rays: DOA and gain shapes differ");
  }
  const Eigen::Index taps = ray_doas.rows();
  const Eigen::Index rays = ray_doas.cols();
  UserChannel user;
  user.taps = ComplexMatrix::Zero(taps, antennas);
  for (Eigen::Index l = 0; l < taps; ++l) {
    for (Eigen::Index p = 0; p < rays; ++p) {
      user.taps.row(l) += ray_gains(l, p) * steering_vector(ray_doas(l, p), antennas, chi).transpose();
    }
  }
  user.cfo = cfo;
  user.mean_doa = mean_doa;
  user.ray_doas = ray_doas;
  user.ray_gains = ray_gains;
  return user;
}

UserChannel draw_channel(const SystemConfig& cfg, double mean_doa, Rng& rng) {
  const double lo = mean_doa - cfg.angular_spread;
  const double hi = mean_doa + cfg.angular_spread;
  if (!(lo > 0.0 && hi < kPi)) {
    throw std::invalid_argument("draw_channel: DOA region leaves (0, pi)");
  }
  const std::vector<double> powers = cfg.tap_powers();
  std::uniform_real_distribution<double> doa_dist(lo, hi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RealMatrix doas(cfg.taps, cfg.rays);
  ComplexMatrix gains(cfg.taps, cfg.rays);
  for (int l = 0; l < cfg.taps; ++l) {
    const double sigma = std::sqrt(powers[static_cast<std::size_t>(l)] / (2.0 * cfg.rays));
    for (int p = 0; p < cfg.rays; ++p) {
      doas(l, p) = doa_dist(rng);
    }
    for (int p = 0; p < cfg.rays; ++p) {
      gains(l, p) = Complex(sigma * gauss(rng), sigma * gauss(rng));
    }
  }
  return from_rays(doas, gains, cfg.antennas, cfg.chi, 0.0, mean_doa);
}

ComplexMatrix spatial_correlation(double mean_doa, double spread, double chi, int antennas) {
  const double lo = mean_doa - spread;
  const double hi = mean_doa + spread;
  if (!(lo >= 0.0 && hi <= kPi)) {
    throw std::invalid_argument("spatial_correlation: DOA region leaves (0, pi)");
  }
  ComplexVector lags(antennas);
  if (spread <= 1e-12) {
    // Point-mass limit: rank-one conj(a) a^T.
    for (int d = 0; d < antennas; ++d) {
      const double arg = chi * d * std::cos(mean_doa);
      lags(d) = Complex(std::cos(arg), std::sin(arg));
    }
  } else {
    using boost::math::quadrature::gauss_kronrod;
    const double scale = 1.0 / (2.0 * spread);
    for (int d = 0; d < antennas; ++d) {
      if (d == 0) {
        lags(0) = 1.0;
        continue;
      }
      auto re = [&](double t) { return std::cos(chi * d * std::cos(t)); };
      auto im = [&](double t) { return std::sin(chi * d * std::cos(t)); };
      const double vr = gauss_kronrod<double, 31>::integrate(re, lo, hi, 12, 1e-10);
      const double vi = gauss_kronrod<double, 31>::integrate(im, lo, hi, 12, 1e-10);
      lags(d) = scale * Complex(vr, vi);
    }
  }
  ComplexMatrix r(antennas, antennas);
  for (int i = 0; i < antennas; ++i) {
    for (int j = 0; j < antennas; ++j) {
      r(i, j) = (i >= j) ? lags(i - j) : std::conj(lags(j - i));
    }
  }
  return r;
}

std::vector<double> draw_cfos(int users, double max_cfo, Rng& rng) {
  if (!(max_cfo >= 0.0 && max_cfo < 0.5)) {
    throw std::invalid_argument("draw_cfos: max_cfo must lie in [0, 0.5)");
  }
  std::vector<double> cfos(static_cast<std::size_t>(users), 0.0);
  if (max_cfo > 0.0) {
    std::uniform_real_distribution<double> dist(-max_cfo, max_cfo);
    for (auto& v : cfos) {
      v = dist(rng);
    }
  }
  return cfos;
}

ComplexMatrix complex_gaussian(int rows, int cols, double var, Rng& rng) {
  ComplexMatrix n = ComplexMatrix::Zero(rows, cols);
  if (var <= 0.0) {
    return n;
  }
  std::normal_distribution<double> gauss(0.0, std::sqrt(var / 2.0));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      n(r, c) = Complex(gauss(rng), gauss(rng));
    }
  }
  return n;
}

}  // namespace channel
}  // namespace beamsync
