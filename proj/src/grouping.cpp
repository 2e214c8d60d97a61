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

#include "beamsync/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace beamsync::grouping {

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[static_cast<std::size_t>(i)] != i) {
    parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    i = parent[static_cast<std::size_t>(i)];
  }
  return i;
}

void unite(std::vector<int>& parent, int a, int b) {
  parent[static_cast<std::size_t>(find_root(parent, a))] = find_root(parent, b);
}

}  // namespace

double estimate_noise_power(const BeamSpectrum& spectrum) {
  if (spectrum.grid.bins.empty()) {
    throw std::runtime_error("estimate_noise_power: empty grid");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& bin : spectrum.grid.bins) {
    best = std::min(best, spectrum.beam_power(bin.fft_index));
  }
  return best;
}

std::vector<UserClass> classify_users(const std::vector<QualifiedDoaSet>& qualified,
                                      const BeamSpectrum& spectrum, const SystemConfig& cfg) {
  const double noise = estimate_noise_power(spectrum);
  const double expected_snr =
      (spectrum.block_power / static_cast<double>(cfg.users)) / std::max(noise, 1e-300);
  std::vector<UserClass> classes;
  classes.reserve(qualified.size());
  for (const auto& set : qualified) {
    UserClass c;
    c.user = set.user;
    c.beam_snr = std::accumulate(set.metrics.begin(), set.metrics.end(), 0.0);
    c.critical = c.beam_snr < cfg.critical_ratio * expected_snr;
    classes.push_back(c);
  }
  return classes;
}

double set_distance(const QualifiedDoaSet& a, const QualifiedDoaSet& b, const DoaGrid& grid,
                    bool use_min) {
  if (a.bin_pos.empty() || b.bin_pos.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  double acc = use_min ? std::numeric_limits<double>::infinity() : 0.0;
  for (int pa : a.bin_pos) {
    const double ta = grid.bins[static_cast<std::size_t>(pa)].theta;
    for (int pb : b.bin_pos) {
      const double d = std::abs(ta - grid.bins[static_cast<std::size_t>(pb)].theta);
      acc = use_min ? std::min(acc, d) : std::max(acc, d);
    }
  }
  return acc;
}

GroupAssignment form_groups(const std::vector<UserClass>& classes,
                            const std::vector<QualifiedDoaSet>& qualified, const DoaGrid& grid,
                            const SystemConfig& cfg) {
  const int users = static_cast<int>(classes.size());
  std::vector<int> parent(static_cast<std::size_t>(users));
  std::iota(parent.begin(), parent.end(), 0);

  // Step 1: transitive closure of critical users within the guard interval.
  for (int i = 0; i < users; ++i) {
    if (!classes[static_cast<std::size_t>(i)].critical) continue;
    for (int j = i + 1; j < users; ++j) {
      if (!classes[static_cast<std::size_t>(j)].critical) continue;
      if (set_distance(qualified[static_cast<std::size_t>(i)], qualified[static_cast<std::size_t>(j)],
                       grid, cfg.group_dist_min) < cfg.guard) {
        unite(parent, i, j);
      }
    }
  }

  // Step 2: absorb each non-critical user into the nearest critical cluster
  // within the guard interval (lowest cluster root on ties).
  for (int i = 0; i < users; ++i) {
    if (classes[static_cast<std::size_t>(i)].critical) continue;
    double best = std::numeric_limits<double>::infinity();
    int target = -1;
    for (int j = 0; j < users; ++j) {
      if (!classes[static_cast<std::size_t>(j)].critical) continue;
      const double d = set_distance(qualified[static_cast<std::size_t>(i)],
                                    qualified[static_cast<std::size_t>(j)], grid,
                                    cfg.group_dist_min);
      if (d < cfg.guard && (d < best || (d == best && find_root(parent, j) < target))) {
        best = d;
        target = find_root(parent, j);
      }
    }
    if (target >= 0) {
      unite(parent, i, target);
    }
  }

  std::vector<std::vector<int>> clusters(static_cast<std::size_t>(users));
  for (int i = 0; i < users; ++i) {
    clusters[static_cast<std::size_t>(find_root(parent, i))].push_back(i);
  }

  GroupAssignment assignment;
  for (auto& members : clusters) {
    if (members.size() <= 1) {
      if (members.size() == 1) {
        assignment.singletons.push_back(members.front());
      }
      continue;
    }
    std::sort(members.begin(), members.end());
    Group g;
    g.members = members;
    const long dims = static_cast<long>(members.size()) * cfg.taps;
    if (dims >= cfg.subcarriers) {
      g.feasible = false;
      g.diagnostic = "group of " + std::to_string(members.size()) + " users needs " +
                     std::to_string(dims) + " training dimensions but only " +
                     std::to_string(cfg.subcarriers) + " exist";
    }
    assignment.groups.push_back(std::move(g));
  }
  std::sort(assignment.groups.begin(), assignment.groups.end(),
            [](const Group& a, const Group& b) { return a.members.front() < b.members.front(); });
  std::sort(assignment.singletons.begin(), assignment.singletons.end());
  return assignment;
}

GroupBeamformer group_beamform(const Group& group, const std::vector<QualifiedDoaSet>& qualified,
                               const DoaGrid& grid, const SystemConfig& cfg) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int user : group.members) {
    for (int pos : qualified[static_cast<std::size_t>(user)].bin_pos) {
      const double t = grid.bins[static_cast<std::size_t>(pos)].theta;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (!std::isfinite(lo)) {
    throw std::runtime_error("group_beamform: no qualified DOAs in group");
  }
  const int branches = static_cast<int>(group.members.size()) * cfg.taps;
  GroupBeamformer bf;
  bf.directions.reserve(static_cast<std::size_t>(branches));
  for (int i = 0; i < branches; ++i) {
    const double psi =
        (branches == 1) ? lo : lo + i * (hi - lo) / (branches - 1);
    if (!bf.directions.empty() && psi == bf.directions.back()) {
      bf.deduplicated = true;
      continue;
    }
    bf.directions.push_back(psi);
  }
  bf.w.resize(cfg.antennas, static_cast<Eigen::Index>(bf.directions.size()));
  for (std::size_t i = 0; i < bf.directions.size(); ++i) {
    bf.w.col(static_cast<Eigen::Index>(i)) =
        channel::steering_vector(bf.directions[i], cfg.antennas, cfg.chi).conjugate();
  }
  return bf;
}

ComplexMatrix stacked_training(const std::vector<double>& cfos,
                               const std::vector<ComplexMatrix>& bases) {
  if (cfos.size() != bases.size() || bases.empty()) {
    throw std::invalid_argument("stacked_training: need one CFO per training matrix");
  }
  const Eigen::Index n = bases.front().rows();
  Eigen::Index cols = 0;
  for (const auto& b : bases) {
    cols += b.cols();
  }
  ComplexMatrix stacked(n, cols);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < bases.size(); ++k) {
    const ComplexVector rot = signal::phase_rotation(cfos[k], static_cast<int>(n));
    stacked.middleCols(at, bases[k].cols()) = rot.asDiagonal() * bases[k];
    at += bases[k].cols();
  }
  return stacked;
}

GroupCost group_cost(const std::vector<double>& cfo_trial, const ComplexMatrix& y_group,
                     const std::vector<ComplexMatrix>& bases) {
  const ComplexMatrix stacked = stacked_training(cfo_trial, bases);
  GroupCost out;
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(stacked);
  qr.setThreshold(numerics::kRankTolerance);
  const Eigen::Index rank = qr.rank();
  out.rank_collapse = rank < stacked.cols();
  const ComplexMatrix q =
      qr.householderQ() * ComplexMatrix::Identity(stacked.rows(), rank);
  const ComplexMatrix r = y_group * y_group.adjoint();
  out.value = std::max(0.0, r.squaredNorm() - (q.adjoint() * r).squaredNorm());
  return out;
}

RefineResult refine_cfos(const std::vector<double>& coarse, const ComplexMatrix& y_group,
                         const std::vector<ComplexMatrix>& bases) {
  const int members = static_cast<int>(bases.size());
  const Eigen::Index n = bases.front().rows();
  Eigen::Index signal_dims = 0;
  for (const auto& b : bases) {
    signal_dims += b.cols();
  }
  RefineResult out;
  out.cfos = coarse;
  if (signal_dims >= n) {
    out.fallback = true;
    return out;
  }

  // Rotated training matrices and the projector spectrum around the anchor.
  std::vector<ComplexMatrix> rotated(static_cast<std::size_t>(members));
  for (int k = 0; k < members; ++k) {
    const ComplexVector rot = signal::phase_rotation(coarse[static_cast<std::size_t>(k)],
                                                     static_cast<int>(n));
    rotated[static_cast<std::size_t>(k)] = rot.asDiagonal() * bases[static_cast<std::size_t>(k)];
  }
  ComplexMatrix pi = ComplexMatrix::Zero(n, n);
  for (const auto& b : rotated) {
    pi += b * b.adjoint();
  }
  const numerics::EigenDecomposition eig = numerics::eig_hermitian(pi);
  const Eigen::Index noise_dims = n - signal_dims;
  const ComplexMatrix u_noise = eig.eigenvectors.leftCols(noise_dims);
  const ComplexMatrix u_signal = eig.eigenvectors.rightCols(signal_dims);
  const RealVector lambda = eig.eigenvalues.tail(signal_dims);

  const double lambda_max = lambda(lambda.size() - 1);
  RealVector inv_lambda = RealVector::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > 1e-10 * lambda_max) {
      inv_lambda(i) = 1.0 / lambda(i);
    }
  }

  ComplexVector ramp(n), ramp_sq(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Complex d(0.0, 2.0 * kPi * static_cast<double>(r) / n);
    ramp(r) = d;
    ramp_sq(r) = d * d;
  }

  const ComplexMatrix r_grp = y_group * y_group.adjoint();
  const ComplexMatrix weighted_signal =
      u_signal * inv_lambda.asDiagonal() * u_signal.adjoint();  // U_s diag(1/lambda) U_s^H

  std::vector<ComplexMatrix> b_ops(static_cast<std::size_t>(members));
  std::vector<ComplexMatrix> rb_ops(static_cast<std::size_t>(members));
  RealVector rhs(members), diag_second(members);
  const ComplexMatrix ramp_noise = ramp.conjugate().asDiagonal() * u_noise;      // D^H U_n
  const ComplexMatrix ramp_sq_noise = ramp_sq.conjugate().asDiagonal() * u_noise;  // D^{2H} U_n
  for (int k = 0; k < members; ++k) {
    const ComplexMatrix& bk = rotated[static_cast<std::size_t>(k)];
    const ComplexMatrix first = bk * (bk.adjoint() * ramp_noise);
    const ComplexMatrix second =
        bk * (bk.adjoint() * ramp_sq_noise) +
        2.0 * (ramp.asDiagonal() * first);
    b_ops[static_cast<std::size_t>(k)] = -(weighted_signal * first);
    const ComplexMatrix d_op = -(weighted_signal * second);
    rb_ops[static_cast<std::size_t>(k)] = r_grp * b_ops[static_cast<std::size_t>(k)];
    rhs(k) =
        -(u_noise.conjugate().cwiseProduct(rb_ops[static_cast<std::size_t>(k)])).sum().real();
    diag_second(k) = (u_noise.conjugate().cwiseProduct(r_grp * d_op)).sum().real();
  }

  RealMatrix system(members, members);
  for (int k = 0; k < members; ++k) {
    for (int q = 0; q < members; ++q) {
      system(k, q) = (b_ops[static_cast<std::size_t>(k)]
                          .conjugate()
                          .cwiseProduct(rb_ops[static_cast<std::size_t>(q)]))
                         .sum()
                         .real();
    }
    system(k, k) += diag_second(k);
  }

  Eigen::FullPivLU<RealMatrix> lu(system);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    out.fallback = true;
    return out;
  }
  const RealVector delta = lu.solve(rhs);
  if (!delta.allFinite() || delta.cwiseAbs().maxCoeff() > 0.1) {
    out.fallback = true;
    return out;
  }
  for (int k = 0; k < members; ++k) {
    out.cfos[static_cast<std::size_t>(k)] += delta(k);
  }
  return out;
}

ComplexMatrix circulant_lift(const ComplexVector& taps, int n) {
  if (taps.size() > n) {
    throw std::invalid_argument("circulant_lift: more taps than samples");
  }
  ComplexMatrix h = ComplexMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < static_cast<int>(taps.size()); ++l) {
      h((j + l) % n, j) = taps(l);
    }
  }
  return h;
}

std::vector<DetectedBlock> detect_group(const ComplexMatrix& y_data_group,
                                        const std::vector<double>& cfos,
                                        const ComplexMatrix& h_eq, int block_index,
                                        const SystemConfig& cfg) {
  const int members = static_cast<int>(cfos.size());
  const int n = cfg.subcarriers;
  const int branches = static_cast<int>(y_data_group.cols());
  if (h_eq.rows() != static_cast<Eigen::Index>(members) * cfg.taps || h_eq.cols() != branches) {
    throw std::invalid_argument("detect_group: equivalent-channel shape mismatch");
  }

  // Stacked circulant model: vec(Y) = H (eta kron F^H) s.
  ComplexMatrix lifted(static_cast<Eigen::Index>(branches) * n,
                       static_cast<Eigen::Index>(members) * n);
  for (int k = 0; k < members; ++k) {
    const ComplexVector rot = signal::phase_rotation(cfos[static_cast<std::size_t>(k)], n);
    for (int q = 0; q < branches; ++q) {
      const ComplexVector taps = h_eq.block(static_cast<Eigen::Index>(k) * cfg.taps, q,
                                            cfg.taps, 1);
      lifted.block(static_cast<Eigen::Index>(q) * n, static_cast<Eigen::Index>(k) * n, n, n) =
          rot.asDiagonal() * circulant_lift(taps, n);
    }
  }

  const ComplexVector observed =
      Eigen::Map<const ComplexVector>(y_data_group.data(), y_data_group.size());

  std::vector<DetectedBlock> out(static_cast<std::size_t>(members));
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(lifted);
  qr.setThreshold(numerics::kRankTolerance);
  if (qr.rank() < lifted.cols()) {
    for (auto& block : out) {
      block.equalized = ComplexVector::Zero(n);
      block.decisions.assign(static_cast<std::size_t>(n), -1);
      block.erasures = true;
    }
    return out;
  }
  const ComplexVector time_domain = qr.solve(observed);

  const ComplexMatrix f = numerics::dft_matrix(n);
  for (int k = 0; k < members; ++k) {
    const Complex eta =
        signal::data_phase(cfos[static_cast<std::size_t>(k)], block_index, n, cfg.cp_len);
    DetectedBlock& block = out[static_cast<std::size_t>(k)];
    block.equalized = std::conj(eta) * (f * time_domain.segment(static_cast<Eigen::Index>(k) * n, n));
    block.decisions.resize(static_cast<std::size_t>(n));
    for (int sc = 0; sc < n; ++sc) {
      block.decisions[static_cast<std::size_t>(sc)] = signal::qam16_decide(block.equalized(sc));
    }
  }
  return out;
}

}  // namespace beamsync::grouping
