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

#include "beamsync/beamform.hpp"

#include <string>
#include <vector>

namespace beamsync {

struct UserClass {
  int user = -1;
  double beam_snr = 0.0;  // sum of qualified-beam metrics
  bool critical = false;
};

struct Group {
  std::vector<int> members;  // user indices, ascending
  bool feasible = true;      // members*taps < subcarriers
  std::string diagnostic;
};

/// Partition of the users: multi-user groups plus singletons handled by the
/// per-user pipeline.
struct GroupAssignment {
  std::vector<Group> groups;
  std::vector<int> singletons;
};

struct GroupBeamformer {
  ComplexMatrix w;                  // M x Q
  std::vector<double> directions;   // radians per column
  bool deduplicated = false;        // coincident directions were merged
};

namespace grouping {

/// Smallest beam power over the grid; raw units of N*M*sigma_n^2.
double estimate_noise_power(const BeamSpectrum& spectrum);

/// Critical-user classification from the per-user qualified sets.
std::vector<UserClass> classify_users(const std::vector<QualifiedDoaSet>& qualified,
                                      const BeamSpectrum& spectrum, const SystemConfig& cfg);

/// Angle-domain distance between two qualified sets: the paper's max
/// pairwise angle gap, or the min gap when cfg.group_dist_min is set.
double set_distance(const QualifiedDoaSet& a, const QualifiedDoaSet& b, const DoaGrid& grid,
                    bool use_min);

/// Two-step grouping: cluster critical users within the guard interval,
/// then absorb non-critical users within the guard of a cluster.
GroupAssignment form_groups(const std::vector<UserClass>& classes,
                            const std::vector<QualifiedDoaSet>& qualified, const DoaGrid& grid,
                            const SystemConfig& cfg);

/// Q = members*taps conjugate steering columns uniform over the group's
/// qualified DOA range.
GroupBeamformer group_beamform(const Group& group, const std::vector<QualifiedDoaSet>& qualified,
                               const DoaGrid& grid, const SystemConfig& cfg);

/// Stacked per-user training matrices [E(phi_1)B_1, ..., E(phi_k)B_k].
ComplexMatrix stacked_training(const std::vector<double>& cfos,
                               const std::vector<ComplexMatrix>& bases);

struct GroupCost {
  double value = 0.0;
  bool rank_collapse = false;
};

/// Residual energy ||P^perp_B(cfos) Y_grp Y_grp^H||^2 of the stacked model.
GroupCost group_cost(const std::vector<double>& cfo_trial, const ComplexMatrix& y_group,
                     const std::vector<ComplexMatrix>& bases);

struct RefineResult {
  std::vector<double> cfos;
  bool fallback = false;  // singular system or trust region hit
};

/// Joint CFO refinement: eigen-perturbation of the stacked-training
/// projector around the coarse estimates, solved as a members x members
/// linear system. Falls back to the coarse values when the system is
/// singular or any step exceeds 0.1.
RefineResult refine_cfos(const std::vector<double>& coarse, const ComplexMatrix& y_group,
                         const std::vector<ComplexMatrix>& bases);

/// Circular-convolution matrix of the zero-padded taps; equals
/// sqrt(N) F^H diag(F_L h) F.
ComplexMatrix circulant_lift(const ComplexVector& taps, int n);

/// Joint ZF detection of one beamformed data block for every group member.
/// h_eq is members*taps x branches as estimated from the training block.
std::vector<DetectedBlock> detect_group(const ComplexMatrix& y_data_group,
                                        const std::vector<double>& cfos,
                                        const ComplexMatrix& h_eq, int block_index,
                                        const SystemConfig& cfg);

}  // namespace grouping
}  // namespace beamsync
