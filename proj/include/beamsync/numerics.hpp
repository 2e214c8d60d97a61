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

#include <Eigen/Dense>

#include <complex>
#include <random>

namespace beamsync {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

/// Degrees at the configuration surface, radians everywhere else.
inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

namespace numerics {

/// Singular values below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// N x N unitary DFT matrix, entry (i,j) = exp(-j*2*pi*i*j/N)/sqrt(N).
/// Throws std::invalid_argument for n < 1.
ComplexMatrix dft_matrix(int n);

/// Orthonormal basis Q of the column space of b (same shape as b), so that
/// Q^H Q = I and Q Q^H is the orthogonal projector onto Span(b).
/// Throws std::runtime_error if b is rank deficient.
ComplexMatrix orthonormal_basis(const ComplexMatrix& b);

/// I - b (b^H b)^{-1} b^H, the projector onto the orthogonal complement of
/// Span(b). Throws std::runtime_error if b is rank deficient.
ComplexMatrix projector_complement(const ComplexMatrix& b);

struct EigenDecomposition {
  RealVector eigenvalues;      // ascending
  ComplexMatrix eigenvectors;  // orthonormal columns, same order
};

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as
/// (a + a^H)/2 before factorization to absorb round-off.
/// Throws std::invalid_argument for non-square input.
EigenDecomposition eig_hermitian(const ComplexMatrix& a);

/// Moore-Penrose pseudo-inverse via SVD with the kRankTolerance cutoff.
ComplexMatrix pseudo_inverse(const ComplexMatrix& a);

/// Forward DFT of every row of y, zero-padded to fft_size columns:
/// out(r, k) = sum_m y(r, m) * exp(-j*2*pi*m*k/fft_size).
/// Requires fft_size >= y.cols().
ComplexMatrix fft_rows(const ComplexMatrix& y, int fft_size);

}  // namespace numerics
}  // namespace beamsync
