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

#include "beamsync/numerics.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <vector>

namespace beamsync::numerics {

namespace {
// FFTW plan creation/destruction is not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

ComplexMatrix dft_matrix(int n) {
  if (n < 1) {
    throw std::invalid_argument("dft_matrix: size must be positive");
  }
  ComplexMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double arg = -2.0 * kPi * static_cast<double>(i) * static_cast<double>(j) / n;
      f(i, j) = scale * Complex(std::cos(arg), std::sin(arg));
    }
  }
  return f;
}

ComplexMatrix orthonormal_basis(const ComplexMatrix& b) {
  if (b.rows() < b.cols() || b.cols() == 0) {
    throw std::invalid_argument("orthonormal_basis: need a tall nonempty matrix");
  }
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(b);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < b.cols()) {
    throw std::runtime_error("orthonormal_basis: rank-deficient input (rank " +
                             std::to_string(qr.rank()) + " of " + std::to_string(b.cols()) + ")");
  }
  return qr.householderQ() * ComplexMatrix::Identity(b.rows(), b.cols());
}

ComplexMatrix projector_complement(const ComplexMatrix& b) {
  const ComplexMatrix q = orthonormal_basis(b);
  ComplexMatrix p = -(q * q.adjoint());
  p.diagonal().array() += 1.0;
  return p;
}

EigenDecomposition eig_hermitian(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("eig_hermitian: matrix must be square");
  }
  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eig_hermitian: factorization failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix pseudo_inverse(const ComplexMatrix& a) {
  if (a.size() == 0) {
    return ComplexMatrix(a.cols(), a.rows());
  }
  Eigen::BDCSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  const double cutoff = kRankTolerance * sv(0);
  RealVector inv = RealVector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) {
      inv(i) = 1.0 / sv(i);
    }
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

ComplexMatrix fft_rows(const ComplexMatrix& y, int fft_size) {
  if (fft_size < y.cols()) {
    throw std::invalid_argument("fft_rows: fft_size smaller than row length");
  }
  ComplexMatrix out(y.rows(), fft_size);
  std::vector<Complex> buf(static_cast<std::size_t>(fft_size));
  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());

  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(fft_size, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      buf[static_cast<std::size_t>(c)] = y(r, c);
    }
    std::fill(buf.begin() + y.cols(), buf.end(), Complex(0.0, 0.0));
    fftw_execute(plan);
    for (int k = 0; k < fft_size; ++k) {
      out(r, k) = buf[static_cast<std::size_t>(k)];
    }
  }
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace beamsync::numerics
