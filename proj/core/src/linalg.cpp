#include "spinbus/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include "spinbus/errors.hpp"

namespace spinbus {

namespace {

std::atomic<std::size_t> fallbacks{0};

SymmetricEigensystem eigen_solve(const Eigen::MatrixXd& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// max_x |A x - V diag(w) V^T x| over a few fixed pseudo-random probes.
bool passes_probe(const Eigen::MatrixXd& a, const SymmetricEigensystem& eig) {
  if (!eig.values.allFinite() || !eig.vectors.allFinite()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff()) * static_cast<double>(a.rows());
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  for (int probe = 0; probe < 2; ++probe) {
    Eigen::VectorXd x(a.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
    x.normalize();
    const Eigen::VectorXd direct = a * x;
    const Eigen::VectorXd coeffs = eig.vectors.transpose() * x;
    const Eigen::VectorXd spectral = eig.vectors * eig.values.cwiseProduct(coeffs);
    if (!((direct - spectral).norm() <= 1e-10 * scale) || std::abs(coeffs.norm() - 1.0) > 1e-10) return false;
  }
  return true;
}

}  // namespace

SymmetricEigensystem symmetric_eigensystem(const Eigen::MatrixXd& matrix, EigenBackend backend) {
  if (matrix.rows() != matrix.cols()) throw DomainError("eigensystem of a non-square matrix");
  if (backend == EigenBackend::Eigen) return eigen_solve(matrix);
  SymmetricEigensystem out;
  const auto n = static_cast<lapack_int>(matrix.rows());
  out.vectors = matrix;
  out.values.resize(n);
  if (n == 0) return out;
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, out.vectors.data(), n, out.values.data());
  if (info == 0 && passes_probe(matrix, out)) return out;
  ++fallbacks;
  return eigen_solve(matrix);
}

std::size_t lapack_fallback_count() { return fallbacks.load(); }

void multiply(const SparseMatrix& h, const Eigen::Ref<const Eigen::VectorXcd>& in, Eigen::Ref<Eigen::VectorXcd> out) {
  const int* outer = h.outerIndexPtr();
  const int* inner = h.innerIndexPtr();
  const double* values = h.valuePtr();
  for (Eigen::Index row = 0; row < h.rows(); ++row) {
    Complex acc{};
    for (int p = outer[row]; p < outer[row + 1]; ++p) acc += values[p] * in[inner[p]];
    out[row] = acc;
  }
}

void multiply(const SparseMatrix& h, const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out) {
  out.resize(h.rows(), in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) multiply(h, in.col(c), out.col(c));
}

void multiply_right_symmetric(const Eigen::MatrixXcd& in, const SparseMatrix& h, Eigen::MatrixXcd& out) {
  // (X H)(:, c) = sum_l X(:, l) H(l, c); row l of H lists the nonzero H(l, c).
  out.setZero(in.rows(), h.cols());
  const int* outer = h.outerIndexPtr();
  const int* inner = h.innerIndexPtr();
  const double* values = h.valuePtr();
  for (Eigen::Index l = 0; l < h.rows(); ++l) {
    for (int p = outer[l]; p < outer[l + 1]; ++p) out.col(inner[p]) += values[p] * in.col(l);
  }
}

}  // namespace spinbus
