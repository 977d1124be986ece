#pragma once

#include <Eigen/Dense>

#include "spinbus/hamiltonian.hpp"

namespace spinbus {

struct SymmetricEigensystem {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns are orthonormal eigenvectors
};

enum class EigenBackend { Lapack, Eigen };

/// Full eigendecomposition of a real symmetric matrix. The LAPACK path
/// (dsyevd) is probed with random vectors afterwards; some OpenBLAS kernel
/// builds return garbage with info = 0, in which case the result is
/// recomputed with Eigen's solver. Throws NumericalError if nothing converges.
SymmetricEigensystem symmetric_eigensystem(const Eigen::MatrixXd& matrix, EigenBackend backend = EigenBackend::Lapack);

/// Number of LAPACK results rejected by the probe so far (process-wide).
std::size_t lapack_fallback_count();

/// out = H * in for a real sparse H and complex vectors.
void multiply(const SparseMatrix& h, const Eigen::Ref<const Eigen::VectorXcd>& in, Eigen::Ref<Eigen::VectorXcd> out);

/// out = H * in, column by column.
void multiply(const SparseMatrix& h, const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out);

/// out = in * H for symmetric H.
void multiply_right_symmetric(const Eigen::MatrixXcd& in, const SparseMatrix& h, Eigen::MatrixXcd& out);

}  // namespace spinbus
