#pragma once

#include <vector>

#include "spdnet/mat.hpp"

namespace spdnet {

// Eigendecomposition of a symmetric matrix: a = vectors * diag(values) * vectors^T,
// values ascending, vectors orthogonal with eigenvectors as columns.
struct EigenPair {
  std::vector<double> values;
  Mat vectors;
};

// Cyclic Jacobi rotations to convergence (off-diagonal Frobenius norm below
// 1e-12 * |a|_F). Certification oracle only; the network layers never call it.
// Rejects non-symmetric input (1e-10 relative) and reports the residual if
// 100 sweeps do not converge.
EigenPair sym_eig(const Mat& a);

double min_eigenvalue(const Mat& a);

}  // namespace spdnet
