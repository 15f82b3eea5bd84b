#pragma once

#include <string>
#include <vector>

#include "spdnet/layers.hpp"
#include "spdnet/mat.hpp"
#include "spdnet/mc_spd.hpp"

namespace spdnet {

// Independent brute-force constructions used to certify the layer
// implementations. Allowed to be slow; never on the training path.

// Symmetric factor H with w = H H^T, built from the eigen square root
// H = U diag(sqrt(lambda)). Rejects non-SPD input.
Mat kernel_factorize(const Mat& w);

// Banded matrix G_h in R^{(d-k+1) x d}: row r carries h at columns r..r+k-1.
Mat toeplitz_matrix(const std::vector<double>& h, int d);

// O = sum_i G_{h_i} X G_{h_i}^T over the columns h_i of the factor of w.
// Equals the direct convolution of x with the SPD kernel w.
Mat toeplitz_conv_oracle(const Mat& x, const Mat& w);

// Truncated Hadamard power series of exp/sinh/cosh: `terms` summands
// starting at the series' first term (exp: powers 0..terms-1; sinh: odd
// powers 1..2*terms-1; cosh: even powers 0..2*(terms-1)).
Mat hadamard_series_oracle(const Mat& x, ActKind kind, int terms);

struct SpdChannelReport {
  int index = 0;
  double symmetry_residual = 0.0;  // max |a_ij - a_ji| / max |a_ij|
  double min_eigenvalue = 0.0;
  bool pass = false;
};

struct SpdCertReport {
  std::vector<SpdChannelReport> channels;
  bool pass = false;
  int first_failed_channel = -1;
  std::string summary() const;
};

// Per-channel symmetry residual and smallest eigenvalue; pass iff the
// residual is within 1e-12 relative and min eigenvalue > -1e-10 * trace / D.
SpdCertReport certify_spd(const McSpdTensor& x);

// log(Z) = U diag(log lambda) U^T via the eigen oracle.
Mat matrix_log_spd(const Mat& z);

// Frobenius norm of log(a) - log(b). Oracle for the diagonal metric.
double general_log_euclidean(const Mat& a, const Mat& b);

}  // namespace spdnet
