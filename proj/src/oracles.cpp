#include "spdnet/oracles.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spdnet/sym_eig.hpp"

namespace spdnet {

Mat kernel_factorize(const Mat& w) {
  if (w.rows() != w.cols())
    throw std::invalid_argument("kernel_factorize: not square " + shape_string(w));
  const EigenPair eig = sym_eig(w);
  if (eig.values.front() <= 0.0)
    throw std::invalid_argument("kernel_factorize: input not SPD, min eigenvalue " +
                                std::to_string(eig.values.front()));
  Mat h = eig.vectors;
  for (int c = 0; c < h.cols(); ++c) {
    const double s = std::sqrt(eig.values[c]);
    for (int r = 0; r < h.rows(); ++r) h(r, c) *= s;
  }
  return h;
}

Mat toeplitz_matrix(const std::vector<double>& h, int d) {
  const int k = int(h.size());
  if (k < 1 || d < k) throw std::invalid_argument("toeplitz_matrix: need 1 <= k <= d");
  Mat g(d - k + 1, d);
  for (int r = 0; r < g.rows(); ++r)
    for (int i = 0; i < k; ++i) g(r, r + i) = h[i];
  return g;
}

Mat toeplitz_conv_oracle(const Mat& x, const Mat& w) {
  if (x.rows() != x.cols())
    throw std::invalid_argument("toeplitz_conv_oracle: input not square " + shape_string(x));
  const int d = x.rows(), k = w.rows();
  if (d < k) throw std::invalid_argument("toeplitz_conv_oracle: input smaller than kernel");
  const Mat factor = kernel_factorize(w);
  Mat out(d - k + 1, d - k + 1);
  for (int c = 0; c < k; ++c) {
    std::vector<double> h(k);
    for (int r = 0; r < k; ++r) h[r] = factor(r, c);
    const Mat g = toeplitz_matrix(h, d);
    out = add(out, matmul(matmul(g, x), transpose(g)));
  }
  return out;
}

Mat hadamard_series_oracle(const Mat& x, ActKind kind, int terms) {
  if (terms < 1) throw std::invalid_argument("hadamard_series_oracle: terms must be >= 1");
  Mat sum(x.rows(), x.cols());
  Mat power(x.rows(), x.cols(), 1.0);  // X^0 = all-ones
  double factorial = 1.0;
  int exponent = 0;

  auto advance = [&](int target) {
    while (exponent < target) {
      power = hadamard(power, x);
      ++exponent;
      factorial *= exponent;
    }
  };

  for (int t = 0; t < terms; ++t) {
    int target = 0;
    switch (kind) {
      case ActKind::kExp: target = t; break;
      case ActKind::kSinh: target = 2 * t + 1; break;
      case ActKind::kCosh: target = 2 * t; break;
    }
    advance(target);
    sum = add(sum, scale(power, 1.0 / factorial));
  }
  return sum;
}

std::string SpdCertReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " (" << channels.size() << " channels";
  if (!pass) os << ", first failure at channel " << first_failed_channel;
  os << ")";
  for (const SpdChannelReport& c : channels)
    os << "\n  channel " << c.index << ": sym_residual=" << c.symmetry_residual
       << " min_eig=" << c.min_eigenvalue << (c.pass ? " ok" : " FAIL");
  return os.str();
}

SpdCertReport certify_spd(const McSpdTensor& x) {
  SpdCertReport report;
  report.pass = true;
  for (int i = 0; i < x.channel_count(); ++i) {
    const Mat& a = x.channel(i);
    SpdChannelReport ch;
    ch.index = i;
    const double scale = std::max(max_abs_entry(a), 1e-300);
    double worst = 0.0;
    for (int r = 0; r < a.rows(); ++r)
      for (int c = r + 1; c < a.cols(); ++c)
        worst = std::max(worst, std::fabs(a(r, c) - a(c, r)));
    ch.symmetry_residual = worst / scale;
    if (ch.symmetry_residual <= 1e-12) {
      ch.min_eigenvalue = min_eigenvalue(symmetrize(a));
      ch.pass = ch.min_eigenvalue > -1e-10 * trace(a) / std::max(1, a.rows());
    } else {
      ch.pass = false;
    }
    if (!ch.pass && report.first_failed_channel < 0) report.first_failed_channel = i;
    report.pass = report.pass && ch.pass;
    report.channels.push_back(ch);
  }
  return report;
}

Mat matrix_log_spd(const Mat& z) {
  const EigenPair eig = sym_eig(z);
  if (eig.values.front() <= 0.0)
    throw std::invalid_argument("matrix_log_spd: input not SPD, min eigenvalue " +
                                std::to_string(eig.values.front()));
  Mat scaled = eig.vectors;  // U diag(log lambda)
  for (int c = 0; c < scaled.cols(); ++c) {
    const double lg = std::log(eig.values[c]);
    for (int r = 0; r < scaled.rows(); ++r) scaled(r, c) *= lg;
  }
  return matmul(scaled, transpose(eig.vectors));
}

double general_log_euclidean(const Mat& a, const Mat& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("general_log_euclidean: shape mismatch " + shape_string(a) +
                                " vs " + shape_string(b));
  return fro_norm(sub(matrix_log_spd(a), matrix_log_spd(b)));
}

}  // namespace spdnet
