#include "spdnet/sym_eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace spdnet {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kConvergeRel = 1e-12;

double off_diagonal_norm(const Mat& a) {
  double s = 0.0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c)
      if (r != c) s += a(r, c) * a(r, c);
  return std::sqrt(s);
}

}  // namespace

EigenPair sym_eig(const Mat& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("sym_eig: not square " + shape_string(a));
  if (!is_symmetric(a, 1e-10)) {
    double worst = 0.0;
    for (int r = 0; r < a.rows(); ++r)
      for (int c = r + 1; c < a.cols(); ++c)
        worst = std::max(worst, std::fabs(a(r, c) - a(c, r)));
    std::ostringstream os;
    os << "sym_eig: input not symmetric, max |a_ij - a_ji| = " << worst;
    throw std::invalid_argument(os.str());
  }

  const int n = a.rows();
  Mat work = symmetrize(a);
  Mat vecs = Mat::identity(n);
  const double target = kConvergeRel * std::max(fro_norm(work), 1e-300);

  int sweep = 0;
  double off = off_diagonal_norm(work);
  while (off > target) {
    if (sweep++ >= kMaxSweeps) {
      std::ostringstream os;
      os << "sym_eig: no convergence after " << kMaxSweeps
         << " sweeps, off-diagonal norm " << off << " (target " << target << ")";
      throw std::runtime_error(os.str());
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = work(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double tau = (work(q, q) - work(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double wip = work(i, p), wiq = work(i, q);
          work(i, p) = c * wip - s * wiq;
          work(i, q) = s * wip + c * wiq;
        }
        for (int i = 0; i < n; ++i) {
          const double wpi = work(p, i), wqi = work(q, i);
          work(p, i) = c * wpi - s * wqi;
          work(q, i) = s * wpi + c * wqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = vecs(i, p), viq = vecs(i, q);
          vecs(i, p) = c * vip - s * viq;
          vecs(i, q) = s * vip + c * viq;
        }
      }
    }
    off = off_diagonal_norm(work);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return work(i, i) < work(j, j); });

  EigenPair out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[k] = work(order[k], order[k]);
    for (int i = 0; i < n; ++i) out.vectors(i, k) = vecs(i, order[k]);
  }
  return out;
}

double min_eigenvalue(const Mat& a) { return sym_eig(a).values.front(); }

}  // namespace spdnet
