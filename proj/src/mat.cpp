#include "spdnet/mat.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace spdnet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Mat::Mat(int rows, int cols) : rows_(rows), cols_(cols), d_(std::size_t(rows) * cols, 0.0) {
  require(rows >= 0 && cols >= 0, "Mat: negative dimension");
}

Mat::Mat(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), d_(std::size_t(rows) * cols, fill) {
  require(rows >= 0 && cols >= 0, "Mat: negative dimension");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = int(rows.size());
  cols_ = rows_ > 0 ? int(rows.begin()->size()) : 0;
  d_.reserve(std::size_t(rows_) * cols_);
  for (const auto& r : rows) {
    require(int(r.size()) == cols_, "Mat: ragged initializer");
    d_.insert(d_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string shape_string(const Mat& a) {
  std::ostringstream os;
  os << a.rows() << "x" << a.cols();
  return os.str();
}

Mat add(const Mat& a, const Mat& b) {
  require(a.same_shape(b), "add: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  Mat out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Mat sub(const Mat& a, const Mat& b) {
  require(a.same_shape(b), "sub: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  Mat out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Mat scale(const Mat& a, double c) {
  Mat out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) out[i] = c * a[i];
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols() == b.rows(),
          "matmul: shape mismatch " + shape_string(a) + " * " + shape_string(b));
  Mat out(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* orow = out.data() + std::size_t(i) * m;
    const double* arow = a.data() + std::size_t(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data() + std::size_t(p) * m;
      for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
  require(a.same_shape(b),
          "hadamard: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  Mat out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Mat symmetrize(const Mat& a) {
  require(a.rows() == a.cols(), "symmetrize: not square " + shape_string(a));
  Mat out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(r, c) = 0.5 * (a(r, c) + a(c, r));
  return out;
}

Mat bilinear_project(const Mat& w, const Mat& x) {
  return matmul(matmul(transpose(w), x), w);
}

Mat conv2d_valid(const Mat& x, const Mat& w) {
  require(w.rows() == w.cols(), "conv2d_valid: kernel not square " + shape_string(w));
  require(x.rows() == x.cols(), "conv2d_valid: input not square " + shape_string(x));
  const int d = x.rows(), k = w.rows();
  require(d >= k, "conv2d_valid: kernel " + shape_string(w) + " larger than input " +
                      shape_string(x));
  const int n = d - k + 1;
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) acc += w(p, q) * x(i + p, j + q);
      out(i, j) = acc;
    }
  return out;
}

double trace(const Mat& a) {
  double t = 0.0;
  const int n = std::min(a.rows(), a.cols());
  for (int i = 0; i < n; ++i) t += a(i, i);
  return t;
}

double entry_sum(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += a[i];
  return s;
}

double fro_norm(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

double max_abs_entry(const Mat& a) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

double max_entry(const Mat& a) {
  require(a.size() > 0, "max_entry: empty matrix");
  double m = a[0];
  for (int i = 1; i < a.size(); ++i) m = std::max(m, a[i]);
  return m;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  require(a.same_shape(b),
          "max_abs_diff: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::pair<int, int> argmax_entry(const Mat& a) {
  require(a.size() > 0, "argmax_entry: empty matrix");
  int best = 0;
  for (int i = 1; i < a.size(); ++i)
    if (a[i] > a[best]) best = i;
  return {best / a.cols(), best % a.cols()};
}

std::pair<int, int> argmax_abs_entry(const Mat& a) {
  require(a.size() > 0, "argmax_abs_entry: empty matrix");
  int best = 0;
  for (int i = 1; i < a.size(); ++i)
    if (std::fabs(a[i]) > std::fabs(a[best])) best = i;
  return {best / a.cols(), best % a.cols()};
}

bool all_finite(const Mat& a) {
  for (int i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i])) return false;
  return true;
}

bool is_symmetric(const Mat& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = max_abs_entry(a);
  double worst = 0.0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = r + 1; c < a.cols(); ++c)
      worst = std::max(worst, std::fabs(a(r, c) - a(c, r)));
  return worst <= rel_tol * std::max(scale, 1e-300);
}

}  // namespace spdnet
