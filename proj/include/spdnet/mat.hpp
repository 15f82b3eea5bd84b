#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace spdnet {

// Dense row-major matrix of doubles. Shapes travel with the value; every
// operation validates dimensions and throws std::invalid_argument with a
// shape report on mismatch.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols);
  Mat(int rows, int cols, double fill);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(int r, int c) { return d_[std::size_t(r) * cols_ + c]; }
  double operator()(int r, int c) const { return d_[std::size_t(r) * cols_ + c]; }
  double& operator[](int i) { return d_[i]; }
  double operator[](int i) const { return d_[i]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool operator==(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && d_ == o.d_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

std::string shape_string(const Mat& a);

Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double c);
Mat matmul(const Mat& a, const Mat& b);
Mat hadamard(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat symmetrize(const Mat& a);

// W^T X W, the congruence used by the recursive layer to resize features.
Mat bilinear_project(const Mat& w, const Mat& x);

// Valid cross-correlation, stride 1: out(i,j) = sum_{p,q} w(p,q) x(i+p,j+q).
Mat conv2d_valid(const Mat& x, const Mat& w);

double trace(const Mat& a);
double entry_sum(const Mat& a);
double fro_norm(const Mat& a);
double max_abs_entry(const Mat& a);
double max_entry(const Mat& a);
double max_abs_diff(const Mat& a, const Mat& b);
std::pair<int, int> argmax_entry(const Mat& a);
std::pair<int, int> argmax_abs_entry(const Mat& a);

bool all_finite(const Mat& a);
bool is_symmetric(const Mat& a, double rel_tol = 1e-12);

template <typename F>
Mat ew_map(const Mat& a, F f) {
  Mat out(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

inline Mat operator+(const Mat& a, const Mat& b) { return add(a, b); }
inline Mat operator-(const Mat& a, const Mat& b) { return sub(a, b); }
inline Mat operator*(const Mat& a, const Mat& b) { return matmul(a, b); }
inline Mat operator*(double c, const Mat& a) { return scale(a, c); }

}  // namespace spdnet
