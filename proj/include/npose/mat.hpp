#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace npose {

// Dense row-major matrix of doubles. Row vectors are 1xN, column vectors Nx1.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
    if (a.size() != static_cast<size_t>(r) * c) throw std::invalid_argument("Mat: data size mismatch");
  }

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v) { std::fill(a.begin(), a.end(), v); }

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat full(int r, int c, double v) {
    Mat m(r, c);
    m.fill(v);
    return m;
  }
  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat row_vec(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Mat(1, n, std::move(v));
  }
};

// C = A * B
Mat matmul(const Mat& A, const Mat& B);
// C = A * B^T
Mat matmul_nt(const Mat& A, const Mat& B);
// C = A^T * B
Mat matmul_tn(const Mat& A, const Mat& B);

Mat operator+(const Mat& A, const Mat& B);
Mat operator-(const Mat& A, const Mat& B);
Mat hadamard(const Mat& A, const Mat& B);
Mat scaled(const Mat& A, double s);

// Y += s * X
void axpy(Mat& Y, double s, const Mat& X);

double max_abs(const Mat& A);
double max_abs_diff(const Mat& A, const Mat& B);
bool all_finite(const Mat& A);

}  // namespace npose
