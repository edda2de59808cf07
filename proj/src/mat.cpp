#include "npose/mat.hpp"

#include <cmath>
#include <cstdlib>

namespace npose {

static void check_mul(const Mat& A, const Mat& B, int ak, int bk) {
  (void)A;
  (void)B;
  if (ak != bk) throw std::invalid_argument("matmul: inner dimension mismatch");
}

Mat matmul(const Mat& A, const Mat& B) {
  check_mul(A, B, A.cols, B.rows);
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = &A.a[static_cast<size_t>(i) * A.cols];
    double* crow = &C.a[static_cast<size_t>(i) * C.cols];
    for (int k = 0; k < A.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &B.a[static_cast<size_t>(k) * B.cols];
      for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return C;
}

Mat matmul_nt(const Mat& A, const Mat& B) {
  check_mul(A, B, A.cols, B.cols);
  Mat C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = &A.a[static_cast<size_t>(i) * A.cols];
    for (int j = 0; j < B.rows; ++j) {
      const double* brow = &B.a[static_cast<size_t>(j) * B.cols];
      double s = 0.0;
      for (int k = 0; k < A.cols; ++k) s += arow[k] * brow[k];
      C(i, j) = s;
    }
  }
  return C;
}

Mat matmul_tn(const Mat& A, const Mat& B) {
  check_mul(A, B, A.rows, B.rows);
  Mat C(A.cols, B.cols);
  for (int k = 0; k < A.rows; ++k) {
    const double* arow = &A.a[static_cast<size_t>(k) * A.cols];
    const double* brow = &B.a[static_cast<size_t>(k) * B.cols];
    for (int i = 0; i < A.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &C.a[static_cast<size_t>(i) * C.cols];
      for (int j = 0; j < B.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return C;
}

static void check_same(const Mat& A, const Mat& B) {
  if (!A.same_shape(B)) throw std::invalid_argument("Mat: shape mismatch");
}

Mat operator+(const Mat& A, const Mat& B) {
  check_same(A, B);
  Mat C = A;
  for (size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
  return C;
}

Mat operator-(const Mat& A, const Mat& B) {
  check_same(A, B);
  Mat C = A;
  for (size_t i = 0; i < C.a.size(); ++i) C.a[i] -= B.a[i];
  return C;
}

Mat hadamard(const Mat& A, const Mat& B) {
  check_same(A, B);
  Mat C = A;
  for (size_t i = 0; i < C.a.size(); ++i) C.a[i] *= B.a[i];
  return C;
}

Mat scaled(const Mat& A, double s) {
  Mat C = A;
  for (double& v : C.a) v *= s;
  return C;
}

void axpy(Mat& Y, double s, const Mat& X) {
  check_same(Y, X);
  for (size_t i = 0; i < Y.a.size(); ++i) Y.a[i] += s * X.a[i];
}

double max_abs(const Mat& A) {
  double m = 0.0;
  for (double v : A.a) m = std::max(m, std::fabs(v));
  return m;
}

double max_abs_diff(const Mat& A, const Mat& B) {
  check_same(A, B);
  double m = 0.0;
  for (size_t i = 0; i < A.a.size(); ++i) m = std::max(m, std::fabs(A.a[i] - B.a[i]));
  return m;
}

bool all_finite(const Mat& A) {
  for (double v : A.a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace npose
