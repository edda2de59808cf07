#include "npose/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace npose::ad {

double huber(double r, double delta) {
  const double ar = std::fabs(r);
  if (ar <= delta) return 0.5 * r * r;
  return delta * (ar - 0.5 * delta);
}

double huber_grad(double r, double delta) {
  if (std::fabs(r) <= delta) return r;
  return r > 0.0 ? delta : -delta;
}

double bce_clamped(double p, double y, double eps) {
  const double pc = std::min(std::max(p, eps), 1.0 - eps);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x >= 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

Tape::Var Tape::push(Mat val, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Mat(val.rows, val.cols);
  n.val = std::move(val);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::leaf(const Mat& value) { return push(value, nullptr); }

Tape::Var Tape::add(Var a, Var b) {
  return push(val(a) + val(b), [a, b, out = size()](Tape& t) {
    axpy(t.grad_mut(a), 1.0, t.grad(out));
    axpy(t.grad_mut(b), 1.0, t.grad(out));
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  return push(val(a) - val(b), [a, b, out = size()](Tape& t) {
    axpy(t.grad_mut(a), 1.0, t.grad(out));
    axpy(t.grad_mut(b), -1.0, t.grad(out));
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  return push(hadamard(val(a), val(b)), [a, b, out = size()](Tape& t) {
    axpy(t.grad_mut(a), 1.0, hadamard(t.grad(out), t.val(b)));
    axpy(t.grad_mut(b), 1.0, hadamard(t.grad(out), t.val(a)));
  });
}

Tape::Var Tape::div(Var a, Var b) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  if (!A.same_shape(B)) throw std::invalid_argument("div: shape mismatch");
  Mat Y = A;
  for (size_t i = 0; i < Y.a.size(); ++i) Y.a[i] /= B.a[i];
  return push(std::move(Y), [a, b, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& Bv = t.val(b);
    const Mat& Yv = t.val(out);
    Mat& ga = t.grad_mut(a);
    Mat& gb = t.grad_mut(b);
    for (size_t i = 0; i < g.a.size(); ++i) {
      ga.a[i] += g.a[i] / Bv.a[i];
      gb.a[i] -= g.a[i] * Yv.a[i] / Bv.a[i];
    }
  });
}

Tape::Var Tape::scale(Var a, double s) {
  return push(scaled(val(a), s), [a, s, out = size()](Tape& t) {
    axpy(t.grad_mut(a), s, t.grad(out));
  });
}

Tape::Var Tape::matmul(Var a, Var b) {
  return push(npose::matmul(val(a), val(b)), [a, b, out = size()](Tape& t) {
    axpy(t.grad_mut(a), 1.0, npose::matmul_nt(t.grad(out), t.val(b)));
    axpy(t.grad_mut(b), 1.0, npose::matmul_tn(t.val(a), t.grad(out)));
  });
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  return push(npose::matmul_nt(val(a), val(b)), [a, b, out = size()](Tape& t) {
    axpy(t.grad_mut(a), 1.0, npose::matmul(t.grad(out), t.val(b)));
    axpy(t.grad_mut(b), 1.0, npose::matmul_tn(t.grad(out), t.val(a)));
  });
}

Tape::Var Tape::add_rowvec(Var x, Var b) {
  const Mat& X = val(x);
  const Mat& B = val(b);
  if (B.rows != 1 || B.cols != X.cols) throw std::invalid_argument("add_rowvec: bad bias shape");
  Mat Y = X;
  for (int r = 0; r < Y.rows; ++r)
    for (int c = 0; c < Y.cols; ++c) Y(r, c) += B(0, c);
  return push(std::move(Y), [x, b, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    axpy(t.grad_mut(x), 1.0, g);
    Mat& gb = t.grad_mut(b);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) gb(0, c) += g(r, c);
  });
}

Tape::Var Tape::mul_colvec(Var x, Var c) {
  const Mat& X = val(x);
  const Mat& C = val(c);
  if (C.cols != 1 || C.rows != X.rows) throw std::invalid_argument("mul_colvec: bad column shape");
  Mat Y = X;
  for (int r = 0; r < Y.rows; ++r)
    for (int j = 0; j < Y.cols; ++j) Y(r, j) *= C(r, 0);
  return push(std::move(Y), [x, c, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& Xv = t.val(x);
    const Mat& Cv = t.val(c);
    Mat& gx = t.grad_mut(x);
    Mat& gc = t.grad_mut(c);
    for (int r = 0; r < g.rows; ++r)
      for (int j = 0; j < g.cols; ++j) {
        gx(r, j) += g(r, j) * Cv(r, 0);
        gc(r, 0) += g(r, j) * Xv(r, j);
      }
  });
}

Tape::Var Tape::relu(Var a) {
  Mat Y = val(a);
  for (double& v : Y.a) v = v > 0.0 ? v : 0.0;
  return push(std::move(Y), [a, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& X = t.val(a);
    Mat& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.a.size(); ++i)
      if (X.a[i] > 0.0) ga.a[i] += g.a[i];
  });
}

Tape::Var Tape::leaky_relu(Var a, double slope) {
  Mat Y = val(a);
  for (double& v : Y.a) v = v > 0.0 ? v : slope * v;
  return push(std::move(Y), [a, slope, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& X = t.val(a);
    Mat& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.a.size(); ++i) ga.a[i] += g.a[i] * (X.a[i] > 0.0 ? 1.0 : slope);
  });
}

Tape::Var Tape::sigmoid(Var a) {
  Mat Y = val(a);
  for (double& v : Y.a) v = stable_sigmoid(v);
  return push(std::move(Y), [a, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& Y2 = t.val(out);
    Mat& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.a.size(); ++i) ga.a[i] += g.a[i] * Y2.a[i] * (1.0 - Y2.a[i]);
  });
}

Tape::Var Tape::softplus(Var a) {
  Mat Y = val(a);
  for (double& v : Y.a) v = stable_softplus(v);
  return push(std::move(Y), [a, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& X = t.val(a);
    Mat& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.a.size(); ++i) ga.a[i] += g.a[i] * stable_sigmoid(X.a[i]);
  });
}

Tape::Var Tape::clamp_min(Var a, double m) {
  Mat Y = val(a);
  for (double& v : Y.a) v = std::max(v, m);
  return push(std::move(Y), [a, m, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& X = t.val(a);
    Mat& ga = t.grad_mut(a);
    for (size_t i = 0; i < g.a.size(); ++i)
      if (X.a[i] > m) ga.a[i] += g.a[i];
  });
}

Tape::Var Tape::div_by_scalar(Var x, Var s) {
  const Mat& S = val(s);
  if (S.rows != 1 || S.cols != 1) throw std::invalid_argument("div_by_scalar: s must be 1x1");
  Mat Y = scaled(val(x), 1.0 / S(0, 0));
  return push(std::move(Y), [x, s, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const double sv = t.val(s)(0, 0);
    axpy(t.grad_mut(x), 1.0 / sv, g);
    const Mat& Yv = t.val(out);
    double acc = 0.0;
    for (size_t i = 0; i < g.a.size(); ++i) acc += g.a[i] * Yv.a[i];
    t.grad_mut(s)(0, 0) -= acc / sv;
  });
}

Tape::Var Tape::softmax_rows_bias(Var x, Mat bias) {
  const Mat& X = val(x);
  if (!X.same_shape(bias)) throw std::invalid_argument("softmax_rows_bias: bias shape mismatch");
  Mat Y(X.rows, X.cols);
  for (int r = 0; r < X.rows; ++r) {
    double m = -INFINITY;
    for (int c = 0; c < X.cols; ++c) m = std::max(m, X(r, c) + bias(r, c));
    double z = 0.0;
    for (int c = 0; c < X.cols; ++c) {
      const double e = std::exp(X(r, c) + bias(r, c) - m);
      Y(r, c) = e;
      if (e != 0.0) z += e;
    }
    for (int c = 0; c < X.cols; ++c) Y(r, c) /= z;
  }
  return push(std::move(Y), [x, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& Yv = t.val(out);
    Mat& gx = t.grad_mut(x);
    for (int r = 0; r < g.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < g.cols; ++c)
        if (Yv(r, c) != 0.0) dot += g(r, c) * Yv(r, c);
      for (int c = 0; c < g.cols; ++c)
        if (Yv(r, c) != 0.0) gx(r, c) += Yv(r, c) * (g(r, c) - dot);
    }
  });
}

Tape::Var Tape::softmax_rows(Var x) {
  return softmax_rows_bias(x, Mat(val(x).rows, val(x).cols));
}

Tape::Var Tape::masked_softmax_rows(Var x, Mat mask01) {
  const Mat& X = val(x);
  if (!X.same_shape(mask01)) throw std::invalid_argument("masked_softmax_rows: mask shape mismatch");
  Mat Y(X.rows, X.cols);
  for (int r = 0; r < X.rows; ++r) {
    double m = -INFINITY;
    bool any = false;
    for (int c = 0; c < X.cols; ++c)
      if (mask01(r, c) != 0.0) {
        m = std::max(m, X(r, c));
        any = true;
      }
    if (!any) throw std::invalid_argument("masked_softmax_rows: empty row mask");
    double z = 0.0;
    for (int c = 0; c < X.cols; ++c) {
      if (mask01(r, c) != 0.0) {
        const double e = std::exp(X(r, c) - m);
        Y(r, c) = e;
        z += e;
      }
    }
    for (int c = 0; c < X.cols; ++c)
      if (mask01(r, c) != 0.0) Y(r, c) /= z;
  }
  return push(std::move(Y), [x, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    const Mat& Yv = t.val(out);
    Mat& gx = t.grad_mut(x);
    for (int r = 0; r < g.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < g.cols; ++c)
        if (Yv(r, c) != 0.0) dot += g(r, c) * Yv(r, c);
      for (int c = 0; c < g.cols; ++c)
        if (Yv(r, c) != 0.0) gx(r, c) += Yv(r, c) * (g(r, c) - dot);
    }
  });
}

Tape::Var Tape::concat_cols(Var a, Var b) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  if (A.rows != B.rows) throw std::invalid_argument("concat_cols: row mismatch");
  Mat Y(A.rows, A.cols + B.cols);
  for (int r = 0; r < A.rows; ++r) {
    for (int c = 0; c < A.cols; ++c) Y(r, c) = A(r, c);
    for (int c = 0; c < B.cols; ++c) Y(r, A.cols + c) = B(r, c);
  }
  return push(std::move(Y), [a, b, ac = A.cols, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& ga = t.grad_mut(a);
    Mat& gb = t.grad_mut(b);
    for (int r = 0; r < g.rows; ++r) {
      for (int c = 0; c < ga.cols; ++c) ga(r, c) += g(r, c);
      for (int c = 0; c < gb.cols; ++c) gb(r, c) += g(r, ac + c);
    }
  });
}

Tape::Var Tape::slice_cols(Var x, int c0, int c1) {
  const Mat& X = val(x);
  if (c0 < 0 || c1 > X.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
  Mat Y(X.rows, c1 - c0);
  for (int r = 0; r < X.rows; ++r)
    for (int c = c0; c < c1; ++c) Y(r, c - c0) = X(r, c);
  return push(std::move(Y), [x, c0, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& gx = t.grad_mut(x);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) gx(r, c0 + c) += g(r, c);
  });
}

Tape::Var Tape::slice_rows(Var x, int r0, int r1) {
  const Mat& X = val(x);
  if (r0 < 0 || r1 > X.rows || r0 >= r1) throw std::invalid_argument("slice_rows: bad range");
  Mat Y(r1 - r0, X.cols);
  for (int r = r0; r < r1; ++r)
    for (int c = 0; c < X.cols; ++c) Y(r - r0, c) = X(r, c);
  return push(std::move(Y), [x, r0, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& gx = t.grad_mut(x);
    for (int r = 0; r < g.rows; ++r)
      for (int c = 0; c < g.cols; ++c) gx(r0 + r, c) += g(r, c);
  });
}

Tape::Var Tape::vstack(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("vstack: empty");
  const int cols = val(rows[0]).cols;
  Mat Y(static_cast<int>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    const Mat& R = val(rows[i]);
    if (R.rows != 1 || R.cols != cols) throw std::invalid_argument("vstack: need 1xC rows");
    for (int c = 0; c < cols; ++c) Y(static_cast<int>(i), c) = R(0, c);
  }
  return push(std::move(Y), [rows, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    for (size_t i = 0; i < rows.size(); ++i) {
      Mat& gr = t.grad_mut(rows[i]);
      for (int c = 0; c < g.cols; ++c) gr(0, c) += g(static_cast<int>(i), c);
    }
  });
}

Tape::Var Tape::mean_rows(Var x) {
  const Mat& X = val(x);
  Mat Y(1, X.cols);
  for (int r = 0; r < X.rows; ++r)
    for (int c = 0; c < X.cols; ++c) Y(0, c) += X(r, c);
  for (int c = 0; c < X.cols; ++c) Y(0, c) /= X.rows;
  return push(std::move(Y), [x, n = X.rows, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& gx = t.grad_mut(x);
    for (int r = 0; r < gx.rows; ++r)
      for (int c = 0; c < gx.cols; ++c) gx(r, c) += g(0, c) / n;
  });
}

Tape::Var Tape::sum_all(Var x) {
  const Mat& X = val(x);
  double s = 0.0;
  for (double v : X.a) s += v;
  Mat Y(1, 1);
  Y(0, 0) = s;
  return push(std::move(Y), [x, out = size()](Tape& t) {
    const double g = t.grad(out)(0, 0);
    Mat& gx = t.grad_mut(x);
    for (double& v : gx.a) v += g;
  });
}

Tape::Var Tape::outer_sum(Var u, Var v) {
  const Mat& U = val(u);
  const Mat& V = val(v);
  if (U.cols != 1 || V.cols != 1) throw std::invalid_argument("outer_sum: need column vectors");
  Mat Y(U.rows, V.rows);
  for (int i = 0; i < U.rows; ++i)
    for (int j = 0; j < V.rows; ++j) Y(i, j) = U(i, 0) + V(j, 0);
  return push(std::move(Y), [u, v, out = size()](Tape& t) {
    const Mat& g = t.grad(out);
    Mat& gu = t.grad_mut(u);
    Mat& gv = t.grad_mut(v);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) {
        gu(i, 0) += g(i, j);
        gv(j, 0) += g(i, j);
      }
  });
}

Tape::Var Tape::layernorm_rows(Var x, Var gamma, Var beta, double eps) {
  const Mat& X = val(x);
  const Mat& G = val(gamma);
  const Mat& B = val(beta);
  if (G.rows != 1 || G.cols != X.cols || B.rows != 1 || B.cols != X.cols)
    throw std::invalid_argument("layernorm_rows: bad scale/shift shape");
  Mat Y(X.rows, X.cols);
  Mat xhat(X.rows, X.cols);
  std::vector<double> inv_std(X.rows);
  for (int r = 0; r < X.rows; ++r) {
    double mu = 0.0;
    for (int c = 0; c < X.cols; ++c) mu += X(r, c);
    mu /= X.cols;
    double var = 0.0;
    for (int c = 0; c < X.cols; ++c) {
      const double d = X(r, c) - mu;
      var += d * d;
    }
    var /= X.cols;
    const double s = 1.0 / std::sqrt(var + eps);
    inv_std[r] = s;
    for (int c = 0; c < X.cols; ++c) {
      xhat(r, c) = (X(r, c) - mu) * s;
      Y(r, c) = xhat(r, c) * G(0, c) + B(0, c);
    }
  }
  return push(std::move(Y),
              [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), out = size()](Tape& t) {
                const Mat& g = t.grad(out);
                const Mat& G = t.val(gamma);
                Mat& gx = t.grad_mut(x);
                Mat& gg = t.grad_mut(gamma);
                Mat& gb = t.grad_mut(beta);
                const int n = g.cols;
                for (int r = 0; r < g.rows; ++r) {
                  double mean_gy = 0.0;
                  double mean_gy_xhat = 0.0;
                  for (int c = 0; c < n; ++c) {
                    const double gy = g(r, c) * G(0, c);
                    mean_gy += gy;
                    mean_gy_xhat += gy * xhat(r, c);
                    gg(0, c) += g(r, c) * xhat(r, c);
                    gb(0, c) += g(r, c);
                  }
                  mean_gy /= n;
                  mean_gy_xhat /= n;
                  for (int c = 0; c < n; ++c) {
                    const double gy = g(r, c) * G(0, c);
                    gx(r, c) += inv_std[r] * (gy - mean_gy - xhat(r, c) * mean_gy_xhat);
                  }
                }
              });
}

Tape::Var Tape::huber_mean(Var pred, Mat target, double delta) {
  const Mat& P = val(pred);
  if (!P.same_shape(target)) throw std::invalid_argument("huber_mean: shape mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < P.a.size(); ++i) loss += huber(P.a[i] - target.a[i], delta);
  loss /= P.rows;
  Mat Y(1, 1);
  Y(0, 0) = loss;
  return push(std::move(Y), [pred, target = std::move(target), delta, out = size()](Tape& t) {
    const double g = t.grad(out)(0, 0);
    const Mat& P = t.val(pred);
    Mat& gp = t.grad_mut(pred);
    for (size_t i = 0; i < P.a.size(); ++i)
      gp.a[i] += g * huber_grad(P.a[i] - target.a[i], delta) / P.rows;
  });
}

Tape::Var Tape::bce_mean(Var prob, Mat target, double eps) {
  const Mat& P = val(prob);
  if (!P.same_shape(target)) throw std::invalid_argument("bce_mean: shape mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < P.a.size(); ++i) loss += bce_clamped(P.a[i], target.a[i], eps);
  loss /= P.rows;
  Mat Y(1, 1);
  Y(0, 0) = loss;
  return push(std::move(Y), [prob, target = std::move(target), eps, out = size()](Tape& t) {
    const double g = t.grad(out)(0, 0);
    const Mat& P = t.val(prob);
    Mat& gp = t.grad_mut(prob);
    for (size_t i = 0; i < P.a.size(); ++i) {
      const double p = P.a[i];
      if (p <= eps || p >= 1.0 - eps) continue;  // clamped: flat
      gp.a[i] += g * (p - target.a[i]) / (p * (1.0 - p)) / P.rows;
    }
  });
}

void Tape::backward(Var root) {
  Mat& g = grad_mut(root);
  if (g.rows != 1 || g.cols != 1) throw std::invalid_argument("backward: root must be 1x1");
  g(0, 0) = 1.0;
  for (int i = root; i >= 0; --i) {
    if (nodes_[i].back && max_abs(nodes_[i].grad) != 0.0) nodes_[i].back(*this);
  }
}

}  // namespace npose::ad
