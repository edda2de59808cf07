#pragma once

#include <functional>
#include <vector>

#include "npose/mat.hpp"

namespace npose::ad {

// Reverse-mode tape over dense Mat values. Nodes are created in topological
// order; backward() walks them in reverse. One tape per forward pass.
//
// Softmax ops skip cells whose exp() underflows to exactly +0.0; skipping
// +0.0 addends leaves every sum bitwise identical to the dense reduction.
class Tape {
 public:
  using Var = int;

  Var leaf(const Mat& value);

  const Mat& val(Var v) const { return nodes_[v].val; }
  const Mat& grad(Var v) const { return nodes_[v].grad; }

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);           // elementwise
  Var div(Var a, Var b);           // elementwise
  Var scale(Var a, double s);
  Var matmul(Var a, Var b);        // A * B
  Var matmul_nt(Var a, Var b);     // A * B^T
  Var add_rowvec(Var x, Var b);    // broadcast 1xC over rows
  Var mul_colvec(Var x, Var c);    // broadcast Rx1 over columns

  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var clamp_min(Var a, double m);
  Var div_by_scalar(Var x, Var s);  // s is 1x1

  // Row softmax of (x + bias); bias is a constant (mask penalties, priors).
  Var softmax_rows_bias(Var x, Mat bias);
  Var softmax_rows(Var x);
  // Softmax per row restricted to mask==1 cells; other cells are exactly 0.
  Var masked_softmax_rows(Var x, Mat mask01);

  Var concat_cols(Var a, Var b);
  Var slice_cols(Var x, int c0, int c1);  // [c0, c1)
  Var slice_rows(Var x, int r0, int r1);  // [r0, r1)
  Var vstack(const std::vector<Var>& rows);
  Var mean_rows(Var x);  // 1xC
  Var sum_all(Var x);    // 1x1
  Var outer_sum(Var u, Var v);  // u Rx1, v Sx1 -> Y_ij = u_i + v_j

  Var layernorm_rows(Var x, Var gamma, Var beta, double eps);

  // Mean over rows of summed Huber penalties of (pred - target) entries.
  Var huber_mean(Var pred, Mat target, double delta);
  // Mean binary cross entropy with probability clamp [eps, 1-eps].
  Var bce_mean(Var prob, Mat target, double eps);

  void backward(Var root);  // root must be 1x1

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var push(Mat val, std::function<void(Tape&)> back);
  Mat& grad_mut(Var v) { return nodes_[v].grad; }

  std::vector<Node> nodes_;
};

// Scalar helpers shared with non-tape code paths.
double huber(double r, double delta);
double huber_grad(double r, double delta);
double bce_clamped(double p, double y, double eps);
double stable_sigmoid(double x);
double stable_softplus(double x);

}  // namespace npose::ad
