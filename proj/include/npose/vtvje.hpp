#pragma once

#include "npose/gnc.hpp"
#include "npose/mat.hpp"
#include "npose/tape.hpp"

namespace npose::vtvje {

// 4-vector [x_norm, y_norm, v_peak, v_vis] for one joint in one frame.
struct JointDescriptor {
  double x_norm = 0.0;
  double y_norm = 0.0;
  double v_peak = 0.0;
  double v_vis = 0.0;

  Mat as_row() const { return Mat(1, 4, {x_norm, y_norm, v_peak, v_vis}); }
};

// Sub-pixel peak in heatmap pixel coordinates.
struct SubPixelPeak {
  double x = 0.0;  // column axis
  double y = 0.0;  // row axis
  double peak_value = 0.0;
  bool refined = false;
};

struct JointVelocity {
  double dx = 0.0;
  double dy = 0.0;
  double speed = 0.0;
};

// Two-layer MLP 4 -> D -> D (ReLU hidden), one instance per frame role.
struct EmbedderParams {
  Mat W1;  // 4 x D
  Mat b1;  // 1 x D
  Mat W2;  // D x D
  Mat b2;  // 1 x D
};

inline constexpr double kPeakVisThreshold = 0.35;

// Quadratic refinement of the argmax cell on its 3x3 neighborhood.
// Border peaks, singular Hessians and non-finite solves fall back to the
// integer peak with refined=false; offsets are clamped to one cell per axis.
SubPixelPeak taylor_refine(const gnc::Heatmap& hm, int peak_h, int peak_w);
SubPixelPeak taylor_refine(const gnc::Heatmap& hm);

JointDescriptor build_past_descriptor(const gnc::Heatmap& hm, double thresh = kPeakVisThreshold);

struct Extrapolation {
  JointDescriptor descriptor;
  JointVelocity velocity;
  double center_x = 0.0;  // clamped into [0, W-1]
  double center_y = 0.0;  // clamped into [0, H-1]
  double raw_x = 0.0;     // before clamping
  double raw_y = 0.0;
};

// Linear constant-velocity extrapolation from the two past sub-pixel peaks.
// The descriptor reuses the previous frame's peak score and visibility.
Extrapolation extrapolate_current(const SubPixelPeak& p_prev2, const SubPixelPeak& p_prev1,
                                  const JointDescriptor& d_prev1, int H, int W);

// Tape-based embedding: q = W2 * relu(W1 * d + b1) + b2.
ad::Tape::Var embed_descriptor(ad::Tape& tape, ad::Tape::Var desc_row, ad::Tape::Var W1,
                               ad::Tape::Var b1, ad::Tape::Var W2, ad::Tape::Var b2);

// Convenience evaluation outside any training tape.
Mat embed_descriptor(const JointDescriptor& d, const EmbedderParams& p);

}  // namespace npose::vtvje
