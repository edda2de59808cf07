#include "npose/vtvje.hpp"

#include <algorithm>
#include <cmath>

namespace npose::vtvje {

SubPixelPeak taylor_refine(const gnc::Heatmap& hm, int peak_h, int peak_w) {
  SubPixelPeak p;
  p.x = peak_w;
  p.y = peak_h;
  p.peak_value = hm.at(peak_h, peak_w);
  p.refined = false;
  if (peak_h <= 0 || peak_h >= hm.H - 1 || peak_w <= 0 || peak_w >= hm.W - 1) return p;

  auto f = [&](int dh, int dw) { return hm.at(peak_h + dh, peak_w + dw); };
  const double gx = (f(0, 1) - f(0, -1)) / 2.0;
  const double gy = (f(1, 0) - f(-1, 0)) / 2.0;
  const double hxx = f(0, 1) - 2.0 * f(0, 0) + f(0, -1);
  const double hyy = f(1, 0) - 2.0 * f(0, 0) + f(-1, 0);
  const double hxy = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / 4.0;

  const double det = hxx * hyy - hxy * hxy;
  if (std::fabs(det) < 1e-10) return p;

  // offset = -H^{-1} g
  double ox = -(hyy * gx - hxy * gy) / det;
  double oy = -(hxx * gy - hxy * gx) / det;
  if (!std::isfinite(ox) || !std::isfinite(oy)) return p;
  ox = std::clamp(ox, -1.0, 1.0);
  oy = std::clamp(oy, -1.0, 1.0);

  p.x = peak_w + ox;
  p.y = peak_h + oy;
  p.refined = true;
  return p;
}

SubPixelPeak taylor_refine(const gnc::Heatmap& hm) {
  const gnc::ArgmaxCell c = gnc::argmax_cell(hm);
  return taylor_refine(hm, c.h, c.w);
}

JointDescriptor build_past_descriptor(const gnc::Heatmap& hm, double thresh) {
  const SubPixelPeak p = taylor_refine(hm);
  JointDescriptor d;
  d.x_norm = p.x / hm.W;
  d.y_norm = p.y / hm.H;
  d.v_peak = std::clamp(p.peak_value, 0.0, 1.0);
  d.v_vis = d.v_peak >= thresh ? 1.0 : 0.0;
  return d;
}

Extrapolation extrapolate_current(const SubPixelPeak& p_prev2, const SubPixelPeak& p_prev1,
                                  const JointDescriptor& d_prev1, int H, int W) {
  Extrapolation e;
  e.velocity.dx = p_prev1.x - p_prev2.x;
  e.velocity.dy = p_prev1.y - p_prev2.y;
  e.velocity.speed = std::hypot(e.velocity.dx, e.velocity.dy);
  e.raw_x = p_prev1.x + e.velocity.dx;
  e.raw_y = p_prev1.y + e.velocity.dy;
  e.center_x = std::clamp(e.raw_x, 0.0, static_cast<double>(W - 1));
  e.center_y = std::clamp(e.raw_y, 0.0, static_cast<double>(H - 1));
  e.descriptor.x_norm = e.center_x / W;
  e.descriptor.y_norm = e.center_y / H;
  e.descriptor.v_peak = d_prev1.v_peak;
  e.descriptor.v_vis = d_prev1.v_vis;
  return e;
}

ad::Tape::Var embed_descriptor(ad::Tape& tape, ad::Tape::Var desc_row, ad::Tape::Var W1,
                               ad::Tape::Var b1, ad::Tape::Var W2, ad::Tape::Var b2) {
  const auto h = tape.relu(tape.add_rowvec(tape.matmul(desc_row, W1), b1));
  return tape.add_rowvec(tape.matmul(h, W2), b2);
}

Mat embed_descriptor(const JointDescriptor& d, const EmbedderParams& p) {
  ad::Tape tape;
  const auto q = embed_descriptor(tape, tape.leaf(d.as_row()), tape.leaf(p.W1), tape.leaf(p.b1),
                                  tape.leaf(p.W2), tape.leaf(p.b2));
  return tape.val(q);
}

}  // namespace npose::vtvje
