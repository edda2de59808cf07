#include "npose/pqe.hpp"

#include <cmath>
#include <stdexcept>

namespace npose::pqe {

Mat FeatureMap::as_hw_by_c() const {
  Mat m(H * W, C);
  for (int c = 0; c < C; ++c)
    for (int h = 0; h < H; ++h)
      for (int w = 0; w < W; ++w) m(h * W + w, c) = at(c, h, w);
  return m;
}

int AttnMask::count() const {
  int n = 0;
  for (uint8_t b : v) n += b;
  return n;
}

Mat AttnMask::penalty_row() const {
  Mat m(1, H * W);
  for (size_t i = 0; i < v.size(); ++i) m.a[i] = v[i] ? 0.0 : -kMaskPenalty;
  return m;
}

Mat AttnMask::mask_row() const {
  Mat m(1, H * W);
  for (size_t i = 0; i < v.size(); ++i) m.a[i] = v[i] ? 1.0 : 0.0;
  return m;
}

int motion_radius(double speed) {
  if (speed < 0.0) throw std::invalid_argument("motion_radius: negative speed");
  return static_cast<int>(std::ceil(std::min(std::max(speed, kRadiusMin), kRadiusMax)));
}

static AttnMask square_mask(int H, int W, int ch, int cw, int radius) {
  AttnMask m;
  m.H = H;
  m.W = W;
  m.center_h = ch;
  m.center_w = cw;
  m.radius = radius;
  m.v.assign(static_cast<size_t>(H) * W, 0);
  const int h0 = std::max(0, ch - radius), h1 = std::min(H - 1, ch + radius);
  const int w0 = std::max(0, cw - radius), w1 = std::min(W - 1, cw + radius);
  for (int h = h0; h <= h1; ++h)
    for (int w = w0; w <= w1; ++w) m.v[static_cast<size_t>(h) * W + w] = 1;
  return m;
}

MaskPair build_masks(FrameRole role, double center_x, double center_y, double speed, int H,
                     int W) {
  if (center_x < 0.0 || center_x > W - 1 || center_y < 0.0 || center_y > H - 1)
    throw std::invalid_argument("build_masks: center outside grid");
  // Nearest cell, ties toward the lower index (matches the codec snap).
  const int cw = std::min(std::max(static_cast<int>(std::ceil(center_x - 0.5)), 0), W - 1);
  const int ch = std::min(std::max(static_cast<int>(std::ceil(center_y - 0.5)), 0), H - 1);
  int r_local = 0, r_global = 0;
  if (role == FrameRole::kCurrent) {
    r_local = motion_radius(speed);
    r_global = r_local + 2;  // side length +4
  } else {
    r_local = kPastLocalRadius;
    r_global = kPastGlobalRadius;
  }
  return MaskPair{square_mask(H, W, ch, cw, r_local), square_mask(H, W, ch, cw, r_global)};
}

FrameKv project_kv(ad::Tape& tape, const FeatureMap& feat, const PqeVars& pv) {
  const auto fmat = tape.leaf(feat.as_hw_by_c());
  return FrameKv{tape.matmul(fmat, pv.W_K), tape.matmul(fmat, pv.W_V)};
}

AttentionOut pose_query_attention(ad::Tape& tape, ad::Tape::Var q_row, const FrameKv& kv,
                                  const gnc::Heatmap* hm_prior, const AttnMask& mask,
                                  const PqeVars& pv) {
  const Mat& K = tape.val(kv.K);
  const int hw = K.rows;
  if (mask.H * mask.W != hw) throw std::invalid_argument("pose_query_attention: mask shape mismatch");
  if (tape.val(q_row).cols != tape.val(pv.W_Q).rows)
    throw std::invalid_argument("pose_query_attention: query dim mismatch");
  if (mask.count() == 0) throw std::invalid_argument("pose_query_attention: empty mask");

  const auto Q = tape.matmul(q_row, pv.W_Q);            // 1 x C_q
  const auto raw = tape.matmul_nt(Q, kv.K);             // 1 x HW
  const auto tau_eff = tape.clamp_min(pv.tau, kTempFloor);
  const auto logits = tape.div_by_scalar(raw, tau_eff);

  Mat bias = mask.penalty_row();
  if (hm_prior != nullptr) {
    if (hm_prior->H != mask.H || hm_prior->W != mask.W)
      throw std::invalid_argument("pose_query_attention: prior shape mismatch");
    for (int i = 0; i < hw; ++i) bias.a[i] += hm_prior->v[i];
  }
  const auto weights = tape.softmax_rows_bias(logits, std::move(bias));
  const auto ctx = tape.matmul(weights, kv.V);          // 1 x C_q
  const auto z = tape.add_rowvec(tape.matmul(ctx, pv.W_O), pv.b_O);
  return AttentionOut{z, weights};
}

AttentionEval pose_query_attention(const Mat& q_row, const FeatureMap& feat,
                                   const gnc::Heatmap* hm_prior, const AttnMask& mask,
                                   const PqeParams& params) {
  ad::Tape tape;
  PqeVars pv{tape.leaf(params.W_Q), tape.leaf(params.W_K), tape.leaf(params.W_V),
             tape.leaf(params.W_O), tape.leaf(params.b_O), tape.leaf(params.tau)};
  const FrameKv kv = project_kv(tape, feat, pv);
  const AttentionOut out = pose_query_attention(tape, tape.leaf(q_row), kv, hm_prior, mask, pv);
  return AttentionEval{tape.val(out.z), tape.val(out.weights)};
}

}  // namespace npose::pqe
