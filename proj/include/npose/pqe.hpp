#pragma once

#include <optional>

#include "npose/gnc.hpp"
#include "npose/mat.hpp"
#include "npose/tape.hpp"

namespace npose::pqe {

// C x H x W feature tensor stored channel-major.
struct FeatureMap {
  int C = 0;
  int H = 0;
  int W = 0;
  std::vector<double> v;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w) : C(c), H(h), W(w), v(static_cast<size_t>(c) * h * w, 0.0) {}
  double& at(int c, int h, int w) { return v[(static_cast<size_t>(c) * H + h) * W + w]; }
  double at(int c, int h, int w) const { return v[(static_cast<size_t>(c) * H + h) * W + w]; }

  // (H*W) x C matrix with row index h*W+w, for the shared K/V projections.
  Mat as_hw_by_c() const;
};

struct AttnMask {
  int H = 0;
  int W = 0;
  int center_h = 0;
  int center_w = 0;
  int radius = 0;
  std::vector<uint8_t> v;  // 0/1, row-major

  bool at(int h, int w) const { return v[static_cast<size_t>(h) * W + w] != 0; }
  int count() const;
  // 1 x (H*W) additive penalty row: 0 inside, -1e4 outside.
  Mat penalty_row() const;
  Mat mask_row() const;  // 1 x (H*W) of 0/1
};

struct PqeParams {
  Mat W_Q;  // D x C_q
  Mat W_K;  // C x C_q
  Mat W_V;  // C x C_q
  Mat W_O;  // C_q x F
  Mat b_O;  // 1 x F
  Mat tau;  // 1 x 1, stored unconstrained; effective temperature max(tau, 1e-6)
};

enum class FrameRole { kPast2, kPast1, kCurrent };

inline constexpr double kMaskPenalty = 1e4;
inline constexpr double kTempFloor = 1e-6;
inline constexpr int kPastLocalRadius = 3;
inline constexpr int kPastGlobalRadius = 6;
inline constexpr double kRadiusMin = 3.0;
inline constexpr double kRadiusMax = 15.0;

// r = ceil(clamp(speed, 3, 15)); local window side 2r+1, global side +4.
int motion_radius(double speed);

struct MaskPair {
  AttnMask local;
  AttnMask global;
};

// Past frames use fixed radii 3 (local) and 6 (global); the current frame
// uses the motion radius and +2 per side for the global window. Centers are
// rounded to the nearest cell and windows clipped to the grid.
MaskPair build_masks(FrameRole role, double center_x, double center_y, double speed, int H, int W);

// Tape-based joint-conditioned attention for one (frame, joint):
//   logits = <q W_Q, K> / max(tau, 1e-6) - 1e4 (1 - M) [+ heatmap prior]
//   z = (softmax(logits) V) W_O + b_O
// K and V are precomputed per frame via project_kv.
struct FrameKv {
  ad::Tape::Var K;  // (H*W) x C_q
  ad::Tape::Var V;  // (H*W) x C_q
};

struct PqeVars {
  ad::Tape::Var W_Q, W_K, W_V, W_O, b_O, tau;
};

FrameKv project_kv(ad::Tape& tape, const FeatureMap& feat, const PqeVars& pv);

struct AttentionOut {
  ad::Tape::Var z;       // 1 x F
  ad::Tape::Var weights; // 1 x (H*W)
};

AttentionOut pose_query_attention(ad::Tape& tape, ad::Tape::Var q_row, const FrameKv& kv,
                                  const gnc::Heatmap* hm_prior, const AttnMask& mask,
                                  const PqeVars& pv);

// Convenience single-call evaluation outside a training tape.
struct AttentionEval {
  Mat z;
  Mat weights;
};
AttentionEval pose_query_attention(const Mat& q_row, const FeatureMap& feat,
                                   const gnc::Heatmap* hm_prior, const AttnMask& mask,
                                   const PqeParams& params);

}  // namespace npose::pqe
