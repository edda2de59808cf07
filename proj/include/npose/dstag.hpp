#pragma once

#include <array>
#include <utility>
#include <vector>

#include "npose/mat.hpp"
#include "npose/tape.hpp"

namespace npose::dstag {

inline constexpr double kLeakySlope = 0.2;
inline constexpr int kNumFrames = 3;

struct SkeletonGraph {
  int J = 0;
  std::vector<std::pair<int, int>> edges;
  Mat A1;  // 1-hop adjacency, symmetric with unit diagonal
  Mat A2;  // 2-hop reachability (including self)
};

// A1 = symmetrized edges + self loops; A2 = boolean(A1^2 > 0).
SkeletonGraph build_adjacency(const std::vector<std::pair<int, int>>& edges, int J);

// 15-joint tree: 0 head, 1 neck, 2/3 l/r shoulder, 4/5 l/r elbow,
// 6/7 l/r wrist, 8/9 l/r hip, 10/11 l/r knee, 12/13 l/r ankle, 14 pelvis.
SkeletonGraph canonical_skeleton();
const std::vector<std::pair<int, int>>& canonical_edges();

// Single-head GAT layer parameters (leaky-ReLU scoring, neighbor softmax).
struct GatParams {
  Mat W;  // F_in x F_out
  Mat a;  // 1 x 2*F_out, split into source/destination halves
};

// Past encoder: one self-attention block plus feed-forward, width F_t.
struct EncoderParams {
  Mat Wq, Wk, Wv, Wo;      // F_t x F_t
  Mat Wf1, Wf2;            // F_t x F_t
  Mat bf1, bf2;            // 1 x F_t
};

// Fusion: concat -> 2-layer MLP -> residual from f_curr.
struct FuseParams {
  Mat W1;  // 2*F_t x F_t
  Mat b1;  // 1 x F_t
  Mat W2;  // F_t x F_t
  Mat b2;  // 1 x F_t
};

struct CrossParams {
  Mat Wq, Wk, Wv;  // F_t x F_t
};

struct BranchParams {
  GatParams tgat;
  EncoderParams enc;
  FuseParams fuse;
  GatParams sgat;
};

struct DstagParams {
  BranchParams local;
  BranchParams global;
  CrossParams cross_lg;  // local queries attend over global keys/values
  CrossParams cross_gl;
};

// ---- tape-level building blocks ----

struct GatVars {
  ad::Tape::Var W, a;
};
struct EncoderVars {
  ad::Tape::Var Wq, Wk, Wv, Wo, Wf1, Wf2, bf1, bf2;
};
struct FuseVars {
  ad::Tape::Var W1, b1, W2, b2;
};
struct CrossVars {
  ad::Tape::Var Wq, Wk, Wv;
};

// One GAT layer over the rows of H restricted to adj's nonzeros.
ad::Tape::Var gat_layer(ad::Tape& tape, ad::Tape::Var H, const Mat& adj, const GatVars& gv,
                        double slope = kLeakySlope);

// Per-joint GAT on the directed chain (t-2)->(t-1)->t with self loops.
// Z and the result hold one J x F matrix per frame.
std::array<ad::Tape::Var, kNumFrames> temporal_gat(ad::Tape& tape,
                                                   const std::array<ad::Tape::Var, kNumFrames>& Z,
                                                   const GatVars& gv);

// Past-only memory: encode the two past steps per joint, mean over steps,
// then fuse with f_curr through the MLP with a residual connection.
ad::Tape::Var past_memory_fuse(ad::Tape& tape, const std::array<ad::Tape::Var, kNumFrames>& feat_temp,
                               const EncoderVars& ev, const FuseVars& fv);

// Encoder summary alone (exposed for causality tests).
ad::Tape::Var past_memory_summary(ad::Tape& tape, ad::Tape::Var past0, ad::Tape::Var past1,
                                  const EncoderVars& ev);

// Bi-directional cross-branch attention; both directions read the
// pre-update inputs.
std::pair<ad::Tape::Var, ad::Tape::Var> cross_branch_attention(ad::Tape& tape, ad::Tape::Var z_local,
                                                               ad::Tape::Var z_global,
                                                               const CrossVars& lg,
                                                               const CrossVars& gl);

// ---- plain-Mat convenience wrappers (tests, small tools) ----

Mat gat_layer(const Mat& H, const Mat& adj, const GatParams& p, double slope = kLeakySlope);
std::array<Mat, kNumFrames> temporal_gat(const std::array<Mat, kNumFrames>& Z, const GatParams& p);
Mat past_memory_fuse(const std::array<Mat, kNumFrames>& feat_temp, const EncoderParams& ep,
                     const FuseParams& fp);
Mat past_memory_summary(const Mat& past0, const Mat& past1, const EncoderParams& ep);
std::pair<Mat, Mat> cross_branch_attention(const Mat& z_local, const Mat& z_global,
                                           const CrossParams& lg, const CrossParams& gl);

}  // namespace npose::dstag
