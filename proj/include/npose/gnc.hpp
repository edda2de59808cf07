#pragma once

#include <vector>

#include "npose/mat.hpp"

namespace npose::gnc {

// Normalized joint record: the prediction target.
struct Node {
  double x_norm = 0.0;  // in [0,1]
  double y_norm = 0.0;  // in [0,1]
  double vis = 0.0;     // in [0,1]; ground truth is binary
};

// Per-joint confidence grid, H rows by W cols, row-major.
struct Heatmap {
  int H = 0;
  int W = 0;
  std::vector<double> v;

  Heatmap() = default;
  Heatmap(int h, int w) : H(h), W(w), v(static_cast<size_t>(h) * w, 0.0) {}
  double& at(int h, int w) { return v[static_cast<size_t>(h) * W + w]; }
  double at(int h, int w) const { return v[static_cast<size_t>(h) * W + w]; }
};

struct GncConfig {
  double sigma = 3.0;
  double epsilon = 1e-6;
  int H = 64;
  int W = 48;
};

// Row-major first-occurrence argmax cell.
struct ArgmaxCell {
  int h = 0;
  int w = 0;
  double value = 0.0;
};
ArgmaxCell argmax_cell(const Heatmap& hm);

// Peak cell -> normalized coordinates (w/W, h/H); vis comes from the
// annotation, not from the map.
Node encode_node(const Heatmap& hm, int vis_flag);

// Deterministic Gaussian rendering of a node; all-zero when vis = 0.
Heatmap decode_heatmap(const Node& n, const GncConfig& cfg);

// Snap a node onto the codec lattice (the cell encode would return for its
// rendered map). Rendering a snapped node peaks at exactly vis.
Node snap_to_grid(const Node& n, const GncConfig& cfg);

}  // namespace npose::gnc
