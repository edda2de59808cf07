#include "npose/gnc.hpp"

#include <cmath>
#include <stdexcept>

namespace npose::gnc {

ArgmaxCell argmax_cell(const Heatmap& hm) {
  if (hm.v.empty()) throw std::invalid_argument("argmax_cell: empty heatmap");
  ArgmaxCell best{0, 0, hm.v[0]};
  for (int h = 0; h < hm.H; ++h)
    for (int w = 0; w < hm.W; ++w)
      if (hm.at(h, w) > best.value) best = {h, w, hm.at(h, w)};
  return best;
}

Node encode_node(const Heatmap& hm, int vis_flag) {
  if (vis_flag != 0 && vis_flag != 1) throw std::invalid_argument("encode_node: vis_flag must be 0 or 1");
  const ArgmaxCell c = argmax_cell(hm);
  return Node{static_cast<double>(c.w) / hm.W, static_cast<double>(c.h) / hm.H,
              static_cast<double>(vis_flag)};
}

Heatmap decode_heatmap(const Node& n, const GncConfig& cfg) {
  Heatmap hm(cfg.H, cfg.W);
  if (n.vis == 0.0) return hm;
  const double cx = n.x_norm * cfg.W;
  const double cy = n.y_norm * cfg.H;
  const double denom = 2.0 * cfg.sigma * cfg.sigma + cfg.epsilon;
  for (int h = 0; h < cfg.H; ++h) {
    const double dy = h - cy;
    for (int w = 0; w < cfg.W; ++w) {
      const double dx = w - cx;
      hm.at(h, w) = n.vis * std::exp(-(dx * dx + dy * dy) / denom);
    }
  }
  return hm;
}

Node snap_to_grid(const Node& n, const GncConfig& cfg) {
  auto snap = [](double norm, int extent) {
    // Nearest cell with ties toward the lower index, matching the row-major
    // first-occurrence argmax of the rendered map.
    int cell = static_cast<int>(std::ceil(norm * extent - 0.5));
    cell = std::min(std::max(cell, 0), extent - 1);
    return static_cast<double>(cell) / extent;
  };
  return Node{snap(n.x_norm, cfg.W), snap(n.y_norm, cfg.H), n.vis};
}

}  // namespace npose::gnc
