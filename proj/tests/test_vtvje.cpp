#include <cmath>

#include "doctest.h"
#include "npose/rng.hpp"
#include "npose/vtvje.hpp"

using namespace npose::vtvje;
using npose::Mat;
using npose::Rng;
using npose::gnc::Heatmap;

namespace {

Heatmap analytic_gaussian(int H, int W, double cx, double cy, double sigma, double amp = 1.0) {
  Heatmap hm(H, W);
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w) {
      const double d2 = (w - cx) * (w - cx) + (h - cy) * (h - cy);
      hm.at(h, w) = amp * std::exp(-d2 / (2.0 * sigma * sigma));
    }
  return hm;
}

// Exhaustive-search oracle: center on a 1e-3 px grid maximizing normalized
// correlation between the observed 3x3 patch and the analytic Gaussian.
void correlation_search(const Heatmap& hm, int ph, int pw, double sigma, double& best_x,
                        double& best_y) {
  double best = -2.0;
  best_x = pw;
  best_y = ph;
  for (int iy = -700; iy <= 700; ++iy) {
    const double cy = ph + iy * 1e-3;
    for (int ix = -700; ix <= 700; ++ix) {
      const double cx = pw + ix * 1e-3;
      double dot = 0.0, nd = 0.0, nm = 0.0;
      for (int dh = -1; dh <= 1; ++dh)
        for (int dw = -1; dw <= 1; ++dw) {
          const double obs = hm.at(ph + dh, pw + dw);
          const double d2 =
              (pw + dw - cx) * (pw + dw - cx) + (ph + dh - cy) * (ph + dh - cy);
          const double model = std::exp(-d2 / (2.0 * sigma * sigma));
          dot += obs * model;
          nd += obs * obs;
          nm += model * model;
        }
      const double corr = dot / std::sqrt(nd * nm);
      if (corr > best) {
        best = corr;
        best_x = cx;
        best_y = cy;
      }
    }
  }
}

}  // namespace

TEST_CASE("vtvje: symmetric patch refines to zero offset") {
  Heatmap hm = analytic_gaussian(32, 32, 16.0, 16.0, 3.0);
  const SubPixelPeak p = taylor_refine(hm, 16, 16);
  CHECK(p.refined);
  CHECK(p.x == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("vtvje: refined center within 0.05 px of the correlation-search oracle") {
  const double cx = 20.7, cy = 10.3, sigma = 3.0;
  Heatmap hm = analytic_gaussian(48, 64, cx, cy, sigma);
  const auto peak = npose::gnc::argmax_cell(hm);
  CHECK(peak.w == 21);
  CHECK(peak.h == 10);
  const SubPixelPeak p = taylor_refine(hm, peak.h, peak.w);
  CHECK(p.refined);

  double ox = 0.0, oy = 0.0;
  correlation_search(hm, peak.h, peak.w, sigma, ox, oy);
  CHECK(std::fabs(ox - cx) <= 2e-3);  // the oracle itself recovers the truth
  CHECK(std::fabs(oy - cy) <= 2e-3);
  CHECK(std::fabs(p.x - ox) < 0.05);
  CHECK(std::fabs(p.y - oy) < 0.05);
  CHECK(std::fabs(p.x - cx) < 0.05);
  CHECK(std::fabs(p.y - cy) < 0.05);
}

TEST_CASE("vtvje: flat patch falls back to the integer peak") {
  Heatmap hm(16, 16);
  for (double& v : hm.v) v = 0.5;
  const SubPixelPeak p = taylor_refine(hm, 8, 8);
  CHECK_FALSE(p.refined);
  CHECK(p.x == 8.0);
  CHECK(p.y == 8.0);
}

TEST_CASE("vtvje: border peak falls back") {
  Heatmap hm(8, 8);
  hm.at(0, 3) = 1.0;
  const SubPixelPeak p = taylor_refine(hm, 0, 3);
  CHECK_FALSE(p.refined);
  CHECK(p.x == 3.0);
  CHECK(p.y == 0.0);
}

TEST_CASE("vtvje: refinement beats integer argmax on random gaussians") {
  Rng rng(101);
  const int H = 64, W = 48;
  int improved = 0, bounded = 0;
  const int trials = 1000;
  double err_ref = 0.0, err_int = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double sigma = rng.uniform(2.0, 5.0);
    const double cx = rng.uniform(3.0, W - 1 - 3.0);
    const double cy = rng.uniform(3.0, H - 1 - 3.0);
    Heatmap hm = analytic_gaussian(H, W, cx, cy, sigma);
    const auto peak = npose::gnc::argmax_cell(hm);
    const SubPixelPeak p = taylor_refine(hm, peak.h, peak.w);
    const double er = std::hypot(p.x - cx, p.y - cy);
    const double ei = std::hypot(peak.w - cx, peak.h - cy);
    err_ref += er;
    err_int += ei;
    if (er <= ei) ++improved;
    if (std::fabs(p.x - peak.w) <= 1.0 && std::fabs(p.y - peak.h) <= 1.0) ++bounded;
  }
  CHECK(bounded == trials);
  CHECK(improved >= trials * 95 / 100);
  CHECK(err_ref / trials < err_int / trials);
}

TEST_CASE("vtvje: past descriptor thresholds the peak at 0.35") {
  Heatmap a = analytic_gaussian(32, 32, 16.0, 16.0, 3.0, 0.34);
  Heatmap b = analytic_gaussian(32, 32, 16.0, 16.0, 3.0, 0.35);
  CHECK(build_past_descriptor(a).v_vis == 0.0);
  CHECK(build_past_descriptor(b).v_vis == 1.0);
  CHECK(build_past_descriptor(a).v_peak == doctest::Approx(0.34));
}

TEST_CASE("vtvje: all-zero map gives the zero descriptor") {
  Heatmap hm(16, 16);
  const JointDescriptor d = build_past_descriptor(hm);
  CHECK(d.x_norm == 0.0);
  CHECK(d.y_norm == 0.0);
  CHECK(d.v_peak == 0.0);
  CHECK(d.v_vis == 0.0);
}

TEST_CASE("vtvje: descriptor normalization arithmetic") {
  // Refined peak (24.5, 32.25) on a 72-wide, 96-high grid with value 0.9.
  // Build a map whose Taylor refinement lands exactly there.
  Heatmap hm = analytic_gaussian(96, 72, 24.5, 32.25, 3.0, 0.9);
  const JointDescriptor d = build_past_descriptor(hm);
  CHECK(d.x_norm == doctest::Approx(24.5 / 72.0).epsilon(2e-3));
  CHECK(d.y_norm == doctest::Approx(32.25 / 96.0).epsilon(2e-3));
  CHECK(d.v_peak == doctest::Approx(0.9).epsilon(2e-2));
  CHECK(d.v_vis == 1.0);
  // The normalization itself, checked with independent scalar arithmetic.
  CHECK(24.5 / 72.0 == doctest::Approx(0.34028).epsilon(1e-4));
  CHECK(32.25 / 96.0 == doctest::Approx(0.33594).epsilon(1e-4));
}

TEST_CASE("vtvje: linear extrapolation and velocity") {
  SubPixelPeak p2{10.0, 10.0, 1.0, true};
  SubPixelPeak p1{12.0, 13.0, 0.8, true};
  JointDescriptor d1{12.0 / 48, 13.0 / 64, 0.8, 1.0};
  const Extrapolation e = extrapolate_current(p2, p1, d1, 64, 48);
  CHECK(e.center_x == 14.0);
  CHECK(e.center_y == 16.0);
  CHECK(e.velocity.dx == 2.0);
  CHECK(e.velocity.dy == 3.0);
  CHECK(e.velocity.speed == doctest::Approx(std::sqrt(13.0)));
  CHECK(e.descriptor.v_peak == 0.8);
  CHECK(e.descriptor.v_vis == 1.0);
  CHECK(e.velocity.speed * e.velocity.speed ==
        doctest::Approx(e.velocity.dx * e.velocity.dx + e.velocity.dy * e.velocity.dy)
            .epsilon(1e-9));
}

TEST_CASE("vtvje: zero motion keeps the previous center") {
  SubPixelPeak p{20.0, 30.0, 1.0, true};
  JointDescriptor d{20.0 / 48, 30.0 / 64, 1.0, 1.0};
  const Extrapolation e = extrapolate_current(p, p, d, 64, 48);
  CHECK(e.center_x == 20.0);
  CHECK(e.center_y == 30.0);
  CHECK(e.velocity.speed == 0.0);
}

TEST_CASE("vtvje: extrapolated center clamps to the grid") {
  SubPixelPeak p2{65.0, 89.0, 1.0, true};
  SubPixelPeak p1{70.0, 94.0, 1.0, true};
  JointDescriptor d1{70.0 / 72, 94.0 / 96, 1.0, 1.0};
  const Extrapolation e = extrapolate_current(p2, p1, d1, 96, 72);
  CHECK(e.raw_x == 75.0);
  CHECK(e.raw_y == 99.0);
  CHECK(e.center_x == 71.0);
  CHECK(e.center_y == 95.0);
}

TEST_CASE("vtvje: constant-velocity extrapolation is exact pre-clamp") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double x0 = rng.uniform(5, 40), y0 = rng.uniform(5, 55);
    const double vx = rng.uniform(-3, 3), vy = rng.uniform(-3, 3);
    SubPixelPeak p2{x0, y0, 1.0, true};
    SubPixelPeak p1{x0 + vx, y0 + vy, 1.0, true};
    JointDescriptor d1{};
    const Extrapolation e = extrapolate_current(p2, p1, d1, 64, 48);
    CHECK(e.raw_x == doctest::Approx(x0 + 2 * vx).epsilon(1e-12));
    CHECK(e.raw_y == doctest::Approx(y0 + 2 * vy).epsilon(1e-12));
  }
}

TEST_CASE("vtvje: embedding zero params gives zeros") {
  const int D = 32;
  EmbedderParams p{Mat(4, D), Mat(1, D), Mat(D, D), Mat(1, D)};
  const Mat q = embed_descriptor(JointDescriptor{0.3, 0.4, 0.9, 1.0}, p);
  CHECK(q.rows == 1);
  CHECK(q.cols == D);
  for (double v : q.a) CHECK(v == 0.0);
}

TEST_CASE("vtvje: identity-like embedder passes the descriptor through") {
  const int D = 32;
  EmbedderParams p{Mat(4, D), Mat(1, D), Mat::identity(D), Mat(1, D)};
  for (int i = 0; i < 4; ++i) p.W1(i, i) = 1.0;
  const JointDescriptor d{0.3, 0.4, 0.9, 1.0};
  const Mat q = embed_descriptor(d, p);
  CHECK(q(0, 0) == doctest::Approx(0.3));
  CHECK(q(0, 1) == doctest::Approx(0.4));
  CHECK(q(0, 2) == doctest::Approx(0.9));
  CHECK(q(0, 3) == doctest::Approx(1.0));
  for (int i = 4; i < D; ++i) CHECK(q(0, i) == 0.0);
}

TEST_CASE("vtvje: embedding is sensitive to the visibility flag") {
  const int D = 32;
  Rng rng(55);
  EmbedderParams p{Mat(4, D), Mat(1, D), Mat(D, D), Mat(1, D)};
  for (double& v : p.W1.a) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.b1.a) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.W2.a) v = rng.uniform(-0.5, 0.5);
  for (double& v : p.b2.a) v = rng.uniform(-0.5, 0.5);
  const JointDescriptor d{0.3, 0.4, 0.9, 1.0};
  JointDescriptor d2 = d;
  d2.v_vis = 0.0;
  CHECK(npose::max_abs_diff(embed_descriptor(d, p), embed_descriptor(d2, p)) > 0.0);
}

TEST_CASE("vtvje: descriptor fields stay in [0,1] on random maps") {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    Heatmap hm(32, 24);
    for (double& v : hm.v) v = rng.uniform(0.0, 1.5);
    const JointDescriptor d = build_past_descriptor(hm);
    CHECK(d.x_norm >= 0.0);
    CHECK(d.x_norm <= 1.0);
    CHECK(d.y_norm >= 0.0);
    CHECK(d.y_norm <= 1.0);
    CHECK(d.v_peak >= 0.0);
    CHECK(d.v_peak <= 1.0);
    CHECK((d.v_vis == 0.0 || d.v_vis == 1.0));
  }
}
