#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "framecast/core.hpp"
#include "framecast/resample.hpp"

namespace framecast {

// Dense flow estimation seam. The default implementation below is classical
// pyramidal block matching; a learned backbone can be wired in behind the
// same interface.
class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  // Returns the flow anchored at `from` toward `to`.
  virtual FlowField estimate(const Image& from, const Image& to) const = 0;
};

struct BlockMatchConfig {
  int levels = 3;        // pyramid depth; truncated when a level gets too small
  int block = 9;         // odd SAD window size
  int radius = 4;        // integer search radius per level
  bool subpixel = true;  // 1D parabolic refinement per axis at the finest level
};

namespace detail {

struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> v;
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

inline Plane to_gray_plane(const Image& img) {
  Plane p;
  p.height = img.height;
  p.width = img.width;
  p.v = luma(img);
  return p;
}

inline Plane halve_plane(const Plane& p) {
  Image tmp(p.height, p.width, 1);
  tmp.data = p.v;
  Image small = degrade(tmp, 2);
  Plane out;
  out.height = small.height;
  out.width = small.width;
  out.v = std::move(small.data);
  return out;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Sum of absolute differences over an odd block centered at (py, px) in a
// and (py + dy, px + dx) in b, block taps clamped to the frame.
inline double block_sad(const Plane& a, const Plane& b, int py, int px, int dy, int dx,
                        int half) {
  double sad = 0.0;
  for (int by = -half; by <= half; ++by) {
    const int ay = clampi(py + by, 0, a.height - 1);
    const int byy = clampi(py + by + dy, 0, b.height - 1);
    for (int bx = -half; bx <= half; ++bx) {
      const int ax = clampi(px + bx, 0, a.width - 1);
      const int bxx = clampi(px + bx + dx, 0, b.width - 1);
      sad += std::abs(a.at(ay, ax) - b.at(byy, bxx));
    }
  }
  return sad;
}

// Bilinear upsample of a coarse flow to fine dimensions with values doubled.
inline FlowField upsample_flow(const FlowField& coarse, int fine_h, int fine_w) {
  FlowField out(fine_h, fine_w);
  const double sy = static_cast<double>(coarse.height) / fine_h;
  const double sx = static_cast<double>(coarse.width) / fine_w;
  for (int y = 0; y < fine_h; ++y) {
    const double cy = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < fine_w; ++x) {
      const double cx = (x + 0.5) * sx - 0.5;
      out.u_at(y, x) = 2.0 * bilinear_sample(coarse.u.data(), coarse.height, coarse.width, cy, cx,
                                             BoundaryPolicy::Clamp);
      out.v_at(y, x) = 2.0 * bilinear_sample(coarse.v.data(), coarse.height, coarse.width, cy, cx,
                                             BoundaryPolicy::Clamp);
    }
  }
  return out;
}

}  // namespace detail

// Coarse-to-fine block matching. At every pyramid level each pixel searches
// integer displacements within +-radius of the upsampled coarser estimate,
// minimizing SAD over the block. Ties break toward the smallest displacement
// magnitude, then (dv, du) lexicographic order, which makes the result
// deterministic. Frames are matched on BT.601 luma.
inline FlowField block_match_estimate(const Image& from, const Image& to,
                                      const BlockMatchConfig& cfg = {}) {
  require(from.same_shape(to), "block_match_estimate: dimension mismatch");
  require(cfg.block >= 3 && cfg.block % 2 == 1, "block_match_estimate: block must be odd and >= 3");
  require(cfg.radius >= 1, "block_match_estimate: radius must be >= 1");
  require(cfg.levels >= 1, "block_match_estimate: levels must be >= 1");

  std::vector<detail::Plane> pyr_a, pyr_b;
  pyr_a.push_back(detail::to_gray_plane(from));
  pyr_b.push_back(detail::to_gray_plane(to));
  const int min_dim = std::max(8, cfg.block);
  for (int l = 1; l < cfg.levels; ++l) {
    const detail::Plane& prev = pyr_a.back();
    if ((prev.height + 1) / 2 < min_dim || (prev.width + 1) / 2 < min_dim) break;
    pyr_a.push_back(detail::halve_plane(pyr_a.back()));
    pyr_b.push_back(detail::halve_plane(pyr_b.back()));
  }

  const int half = cfg.block / 2;
  FlowField flow;
  for (int l = static_cast<int>(pyr_a.size()) - 1; l >= 0; --l) {
    const detail::Plane& a = pyr_a[static_cast<std::size_t>(l)];
    const detail::Plane& b = pyr_b[static_cast<std::size_t>(l)];
    FlowField init = (flow.height == 0) ? FlowField(a.height, a.width)
                                        : detail::upsample_flow(flow, a.height, a.width);
    FlowField next(a.height, a.width);
    const bool finest = (l == 0);
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) {
        const int cu = static_cast<int>(std::llround(init.u_at(y, x)));
        const int cv = static_cast<int>(std::llround(init.v_at(y, x)));
        double best = std::numeric_limits<double>::infinity();
        long best_mag = 0;
        int best_du = cu, best_dv = cv;
        for (int dv = cv - cfg.radius; dv <= cv + cfg.radius; ++dv) {
          for (int du = cu - cfg.radius; du <= cu + cfg.radius; ++du) {
            const double cost = detail::block_sad(a, b, y, x, dv, du, half);
            const long mag = static_cast<long>(du) * du + static_cast<long>(dv) * dv;
            const bool better =
                cost < best ||
                (cost == best && (mag < best_mag || (mag == best_mag &&
                                                     (dv < best_dv || (dv == best_dv && du < best_du)))));
            if (better) {
              best = cost;
              best_mag = mag;
              best_du = du;
              best_dv = dv;
            }
          }
        }
        double fu = best_du, fv = best_dv;
        // a zero-cost match is exact; the parabola fit would drift toward the
        // cheaper neighbor
        if (finest && cfg.subpixel && best > 0.0) {
          const double c0 = best;
          const double cxm = detail::block_sad(a, b, y, x, best_dv, best_du - 1, half);
          const double cxp = detail::block_sad(a, b, y, x, best_dv, best_du + 1, half);
          const double dx_den = cxm + cxp - 2.0 * c0;
          if (dx_den > 0.0) fu += std::clamp((cxm - cxp) / (2.0 * dx_den), -0.5, 0.5);
          const double cym = detail::block_sad(a, b, y, x, best_dv - 1, best_du, half);
          const double cyp = detail::block_sad(a, b, y, x, best_dv + 1, best_du, half);
          const double dy_den = cym + cyp - 2.0 * c0;
          if (dy_den > 0.0) fv += std::clamp((cym - cyp) / (2.0 * dy_den), -0.5, 0.5);
        }
        next.u_at(y, x) = fu;
        next.v_at(y, x) = fv;
      }
    }
    flow = std::move(next);
  }
  return flow;
}

class BlockMatchEstimator final : public FlowEstimator {
 public:
  explicit BlockMatchEstimator(BlockMatchConfig cfg = {}) : cfg_(cfg) {}
  FlowField estimate(const Image& from, const Image& to) const override {
    return block_match_estimate(from, to, cfg_);
  }
  const BlockMatchConfig& config() const { return cfg_; }

 private:
  BlockMatchConfig cfg_;
};

// Warped flow prediction: back-warp F(-1->0) along F(0->-1) to approximate
// F(0->1), then scale linearly by t. The mask comes from the warp.
inline std::pair<FlowField, ValidityMask> warp_predict(const FlowField& f_m1_to_0,
                                                       const FlowField& f_0_to_m1, double t) {
  require(f_m1_to_0.same_shape(f_0_to_m1), "warp_predict: dimension mismatch");
  auto [f_hat, valid] = backward_warp(f_m1_to_0, f_0_to_m1);
  for (std::size_t i = 0; i < f_hat.size(); ++i) {
    f_hat.u[i] *= t;
    f_hat.v[i] *= t;
  }
  return {std::move(f_hat), std::move(valid)};
}

// Quadratic flow propagation under uniform acceleration:
// F(0->t) = 0.5*t*(t+1)*F(0->-2) - t*(t+2)*F(0->-1), evaluated per pixel
// with no resampling.
inline FlowField propagate(const FlowField& f_0_to_m1, const FlowField& f_0_to_m2, double t) {
  require(f_0_to_m1.same_shape(f_0_to_m2), "propagate: dimension mismatch");
  const double c2 = 0.5 * t * (t + 1.0);
  const double c1 = -t * (t + 2.0);
  FlowField out(f_0_to_m1.height, f_0_to_m1.width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.u[i] = c2 * f_0_to_m2.u[i] + c1 * f_0_to_m1.u[i];
    out.v[i] = c2 * f_0_to_m2.v[i] + c1 * f_0_to_m1.v[i];
  }
  return out;
}

// Degraded-frame flow estimation: estimate from the HR reference toward the
// bicubically up-scaled LR observation.
inline FlowField estimate_lossy(const Image& i0, const Image& lr, int s,
                                const FlowEstimator& estimator) {
  require(s >= 2, "estimate_lossy: scale must be >= 2");
  require(lr.channels == i0.channels, "estimate_lossy: channel mismatch");
  require(lr.height == detail::ceil_div(i0.height, s) && lr.width == detail::ceil_div(i0.width, s),
          "estimate_lossy: lr dimensions inconsistent with scale");
  const Image proxy = upscale(lr, i0.height, i0.width);
  return estimator.estimate(i0, proxy);
}

}  // namespace framecast
