#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "framecast/core.hpp"
#include "framecast/resample.hpp"

namespace framecast {

enum class CandidateLabel { Warped, Propagated, Estimated };

struct FlowCandidate {
  FlowField flow;
  ValidityMask valid;
  CandidateLabel label = CandidateLabel::Warped;
};

// Parameters of the Gaussian-weighted backward projection. sigma is the
// width of w(d) = exp(-d^2 / sigma^2); radius bounds the rasterized
// footprint in Chebyshev distance.
struct ProjectionConfig {
  double sigma = 1.0;
  int radius = 1;
};

namespace detail {

inline double charbonnier_penalty(double x) {
  const double eps = 1e-6;
  return std::sqrt(x * x + eps * eps);
}

// Selection order when photometric costs tie (lossy) and when picking the
// first valid candidate (lost).
inline int lossy_rank(CandidateLabel l) {
  switch (l) {
    case CandidateLabel::Estimated: return 0;
    case CandidateLabel::Warped: return 1;
    default: return 2;
  }
}
inline int lost_rank(CandidateLabel l) {
  switch (l) {
    case CandidateLabel::Warped: return 0;
    case CandidateLabel::Propagated: return 1;
    default: return 2;
  }
}
// Fallback when no candidate is valid at a pixel: favor the propagated flow,
// which involves no resampling and is defined everywhere.
inline int fallback_rank(CandidateLabel l) {
  switch (l) {
    case CandidateLabel::Propagated: return 0;
    case CandidateLabel::Warped: return 1;
    default: return 2;
  }
}

inline std::size_t pick_lost(const std::vector<FlowCandidate>& candidates, int y, int x) {
  int best_rank = std::numeric_limits<int>::max();
  std::size_t best = candidates.size();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!candidates[k].valid.at(y, x)) continue;
    const int r = lost_rank(candidates[k].label);
    if (r < best_rank) {
      best_rank = r;
      best = k;
    }
  }
  if (best != candidates.size()) return best;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const int r = fallback_rank(candidates[k].label);
    if (r < best_rank) {
      best_rank = r;
      best = k;
    }
  }
  return best;
}

}  // namespace detail

// Deterministic per-pixel fusion of candidate forward flows.
//
// Lossy case (target_proxy given): each pixel takes the candidate with the
// lowest Charbonnier photometric cost between the reference pixel and the
// proxy bilinearly sampled at the candidate's arrival point; invalid
// candidates are excluded and exact ties break estimated > warped >
// propagated. Pixels where every candidate is invalid fall back to the lost
// rule.
//
// Lost case: each pixel takes the warped candidate where its mask is valid,
// otherwise the propagated candidate. The output is always a per-pixel
// selection among the candidates, never a blend.
inline FlowField fuse(const std::vector<FlowCandidate>& candidates, const Image& reference,
                      const Image* target_proxy = nullptr) {
  require(!candidates.empty(), "fuse: candidate list is empty");
  for (const FlowCandidate& c : candidates) {
    require(c.flow.height == reference.height && c.flow.width == reference.width,
            "fuse: candidate dimensions must match reference");
    require(c.valid.height == reference.height && c.valid.width == reference.width,
            "fuse: candidate mask dimensions must match reference");
  }
  if (target_proxy != nullptr)
    require(target_proxy->same_shape(reference), "fuse: proxy dimensions must match reference");

  // photometric cost of sampling the proxy at (sy, sx) against the reference
  // pixel (y, x); bilinear taps clamp at the border
  auto photometric_cost = [&](int y, int x, double sy, double sx) {
    sx = std::clamp(sx, -1.0e9, 1.0e9);
    sy = std::clamp(sy, -1.0e9, 1.0e9);
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0;
    const double fy = sy - y0;
    const int xa = detail::resolve_index(x0, reference.width, BoundaryPolicy::Clamp);
    const int xb = detail::resolve_index(x0 + 1, reference.width, BoundaryPolicy::Clamp);
    const int ya = detail::resolve_index(y0, reference.height, BoundaryPolicy::Clamp);
    const int yb = detail::resolve_index(y0 + 1, reference.height, BoundaryPolicy::Clamp);
    double cost = 0.0;
    for (int ch = 0; ch < reference.channels; ++ch) {
      const double v00 = target_proxy->at(ya, xa, ch);
      const double v01 = target_proxy->at(ya, xb, ch);
      const double v10 = target_proxy->at(yb, xa, ch);
      const double v11 = target_proxy->at(yb, xb, ch);
      const double top = v00 + fx * (v01 - v00);
      const double bot = v10 + fx * (v11 - v10);
      cost += detail::charbonnier_penalty(reference.at(y, x, ch) - (top + fy * (bot - top)));
    }
    return cost;
  };

  FlowField out(reference.height, reference.width);
  for (int y = 0; y < reference.height; ++y) {
    for (int x = 0; x < reference.width; ++x) {
      std::size_t chosen = candidates.size();
      if (target_proxy != nullptr) {
        double best_cost = std::numeric_limits<double>::infinity();
        int best_rank = std::numeric_limits<int>::max();
        for (std::size_t k = 0; k < candidates.size(); ++k) {
          const FlowCandidate& c = candidates[k];
          if (!c.valid.at(y, x)) continue;
          const double cost =
              photometric_cost(y, x, y + c.flow.v_at(y, x), x + c.flow.u_at(y, x));
          const int rank = detail::lossy_rank(c.label);
          if (cost < best_cost || (cost == best_cost && rank < best_rank)) {
            best_cost = cost;
            best_rank = rank;
            chosen = k;
          }
        }
      }
      if (chosen == candidates.size()) chosen = detail::pick_lost(candidates, y, x);
      out.u_at(y, x) = candidates[chosen].flow.u_at(y, x);
      out.v_at(y, x) = candidates[chosen].flow.v_at(y, x);
    }
  }
  return out;
}

// Project a forward flow F(0->t) to the backward flow F(t->0) by
// Gaussian-weighted splatting: every source pixel x contributes -F(x) to the
// target pixels strictly within Chebyshev distance `radius` of its arrival
// point x + F(x), weighted by exp(-d^2/sigma^2) with d the Euclidean
// distance between the target pixel and the arrival point. Targets reached
// by no source are holes (mask false) and carry zero flow.
inline std::pair<FlowField, ValidityMask> project_flow(const FlowField& forward,
                                                       const ProjectionConfig& cfg = {}) {
  require(cfg.sigma > 0.0, "project_flow: sigma must be positive");
  require(cfg.radius >= 1, "project_flow: radius must be >= 1");
  const int h = forward.height;
  const int w = forward.width;
  const std::size_t n = forward.size();
  std::vector<double> den(n, 0.0), acc_u(n, 0.0), acc_v(n, 0.0);
  std::vector<double> pivot_u(n, 0.0), pivot_v(n, 0.0);
  std::vector<std::uint8_t> seeded(n, 0);
  const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
  const double r = static_cast<double>(cfg.radius);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fu = forward.u_at(y, x);
      const double fv = forward.v_at(y, x);
      if (!std::isfinite(fu) || !std::isfinite(fv)) continue;
      const double px = x + fu;
      const double py = y + fv;
      // arrivals outside the frame's radius band contribute nothing; this
      // also keeps the int casts below in range
      if (!(px > -r - 1.0 && px < w - 1 + r + 1.0 && py > -r - 1.0 && py < h - 1 + r + 1.0))
        continue;
      const int x_lo = std::max(0, static_cast<int>(std::floor(px - r)) + 1);
      const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(px + r)) - 1);
      const int y_lo = std::max(0, static_cast<int>(std::floor(py - r)) + 1);
      const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(py + r)) - 1);
      for (int uy = y_lo; uy <= y_hi; ++uy) {
        for (int ux = x_lo; ux <= x_hi; ++ux) {
          const double d2 = (px - ux) * (px - ux) + (py - uy) * (py - uy);
          const double wgt = std::exp(-d2 * inv_s2);
          const std::size_t i = static_cast<std::size_t>(uy) * w + ux;
          if (!seeded[i]) {
            seeded[i] = 1;
            pivot_u[i] = fu;
            pivot_v[i] = fv;
            den[i] = wgt;
          } else {
            den[i] += wgt;
            acc_u[i] += wgt * (fu - pivot_u[i]);
            acc_v[i] += wgt * (fv - pivot_v[i]);
          }
        }
      }
    }
  }

  FlowField backward(h, w);
  ValidityMask valid(h, w, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!seeded[i]) continue;
    valid.bits[i] = 1;
    backward.u[i] = -(pivot_u[i] + acc_u[i] / den[i]);
    backward.v[i] = -(pivot_v[i] + acc_v[i] / den[i]);
  }
  return {std::move(backward), std::move(valid)};
}

// Replace each hole with the flow of the nearest valid pixel (Euclidean
// distance, ties broken by row-major order of the valid pixel). A field with
// no valid pixel at all becomes zero flow.
inline FlowField fill_holes(const FlowField& flow, const ValidityMask& holes) {
  require(holes.height == flow.height && holes.width == flow.width,
          "fill_holes: dimension mismatch");
  if (holes.all_valid()) return flow;
  const std::size_t n_valid = holes.count_valid();
  if (n_valid == 0) return FlowField(flow.height, flow.width);

  FlowField out = flow;
  const int h = flow.height;
  const int w = flow.width;
  const int max_ring = std::max(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (holes.at(y, x)) continue;
      long best_d2 = std::numeric_limits<long>::max();
      int best_y = -1, best_x = -1;
      for (int k = 1; k <= max_ring; ++k) {
        // pixels on Chebyshev ring k have Euclidean distance >= k, so once a
        // best candidate beats the next ring we can stop
        if (best_y >= 0 && static_cast<long>(k) * k > best_d2) break;
        auto consider = [&](int yy, int xx) {
          if (yy < 0 || yy >= h || xx < 0 || xx >= w || !holes.at(yy, xx)) return;
          const long dy = yy - y, dx = xx - x;
          const long d2 = dy * dy + dx * dx;
          if (d2 < best_d2 || (d2 == best_d2 && (yy < best_y || (yy == best_y && xx < best_x)))) {
            best_d2 = d2;
            best_y = yy;
            best_x = xx;
          }
        };
        for (int xx = x - k; xx <= x + k; ++xx) {
          consider(y - k, xx);
          consider(y + k, xx);
        }
        for (int yy = y - k + 1; yy <= y + k - 1; ++yy) {
          consider(yy, x - k);
          consider(yy, x + k);
        }
      }
      out.u_at(y, x) = flow.u_at(best_y, best_x);
      out.v_at(y, x) = flow.v_at(best_y, best_x);
    }
  }
  return out;
}

}  // namespace framecast
