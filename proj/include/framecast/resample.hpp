#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "framecast/core.hpp"

namespace framecast {

// Out-of-image sampling behavior. Clamp replicates the edge sample, Reflect
// mirrors about the image border (…dcba|abcd|dcba…).
enum class BoundaryPolicy { Clamp, Reflect };

// Cubic convolution kernel with a = -0.5, the kernel behind MATLAB
// imresize's bicubic mode. Support is |x| < 2.
inline double bicubic_kernel(double x) {
  const double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((((ax - 5.0) * ax + 8.0) * ax) - 4.0) * a;
  return 0.0;
}

namespace detail {

inline int resolve_index(int i, int n, BoundaryPolicy policy) {
  if (i >= 0 && i < n) return i;
  if (policy == BoundaryPolicy::Clamp) return i < 0 ? 0 : n - 1;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Taps and normalized weights for one output sample. center is the source
// coordinate, kscale stretches the kernel (1 for plain interpolation, s for
// antialiased downscale). pivot indexes the tap nearest the center; outputs
// are evaluated as pivot_value + sum(w * (value - pivot_value)) so constant
// inputs reproduce exactly.
struct TapSet {
  int first = 0;
  int pivot = 0;
  std::vector<double> w;
};

inline TapSet make_taps(double center, double kscale) {
  const double support = 2.0 * kscale;
  const int first = static_cast<int>(std::ceil(center - support));
  const int last = static_cast<int>(std::floor(center + support));
  TapSet taps;
  taps.first = first;
  taps.w.resize(static_cast<std::size_t>(last - first + 1));
  double sum = 0.0;
  for (std::size_t j = 0; j < taps.w.size(); ++j) {
    taps.w[j] = bicubic_kernel((center - (first + static_cast<int>(j))) / kscale);
    sum += taps.w[j];
  }
  for (double& w : taps.w) w /= sum;
  const int nearest = static_cast<int>(std::llround(center));
  taps.pivot = std::clamp(nearest - first, 0, static_cast<int>(taps.w.size()) - 1);
  return taps;
}

inline std::vector<TapSet> make_axis_taps(int out_n, double scale, double kscale) {
  std::vector<TapSet> taps;
  taps.reserve(static_cast<std::size_t>(out_n));
  for (int i = 0; i < out_n; ++i) taps.push_back(make_taps((i + 0.5) * scale - 0.5, kscale));
  return taps;
}

// Horizontal resampling pass; height and channels are preserved.
inline Image resample_rows(const Image& img, const std::vector<TapSet>& taps, BoundaryPolicy bp) {
  Image out(img.height, static_cast<int>(taps.size()), img.channels);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const TapSet& t = taps[static_cast<std::size_t>(x)];
      for (int c = 0; c < img.channels; ++c) {
        const double pivot = img.at(y, resolve_index(t.first + t.pivot, img.width, bp), c);
        double acc = 0.0;
        for (std::size_t j = 0; j < t.w.size(); ++j) {
          const int sx = resolve_index(t.first + static_cast<int>(j), img.width, bp);
          acc += t.w[j] * (img.at(y, sx, c) - pivot);
        }
        out.at(y, x, c) = pivot + acc;
      }
    }
  }
  return out;
}

inline Image resample_cols(const Image& img, const std::vector<TapSet>& taps, BoundaryPolicy bp) {
  Image out(static_cast<int>(taps.size()), img.width, img.channels);
  for (int y = 0; y < out.height; ++y) {
    const TapSet& t = taps[static_cast<std::size_t>(y)];
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        const double pivot = img.at(resolve_index(t.first + t.pivot, img.height, bp), x, c);
        double acc = 0.0;
        for (std::size_t j = 0; j < t.w.size(); ++j) {
          const int sy = resolve_index(t.first + static_cast<int>(j), img.height, bp);
          acc += t.w[j] * (img.at(sy, x, c) - pivot);
        }
        out.at(y, x, c) = pivot + acc;
      }
    }
  }
  return out;
}

inline void clamp_image(Image& img) {
  for (double& v : img.data) v = clamp01(v);
}

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Bilinear sample of one channel plane. Taps are resolved per policy; the
// nested-lerp form keeps constant inputs exact. Positions are confined to a
// range that keeps the int casts defined.
inline double bilinear_sample(const double* plane, int h, int w, double y, double x,
                              BoundaryPolicy bp) {
  x = std::clamp(x, -1.0e9, 1.0e9);
  y = std::clamp(y, -1.0e9, 1.0e9);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int xa = resolve_index(x0, w, bp);
  const int xb = resolve_index(x0 + 1, w, bp);
  const int ya = resolve_index(y0, h, bp);
  const int yb = resolve_index(y0 + 1, h, bp);
  const double v00 = plane[static_cast<std::size_t>(ya) * w + xa];
  const double v01 = plane[static_cast<std::size_t>(ya) * w + xb];
  const double v10 = plane[static_cast<std::size_t>(yb) * w + xa];
  const double v11 = plane[static_cast<std::size_t>(yb) * w + xb];
  const double top = v00 + fx * (v01 - v00);
  const double bot = v10 + fx * (v11 - v10);
  return top + fy * (bot - top);
}

inline bool sample_in_bounds(double y, double x, int h, int w) {
  return x >= 0.0 && x <= static_cast<double>(w - 1) && y >= 0.0 && y <= static_cast<double>(h - 1);
}

}  // namespace detail

// Degradation model: antialiased bicubic downscale by integer factor s.
// Output dims are ceil(dim/s); the kernel is stretched by s and weights are
// renormalized per output pixel, matching MATLAB imresize defaults.
inline Image degrade(const Image& img, int s, BoundaryPolicy bp = BoundaryPolicy::Clamp) {
  require(s >= 2, "degrade: scale must be >= 2");
  require(img.height >= 1 && img.width >= 1, "degrade: empty image");
  const int out_h = detail::ceil_div(img.height, s);
  const int out_w = detail::ceil_div(img.width, s);
  const auto taps_x = detail::make_axis_taps(out_w, static_cast<double>(s), static_cast<double>(s));
  const auto taps_y = detail::make_axis_taps(out_h, static_cast<double>(s), static_cast<double>(s));
  Image out = detail::resample_cols(detail::resample_rows(img, taps_x, bp), taps_y, bp);
  detail::clamp_image(out);
  return out;
}

// Bicubic up-scaling without antialiasing (4 taps per axis). Source
// coordinate of output pixel i is (i + 0.5) * (src/dst) - 0.5 per axis.
inline Image upscale(const Image& img, int target_h, int target_w,
                     BoundaryPolicy bp = BoundaryPolicy::Clamp) {
  require(img.height >= 1 && img.width >= 1, "upscale: empty image");
  require(target_h >= img.height && target_w >= img.width,
          "upscale: target must not be smaller than source");
  const auto taps_x =
      detail::make_axis_taps(target_w, static_cast<double>(img.width) / target_w, 1.0);
  const auto taps_y =
      detail::make_axis_taps(target_h, static_cast<double>(img.height) / target_h, 1.0);
  Image out = detail::resample_cols(detail::resample_rows(img, taps_x, bp), taps_y, bp);
  detail::clamp_image(out);
  return out;
}

// Backward warp: output(p) = bilinear sample of source at p + flow(p).
// A pixel is valid iff its sample position lies inside the source rectangle
// [0, W-1] x [0, H-1]; out-of-bounds samples are resolved per policy but
// flagged invalid.
inline std::pair<Image, ValidityMask> backward_warp(const Image& source, const FlowField& flow,
                                                    BoundaryPolicy bp = BoundaryPolicy::Clamp) {
  require(source.height >= 1 && source.width >= 1, "backward_warp: empty source");
  Image out(flow.height, flow.width, source.channels);
  ValidityMask valid(flow.height, flow.width, false);
  const std::size_t plane_stride = static_cast<std::size_t>(source.height) * source.width;
  std::vector<double> planes;
  const double* plane_ptr = nullptr;
  if (source.channels == 1) {
    plane_ptr = source.data.data();
  } else {
    planes.resize(plane_stride * source.channels);
    for (int c = 0; c < source.channels; ++c)
      for (std::size_t i = 0; i < plane_stride; ++i)
        planes[c * plane_stride + i] = source.data[i * source.channels + c];
    plane_ptr = planes.data();
  }
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const double sx = x + flow.u_at(y, x);
      const double sy = y + flow.v_at(y, x);
      valid.set(y, x, detail::sample_in_bounds(sy, sx, source.height, source.width));
      for (int c = 0; c < source.channels; ++c)
        out.at(y, x, c) = detail::bilinear_sample(plane_ptr + c * plane_stride, source.height,
                                                  source.width, sy, sx, bp);
    }
  }
  return {std::move(out), std::move(valid)};
}

// Warp a flow field like a two-channel image; agrees exactly with warping
// each component as a single-channel Image.
inline std::pair<FlowField, ValidityMask> backward_warp(const FlowField& source,
                                                        const FlowField& flow,
                                                        BoundaryPolicy bp = BoundaryPolicy::Clamp) {
  require(source.height >= 1 && source.width >= 1, "backward_warp: empty source");
  FlowField out(flow.height, flow.width);
  ValidityMask valid(flow.height, flow.width, false);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const double sx = x + flow.u_at(y, x);
      const double sy = y + flow.v_at(y, x);
      valid.set(y, x, detail::sample_in_bounds(sy, sx, source.height, source.width));
      out.u_at(y, x) =
          detail::bilinear_sample(source.u.data(), source.height, source.width, sy, sx, bp);
      out.v_at(y, x) =
          detail::bilinear_sample(source.v.data(), source.height, source.width, sy, sx, bp);
    }
  }
  return {std::move(out), std::move(valid)};
}

// Separable Gaussian blur, kernel truncated at ceil(3*sigma) and normalized.
inline Image gaussian_blur(const Image& img, double sigma,
                           BoundaryPolicy bp = BoundaryPolicy::Clamp) {
  require(sigma > 0.0, "gaussian_blur: sigma must be positive");
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> w(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int j = -r; j <= r; ++j) {
    w[static_cast<std::size_t>(j + r)] = std::exp(-(static_cast<double>(j) * j) / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(j + r)];
  }
  for (double& x : w) x /= sum;

  Image tmp(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double pivot = img.at(y, x, c);
        double acc = 0.0;
        for (int j = -r; j <= r; ++j)
          acc += w[static_cast<std::size_t>(j + r)] *
                 (img.at(y, detail::resolve_index(x + j, img.width, bp), c) - pivot);
        tmp.at(y, x, c) = pivot + acc;
      }
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double pivot = tmp.at(y, x, c);
        double acc = 0.0;
        for (int j = -r; j <= r; ++j)
          acc += w[static_cast<std::size_t>(j + r)] *
                 (tmp.at(detail::resolve_index(y + j, img.height, bp), x, c) - pivot);
        out.at(y, x, c) = pivot + acc;
      }
  return out;
}

}  // namespace framecast
