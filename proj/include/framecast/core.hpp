#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Coordinate convention used throughout: x is the column index (+right),
// y is the row index (+down), pixel centers sit on integer coordinates and
// flow vectors are in pixel units. A flow field tagged a->b maps pixel p of
// frame a to position p + flow(p) in frame b.

namespace framecast {

// Raised by file readers; the message names the byte or token offset where
// parsing failed.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Row-major raster of normalized intensities in [0,1]; 1 or 3 channels.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;  // height * width * channels entries

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0) : height(h), width(w), channels(c) {
    require(h >= 1 && w >= 1, "Image: dimensions must be positive");
    require(c == 1 || c == 3, "Image: channels must be 1 or 3");
    data.assign(static_cast<std::size_t>(h) * w * c, fill);
  }

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  std::size_t size() const { return data.size(); }
};

// Per-pixel displacement field anchored at the "from" frame. u is the
// horizontal component, v the vertical one.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<double> u, v;

  FlowField() = default;
  FlowField(int h, int w, double du = 0.0, double dv = 0.0) : height(h), width(w) {
    require(h >= 1 && w >= 1, "FlowField: dimensions must be positive");
    u.assign(static_cast<std::size_t>(h) * w, du);
    v.assign(static_cast<std::size_t>(h) * w, dv);
  }

  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
  double& u_at(int y, int x) { return u[idx(y, x)]; }
  double& v_at(int y, int x) { return v[idx(y, x)]; }
  double u_at(int y, int x) const { return u[idx(y, x)]; }
  double v_at(int y, int x) const { return v[idx(y, x)]; }
  bool same_shape(const FlowField& o) const { return height == o.height && width == o.width; }
  std::size_t size() const { return u.size(); }
};

// Boolean per pixel; 1 marks a trustworthy value.
struct ValidityMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  ValidityMask() = default;
  ValidityMask(int h, int w, bool value = true) : height(h), width(w) {
    require(h >= 1 && w >= 1, "ValidityMask: dimensions must be positive");
    bits.assign(static_cast<std::size_t>(h) * w, value ? 1 : 0);
  }

  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
  bool at(int y, int x) const { return bits[idx(y, x)] != 0; }
  void set(int y, int x, bool value) { bits[idx(y, x)] = value ? 1 : 0; }
  bool all_valid() const {
    return std::all_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
  }
  std::size_t count_valid() const {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
  }
};

enum class ChannelKind { HighRes, LowRes, Lost };

// Per-frame channel state. scale is meaningful only for LowRes and is the
// integer downsampling factor s >= 2.
struct ChannelEvent {
  ChannelKind kind = ChannelKind::HighRes;
  int scale = 0;
};

inline ChannelEvent high_res_event() { return {ChannelKind::HighRes, 0}; }
inline ChannelEvent low_res_event(int scale) {
  require(scale >= 2, "ChannelEvent: LowRes scale must be >= 2");
  return {ChannelKind::LowRes, scale};
}
inline ChannelEvent lost_event() { return {ChannelKind::Lost, 0}; }

// Exactly three reference frames, most recent last, with strictly increasing
// frame numbers. frames[2] is I0, frames[1] is I-1, frames[0] is I-2.
struct HistoryBuffer {
  std::array<Image, 3> frames;
  std::array<long, 3> indices{0, 1, 2};

  void validate() const {
    for (const Image& f : frames)
      require(f.height >= 1 && f.width >= 1, "HistoryBuffer: empty frame");
    require(frames[0].same_shape(frames[1]) && frames[1].same_shape(frames[2]),
            "HistoryBuffer: frames must share dimensions");
    require(indices[0] < indices[1] && indices[1] < indices[2],
            "HistoryBuffer: frame numbers must be strictly increasing");
  }
};

inline FlowField make_flow_constant(int height, int width, double du, double dv) {
  require(height >= 1 && width >= 1, "make_flow_constant: dimensions must be positive");
  return FlowField(height, width, du, dv);
}

// Mean end-point error: mean over pixels of the Euclidean norm of the
// per-pixel flow difference.
inline double epe(const FlowField& a, const FlowField& b) {
  require(a.same_shape(b), "epe: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::hypot(a.u[i] - b.u[i], a.v[i] - b.v[i]);
  return sum / static_cast<double>(a.size());
}

// EPE restricted to pixels the mask marks valid. Returns 0 when no pixel is
// valid.
inline double epe_where(const FlowField& a, const FlowField& b, const ValidityMask& valid) {
  require(a.same_shape(b), "epe_where: dimension mismatch");
  require(valid.height == a.height && valid.width == a.width, "epe_where: mask dimension mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!valid.bits[i]) continue;
    sum += std::hypot(a.u[i] - b.u[i], a.v[i] - b.v[i]);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// ITU-R BT.601 luma; single-channel images pass through.
inline std::vector<double> luma(const Image& img) {
  std::vector<double> out(static_cast<std::size_t>(img.height) * img.width);
  if (img.channels == 1) {
    out = img.data;
  } else {
    for (std::size_t i = 0, p = 0; i < out.size(); ++i, p += 3)
      out[i] = 0.299 * img.data[p] + 0.587 * img.data[p + 1] + 0.114 * img.data[p + 2];
  }
  return out;
}

}  // namespace framecast
