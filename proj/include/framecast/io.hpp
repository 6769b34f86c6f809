#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "framecast/core.hpp"

namespace framecast {

// One ChannelEvent per frame of a sequence. The first three events must be
// HighRes so a history can be bootstrapped.
struct ChannelTrace {
  std::vector<ChannelEvent> events;
};

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void put_le32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_le32(const std::string& s, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[off])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 3])) << 24);
}

// Parses PPM header fields: skips whitespace and '#' comments, then reads a
// decimal integer. Throws with the current byte offset on malformed input.
struct PnmCursor {
  const std::string& bytes;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("ppm parse error at byte " + std::to_string(pos) + ": " + what);
  }
  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        return;
      }
    }
  }
  int read_int() {
    skip_space_and_comments();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') fail("expected integer");
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1000000) fail("integer out of range");
      ++pos;
    }
    return static_cast<int>(v);
  }
};

inline int quantize8(double v) {
  const double x = std::floor(clamp01(v) * 255.0 + 0.5);
  return static_cast<int>(x);
}

}  // namespace detail

// Binary PPM/PGM with maxval 255: P6 for 3-channel, P5 for 1-channel.
inline Image parse_ppm(const std::string& bytes) {
  detail::PnmCursor cur{bytes};
  if (bytes.size() < 2) cur.fail("missing magic");
  int channels = 0;
  if (bytes[0] == 'P' && bytes[1] == '6') channels = 3;
  else if (bytes[0] == 'P' && bytes[1] == '5') channels = 1;
  else cur.fail("magic is not P5 or P6");
  cur.pos = 2;
  const int width = cur.read_int();
  const int height = cur.read_int();
  const int maxval = cur.read_int();
  if (width < 1 || height < 1) cur.fail("dimensions must be positive");
  if (maxval != 255) cur.fail("maxval must be 255, got " + std::to_string(maxval));
  if (cur.pos >= bytes.size()) cur.fail("missing raster separator");
  const char sep = bytes[cur.pos];
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') cur.fail("missing raster separator");
  ++cur.pos;
  const std::size_t need =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (bytes.size() - cur.pos < need)
    cur.fail("truncated raster: need " + std::to_string(need) + " bytes, have " +
             std::to_string(bytes.size() - cur.pos));
  if (bytes.size() - cur.pos > need) {
    cur.pos += need;
    cur.fail("trailing bytes after raster");
  }
  Image img(height, width, channels);
  for (std::size_t i = 0; i < need; ++i)
    img.data[i] = static_cast<unsigned char>(bytes[cur.pos + i]) / 255.0;
  return img;
}

inline Image read_ppm(const std::string& path) { return parse_ppm(detail::read_file_bytes(path)); }

// Canonical header: "P6\n<w> <h>\n255\n". Intensities quantize by
// round-half-away-from-zero on the [0,255] scale.
inline std::string ppm_bytes(const Image& img) {
  require(img.channels == 1 || img.channels == 3, "write_ppm: channels must be 1 or 3");
  require(img.height >= 1 && img.width >= 1, "write_ppm: empty image");
  std::string out;
  out += img.channels == 3 ? "P6\n" : "P5\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.size());
  for (double v : img.data) out.push_back(static_cast<char>(detail::quantize8(v)));
  return out;
}

inline void write_ppm(const Image& img, const std::string& path) {
  detail::write_file_bytes(path, ppm_bytes(img));
}

// Middlebury .flo: little-endian float 202021.25, int32 width, int32 height,
// then row-major interleaved (u, v) float32 pairs.
inline FlowField parse_flo(const std::string& bytes) {
  auto fail = [&](std::size_t off, const std::string& what) -> void {
    throw ParseError("flo parse error at byte " + std::to_string(off) + ": " + what);
  };
  if (bytes.size() < 12) fail(bytes.size(), "file shorter than 12-byte header");
  const float magic = std::bit_cast<float>(detail::get_le32(bytes, 0));
  if (magic != 202021.25f) fail(0, "bad magic number");
  const std::int32_t w = static_cast<std::int32_t>(detail::get_le32(bytes, 4));
  const std::int32_t h = static_cast<std::int32_t>(detail::get_le32(bytes, 8));
  if (w < 1 || h < 1 || w > 1000000 || h > 1000000) fail(4, "implausible dimensions");
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 8;
  if (bytes.size() - 12 != need)
    fail(12, "payload size mismatch: need " + std::to_string(need) + " bytes, have " +
                 std::to_string(bytes.size() - 12));
  FlowField flow(h, w);
  std::size_t off = 12;
  for (std::size_t i = 0; i < flow.size(); ++i, off += 8) {
    flow.u[i] = std::bit_cast<float>(detail::get_le32(bytes, off));
    flow.v[i] = std::bit_cast<float>(detail::get_le32(bytes, off + 4));
  }
  return flow;
}

inline FlowField read_flo(const std::string& path) {
  return parse_flo(detail::read_file_bytes(path));
}

inline std::string flo_bytes(const FlowField& flow) {
  require(flow.height >= 1 && flow.width >= 1, "write_flo: empty field");
  std::string out;
  out.reserve(12 + flow.size() * 8);
  detail::put_le32(out, std::bit_cast<std::uint32_t>(202021.25f));
  detail::put_le32(out, static_cast<std::uint32_t>(flow.width));
  detail::put_le32(out, static_cast<std::uint32_t>(flow.height));
  for (std::size_t i = 0; i < flow.size(); ++i) {
    detail::put_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.u[i])));
    detail::put_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.v[i])));
  }
  return out;
}

inline void write_flo(const FlowField& flow, const std::string& path) {
  detail::write_file_bytes(path, flo_bytes(flow));
}

// Trace text: whitespace-separated tokens, one per frame. `H` high-res,
// `L<s>` low-res at integer scale s >= 2, `X` lost; `#` starts a line
// comment. Errors name the 1-based token index.
inline ChannelTrace parse_trace(const std::string& text) {
  ChannelTrace trace;
  std::istringstream lines(text);
  std::string line;
  std::size_t index = 0;
  while (std::getline(lines, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      ++index;
      auto fail = [&](const std::string& what) -> void {
        throw ParseError("trace parse error at token " + std::to_string(index) + " ('" + tok +
                         "'): " + what);
      };
      if (tok == "H") {
        trace.events.push_back(high_res_event());
      } else if (tok == "X") {
        trace.events.push_back(lost_event());
      } else if (tok[0] == 'L') {
        if (tok.size() == 1) fail("missing scale");
        long s = 0;
        for (std::size_t i = 1; i < tok.size(); ++i) {
          if (tok[i] < '0' || tok[i] > '9') fail("scale is not an integer");
          s = s * 10 + (tok[i] - '0');
          if (s > 1000000) fail("scale out of range");
        }
        if (s < 2) fail("scale must be >= 2");
        trace.events.push_back(low_res_event(static_cast<int>(s)));
      } else {
        fail("unknown token");
      }
    }
  }
  if (trace.events.empty()) throw ParseError("trace parse error: no events");
  if (trace.events.size() < 3 || trace.events[0].kind != ChannelKind::HighRes ||
      trace.events[1].kind != ChannelKind::HighRes || trace.events[2].kind != ChannelKind::HighRes)
    throw ParseError("trace parse error: first 3 events must be H to bootstrap the history");
  return trace;
}

inline std::string format_trace(const ChannelTrace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    if (i) out += ' ';
    switch (trace.events[i].kind) {
      case ChannelKind::HighRes: out += 'H'; break;
      case ChannelKind::Lost: out += 'X'; break;
      case ChannelKind::LowRes: out += 'L' + std::to_string(trace.events[i].scale); break;
    }
  }
  return out;
}

inline std::string channel_kind_name(ChannelKind k) {
  switch (k) {
    case ChannelKind::HighRes: return "highres";
    case ChannelKind::LowRes: return "lowres";
    default: return "lost";
  }
}

// Per-frame recovery metrics. epe is present only when ground-truth flow is
// known (synthetic scenes, recovered frames).
struct FrameRecord {
  long frame_index = 0;
  ChannelEvent event;
  double psnr = 0.0;
  double ssim = 0.0;
  double charbonnier = 0.0;
  std::optional<double> epe;
};

struct ReportAggregate {
  std::optional<double> psnr, ssim, charbonnier, epe;
};

struct RecoveryReport {
  std::vector<FrameRecord> per_frame;
  nlohmann::ordered_json config_echo;  // full run configuration

  // Arithmetic means of the per-frame metrics; epe averages the frames where
  // it is present. Empty report yields all-absent aggregates.
  ReportAggregate aggregate() const {
    ReportAggregate agg;
    if (per_frame.empty()) return agg;
    double p = 0, s = 0, c = 0, e = 0;
    std::size_t ne = 0;
    for (const FrameRecord& f : per_frame) {
      p += f.psnr;
      s += f.ssim;
      c += f.charbonnier;
      if (f.epe) {
        e += *f.epe;
        ++ne;
      }
    }
    const double n = static_cast<double>(per_frame.size());
    agg.psnr = p / n;
    agg.ssim = s / n;
    agg.charbonnier = c / n;
    if (ne > 0) agg.epe = e / static_cast<double>(ne);
    return agg;
  }
};

enum class ReportFormat { Json, Csv };

namespace detail {

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

inline std::string csv_number(double v) { return nlohmann::json(v).dump(); }

inline std::string csv_opt(const std::optional<double>& v) {
  return v ? csv_number(*v) : std::string();
}

}  // namespace detail

inline std::string report_to_json(const RecoveryReport& report) {
  nlohmann::ordered_json j;
  j["config"] = report.config_echo.is_null() ? nlohmann::ordered_json::object()
                                             : report.config_echo;
  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (const FrameRecord& f : report.per_frame) {
    nlohmann::ordered_json row;
    row["frame_index"] = f.frame_index;
    row["channel"] = channel_kind_name(f.event.kind);
    row["scale"] = f.event.kind == ChannelKind::LowRes ? nlohmann::ordered_json(f.event.scale)
                                                       : nlohmann::ordered_json(nullptr);
    row["psnr"] = f.psnr;
    row["ssim"] = f.ssim;
    row["charbonnier"] = f.charbonnier;
    row["epe"] = detail::opt_json(f.epe);
    frames.push_back(std::move(row));
  }
  j["frames"] = std::move(frames);
  const ReportAggregate agg = report.aggregate();
  nlohmann::ordered_json ja;
  ja["psnr"] = detail::opt_json(agg.psnr);
  ja["ssim"] = detail::opt_json(agg.ssim);
  ja["charbonnier"] = detail::opt_json(agg.charbonnier);
  ja["epe"] = detail::opt_json(agg.epe);
  j["aggregate"] = std::move(ja);
  return j.dump(2) + "\n";
}

inline std::string report_to_csv(const RecoveryReport& report) {
  std::string out = "# config " + (report.config_echo.is_null()
                                       ? std::string("{}")
                                       : report.config_echo.dump()) +
                    "\n";
  out += "frame_index,channel,scale,psnr,ssim,charbonnier,epe\n";
  for (const FrameRecord& f : report.per_frame) {
    out += std::to_string(f.frame_index) + "," + channel_kind_name(f.event.kind) + ",";
    if (f.event.kind == ChannelKind::LowRes) out += std::to_string(f.event.scale);
    out += "," + detail::csv_number(f.psnr) + "," + detail::csv_number(f.ssim) + "," +
           detail::csv_number(f.charbonnier) + "," + detail::csv_opt(f.epe) + "\n";
  }
  const ReportAggregate agg = report.aggregate();
  out += "aggregate,,," + detail::csv_opt(agg.psnr) + "," + detail::csv_opt(agg.ssim) + "," +
         detail::csv_opt(agg.charbonnier) + "," + detail::csv_opt(agg.epe) + "\n";
  return out;
}

// Deterministic serialization: the same report yields byte-identical output.
inline void write_report(const RecoveryReport& report, const std::string& path,
                         ReportFormat format) {
  detail::write_file_bytes(path,
                           format == ReportFormat::Json ? report_to_json(report)
                                                        : report_to_csv(report));
}

}  // namespace framecast
