#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "framecast/io.hpp"
#include "oracles.hpp"

using namespace framecast;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("framecast_io_" + name)).string();
}

}  // namespace

TEST_CASE("ppm: 1x1 white pixel round trip") {
  const std::string bytes = std::string("P6\n1 1\n255\n") + "\xff\xff\xff";
  const Image img = parse_ppm(bytes);
  REQUIRE(img.width == 1);
  REQUIRE(img.height == 1);
  REQUIRE(img.channels == 3);
  CHECK(img.at(0, 0, 0) == 1.0);
  CHECK(img.at(0, 0, 1) == 1.0);
  CHECK(img.at(0, 0, 2) == 1.0);
  CHECK(ppm_bytes(img) == bytes);
}

TEST_CASE("ppm: write-then-read identity on canonical files") {
  std::mt19937_64 rng(7);
  const Image img = oracles::random_image(rng, 9, 13, 3);
  const std::string path = temp_path("roundtrip.ppm");
  write_ppm(img, path);
  const Image back = read_ppm(path);
  const std::string bytes1 = ppm_bytes(back);
  write_ppm(back, path);
  const Image back2 = read_ppm(path);
  CHECK(back2.data == back.data);
  CHECK(ppm_bytes(back2) == bytes1);
  std::remove(path.c_str());

  // quantization is round-half-away-from-zero on the 0..255 scale
  Image q(1, 1, 1);
  q.at(0, 0) = 128.5 / 255.0;
  CHECK(ppm_bytes(q).back() == static_cast<char>(129));
}

TEST_CASE("ppm: malformed inputs are rejected with diagnostics") {
  // truncated raster: P6 2x2 needs 12 bytes, give 11
  std::string truncated = "P6\n2 2\n255\n";
  truncated += std::string(11, '\0');
  CHECK_THROWS_AS(parse_ppm(truncated), ParseError);
  CHECK_THROWS_WITH(parse_ppm(truncated), Catch::Matchers::ContainsSubstring("truncated"));

  CHECK_THROWS_AS(parse_ppm("P4\n1 1\n255\n x"), ParseError);
  CHECK_THROWS_AS(parse_ppm(std::string("P6\n1 1\n254\n") + "abc"), ParseError);
  CHECK_THROWS_AS(parse_ppm("P6\n1"), ParseError);
  CHECK_THROWS_AS(parse_ppm(""), ParseError);
  const std::string trailing = std::string("P6\n1 1\n255\n") + "abc" + "junk";
  CHECK_THROWS_WITH(parse_ppm(trailing), Catch::Matchers::ContainsSubstring("trailing"));

  // comments inside the header are legal
  const std::string commented = std::string("P5\n# a comment\n2 1\n255\n") + "ab";
  const Image img = parse_ppm(commented);
  CHECK(img.width == 2);
  CHECK(img.channels == 1);
}

TEST_CASE("flo: layout and exact round trip") {
  FlowField f(1, 1);
  f.u_at(0, 0) = 3.0;
  f.v_at(0, 0) = -2.0;
  const std::string bytes = flo_bytes(f);
  REQUIRE(bytes.size() == 20);  // 12-byte header + one (u, v) float pair

  const FlowField back = parse_flo(bytes);
  CHECK(back.u_at(0, 0) == 3.0);
  CHECK(back.v_at(0, 0) == -2.0);

  std::mt19937_64 rng(3);
  FlowField big = oracles::random_flow(rng, 2, 2, 30.0);
  // float-representable values round-trip bit exactly
  for (std::size_t i = 0; i < big.size(); ++i) {
    big.u[i] = static_cast<float>(big.u[i]);
    big.v[i] = static_cast<float>(big.v[i]);
  }
  const std::string path = temp_path("roundtrip.flo");
  write_flo(big, path);
  const FlowField rt = read_flo(path);
  CHECK(rt.u == big.u);
  CHECK(rt.v == big.v);
  CHECK(flo_bytes(rt) == flo_bytes(big));
  std::remove(path.c_str());
}

TEST_CASE("flo: malformed inputs are rejected") {
  FlowField f(2, 3);
  std::string good = flo_bytes(f);

  std::string bad_magic = good;
  const float wrong = 202021.0f;
  const auto w = std::bit_cast<std::uint32_t>(wrong);
  bad_magic[0] = static_cast<char>(w & 0xFF);
  bad_magic[1] = static_cast<char>((w >> 8) & 0xFF);
  bad_magic[2] = static_cast<char>((w >> 16) & 0xFF);
  bad_magic[3] = static_cast<char>((w >> 24) & 0xFF);
  CHECK_THROWS_AS(parse_flo(bad_magic), ParseError);

  CHECK_THROWS_AS(parse_flo(good.substr(0, good.size() - 4)), ParseError);
  CHECK_THROWS_AS(parse_flo(good.substr(0, 8)), ParseError);
  CHECK_THROWS_AS(parse_flo(good + "xx"), ParseError);
}

TEST_CASE("trace parsing") {
  const ChannelTrace t = parse_trace("H H H L4 X H");
  REQUIRE(t.events.size() == 6);
  CHECK(t.events[0].kind == ChannelKind::HighRes);
  CHECK(t.events[3].kind == ChannelKind::LowRes);
  CHECK(t.events[3].scale == 4);
  CHECK(t.events[4].kind == ChannelKind::Lost);
  CHECK(format_trace(t) == "H H H L4 X H");

  // comments and newlines
  const ChannelTrace c = parse_trace("H H H # bootstrap\nL2 X\n");
  CHECK(c.events.size() == 5);

  CHECK_THROWS_AS(parse_trace("H H H L1"), ParseError);
  CHECK_THROWS_AS(parse_trace("H H X X"), ParseError);
  CHECK_THROWS_AS(parse_trace("H H"), ParseError);
  CHECK_THROWS_AS(parse_trace(""), ParseError);
  CHECK_THROWS_AS(parse_trace("H H H L4.5"), ParseError);
  CHECK_THROWS_AS(parse_trace("H H H L"), ParseError);
  CHECK_THROWS_WITH(parse_trace("H H H Q"), Catch::Matchers::ContainsSubstring("token 4"));
}

TEST_CASE("report serialization is deterministic and handles absent epe") {
  RecoveryReport report;
  report.config_echo = {{"seed", 7}, {"gap", 1}};
  FrameRecord a;
  a.frame_index = 3;
  a.event = low_res_event(4);
  a.psnr = 30.0;
  a.ssim = 0.9;
  a.charbonnier = 0.01;
  a.epe = 0.5;
  FrameRecord b;
  b.frame_index = 4;
  b.event = lost_event();
  b.psnr = 28.0;
  b.ssim = 0.8;
  b.charbonnier = 0.02;
  report.per_frame = {a, b};

  const std::string j1 = report_to_json(report);
  const std::string j2 = report_to_json(report);
  CHECK(j1 == j2);
  CHECK_THAT(j1, Catch::Matchers::ContainsSubstring("\"epe\": null"));
  CHECK_THAT(j1, Catch::Matchers::ContainsSubstring("\"scale\": 4"));

  const std::string c1 = report_to_csv(report);
  CHECK(c1 == report_to_csv(report));
  CHECK_THAT(c1, Catch::Matchers::ContainsSubstring("frame_index,channel,scale,psnr,ssim,charbonnier,epe"));
  CHECK_THAT(c1, Catch::Matchers::ContainsSubstring("4,lost,,28.0,0.8,0.02,\n"));

  // aggregate equals the arithmetic means; epe averages present values only
  const ReportAggregate agg = report.aggregate();
  CHECK_THAT(*agg.psnr, Catch::Matchers::WithinAbs(29.0, 1e-12));
  CHECK_THAT(*agg.ssim, Catch::Matchers::WithinAbs(0.85, 1e-12));
  CHECK_THAT(*agg.charbonnier, Catch::Matchers::WithinAbs(0.015, 1e-12));
  CHECK_THAT(*agg.epe, Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("report with empty frame list still serializes") {
  RecoveryReport report;
  report.config_echo = {{"seed", 0}};
  const std::string j = report_to_json(report);
  CHECK_THAT(j, Catch::Matchers::ContainsSubstring("\"frames\": []"));
  CHECK_THAT(j, Catch::Matchers::ContainsSubstring("\"aggregate\""));
  const std::string c = report_to_csv(report);
  CHECK_THAT(c, Catch::Matchers::ContainsSubstring("aggregate,,,,,,\n"));

  const std::string path = temp_path("empty.json");
  write_report(report, path, ReportFormat::Json);
  CHECK(detail::read_file_bytes(path) == j);
  std::remove(path.c_str());
}

TEST_CASE("write_report fails loudly on unwritable paths") {
  RecoveryReport report;
  CHECK_THROWS_AS(write_report(report, "/nonexistent_dir_zz/x.json", ReportFormat::Json),
                  std::runtime_error);
}

TEST_CASE("parsers survive mutated and random inputs") {
  std::mt19937_64 rng(99);
  FlowField flow(3, 4);
  const std::string flo = flo_bytes(flow);
  const std::string ppm = ppm_bytes(Image(4, 5, 3, 0.5));
  const std::string trace = "H H H L4 X H";

  auto mutate = [&](std::string s) {
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) {
      switch (rng() % 3) {
        case 0:
          if (!s.empty()) s[rng() % s.size()] = static_cast<char>(rng());
          break;
        case 1:
          if (!s.empty()) s.resize(rng() % s.size());
          break;
        default: s.push_back(static_cast<char>(rng())); break;
      }
    }
    return s;
  };

  for (int i = 0; i < 3000; ++i) {
    // either a mutated valid file or pure noise; parsers must throw or
    // return a well-formed value, never crash
    std::string bytes;
    if (i % 4 == 3) {
      bytes.resize(rng() % 64);
      for (char& c : bytes) c = static_cast<char>(rng());
    } else {
      bytes = mutate(i % 4 == 0 ? flo : (i % 4 == 1 ? ppm : trace));
    }
    try {
      const FlowField f = parse_flo(bytes);
      CHECK(f.size() == static_cast<std::size_t>(f.height) * f.width);
    } catch (const std::exception&) {
    }
    try {
      const Image img = parse_ppm(bytes);
      CHECK(img.size() == static_cast<std::size_t>(img.height) * img.width * img.channels);
    } catch (const std::exception&) {
    }
    try {
      const ChannelTrace t = parse_trace(bytes);
      CHECK(t.events.size() >= 3);
    } catch (const std::exception&) {
    }
  }
}
