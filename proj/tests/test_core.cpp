#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "framecast/core.hpp"
#include "oracles.hpp"

using namespace framecast;

TEST_CASE("make_flow_constant fills every pixel") {
  const FlowField zero = make_flow_constant(2, 2, 0.0, 0.0);
  for (std::size_t i = 0; i < zero.size(); ++i) {
    CHECK(zero.u[i] == 0.0);
    CHECK(zero.v[i] == 0.0);
  }

  const FlowField f = make_flow_constant(4, 4, 1.5, -2.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(f.u[i] == 1.5);
    CHECK(f.v[i] == -2.0);
  }

  const FlowField g = make_flow_constant(1, 3, 7.0, 7.0);
  REQUIRE(g.size() == 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.u[i] == 7.0);
    CHECK(g.v[i] == 7.0);
  }

  CHECK_THROWS_AS(make_flow_constant(0, 4, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_flow_constant(4, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("epe on hand-computed fields") {
  const FlowField a = make_flow_constant(3, 5, 0.4, -1.2);
  CHECK(epe(a, a) == 0.0);

  // per-pixel difference (3,4), a 3-4-5 triangle
  const FlowField b = make_flow_constant(4, 4, 4.0, 4.0);
  const FlowField c = make_flow_constant(4, 4, 1.0, 0.0);
  CHECK_THAT(epe(b, c), Catch::Matchers::WithinAbs(5.0, 1e-12));

  // half the pixels differ by (2,0): mean of {2, 0} = 1
  FlowField d = make_flow_constant(2, 2, 0.0, 0.0);
  FlowField e = make_flow_constant(2, 2, 0.0, 0.0);
  e.u_at(0, 0) = 2.0;
  e.u_at(1, 1) = 2.0;
  CHECK_THAT(epe(d, e), Catch::Matchers::WithinAbs(1.0, 1e-12));

  CHECK_THROWS_AS(epe(a, b), std::invalid_argument);
}

TEST_CASE("epe is symmetric and satisfies the triangle inequality") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const FlowField a = oracles::random_flow(rng, 7, 9, 5.0);
    const FlowField b = oracles::random_flow(rng, 7, 9, 5.0);
    const FlowField c = oracles::random_flow(rng, 7, 9, 5.0);
    CHECK(epe(a, b) == epe(b, a));
    CHECK(epe(a, c) <= epe(a, b) + epe(b, c) + 1e-12);
    CHECK(epe(a, b) >= 0.0);
  }
}

TEST_CASE("epe_where restricts to the mask") {
  FlowField a = make_flow_constant(2, 2, 0.0, 0.0);
  FlowField b = make_flow_constant(2, 2, 0.0, 0.0);
  b.u_at(0, 0) = 8.0;
  ValidityMask m(2, 2, true);
  m.set(0, 0, false);
  CHECK(epe_where(a, b, m) == 0.0);
  CHECK(epe(a, b) > 0.0);
}

TEST_CASE("type invariants are enforced") {
  CHECK_THROWS_AS(Image(4, 4, 2), std::invalid_argument);
  CHECK_THROWS_AS(Image(0, 4, 1), std::invalid_argument);
  const Image img(3, 5, 3, 0.25);
  CHECK(img.data.size() == 3u * 5u * 3u);

  HistoryBuffer hist;
  hist.frames = {Image(4, 4, 3), Image(4, 4, 3), Image(4, 4, 3)};
  hist.indices = {0, 1, 2};
  CHECK_NOTHROW(hist.validate());
  hist.indices = {0, 2, 2};
  CHECK_THROWS_AS(hist.validate(), std::invalid_argument);
  hist.indices = {0, 1, 2};
  hist.frames[1] = Image(4, 5, 3);
  CHECK_THROWS_AS(hist.validate(), std::invalid_argument);
}

TEST_CASE("luma uses BT.601 weights") {
  Image img(1, 1, 3);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 0, 1) = 0.5;
  img.at(0, 0, 2) = 0.25;
  const auto l = luma(img);
  CHECK_THAT(l[0], Catch::Matchers::WithinAbs(0.299 + 0.587 * 0.5 + 0.114 * 0.25, 1e-12));
}

TEST_CASE("channel events validate their scale") {
  CHECK_THROWS_AS(low_res_event(1), std::invalid_argument);
  CHECK(low_res_event(4).scale == 4);
  CHECK(high_res_event().kind == ChannelKind::HighRes);
  CHECK(lost_event().kind == ChannelKind::Lost);
}
