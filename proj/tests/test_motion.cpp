#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "framecast/motion.hpp"
#include "framecast/simulator.hpp"
#include "oracles.hpp"

using namespace framecast;

namespace {

// checkerboard with 4x4 cells, content shifted right/down by (sx, sy)
Image checkerboard(int h, int w, int sx, int sy) {
  Image img(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int cx = ((x - sx) % 8 + 8) % 8 / 4;
      const int cy = ((y - sy) % 8 + 8) % 8 / 4;
      img.at(y, x) = (cx + cy) % 2 ? 0.85 : 0.15;
    }
  return img;
}

}  // namespace

TEST_CASE("propagate evaluates the quadratic model") {
  // uniform velocity (1,0): F(0->-1) = (-1,0), F(0->-2) = (-2,0)
  const FlowField f1 = make_flow_constant(4, 4, -1.0, 0.0);
  const FlowField f2 = make_flow_constant(4, 4, -2.0, 0.0);
  const FlowField got = propagate(f1, f2, 1.0);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got.u[i] == 1.0);
    CHECK(got.v[i] == 0.0);
  }

  // velocity (1,0), acceleration (2,0): F(0->-1) = (0,0), F(0->-2) = (2,0);
  // the true flow to t=1 is v + a/2 = (2,0)
  const FlowField g1 = make_flow_constant(4, 4, 0.0, 0.0);
  const FlowField g2 = make_flow_constant(4, 4, 2.0, 0.0);
  const FlowField got2 = propagate(g1, g2, 1.0);
  for (std::size_t i = 0; i < got2.size(); ++i) CHECK(got2.u[i] == 2.0);

  std::mt19937_64 rng(11);
  const FlowField a = oracles::random_flow(rng, 5, 6, 4.0);
  const FlowField b = oracles::random_flow(rng, 5, 6, 4.0);
  const FlowField zero = propagate(a, b, 0.0);
  for (std::size_t i = 0; i < zero.size(); ++i) {
    CHECK(zero.u[i] == 0.0);
    CHECK(zero.v[i] == 0.0);
  }

  CHECK_THROWS_AS(propagate(a, make_flow_constant(9, 9, 0, 0), 1.0), std::invalid_argument);
}

TEST_CASE("propagate at t=1 is exactly F(0->-2) - 3 F(0->-1) on integer fields") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> d(-20, 20);
  FlowField f1(6, 7), f2(6, 7);
  for (std::size_t i = 0; i < f1.size(); ++i) {
    f1.u[i] = d(rng);
    f1.v[i] = d(rng);
    f2.u[i] = d(rng);
    f2.v[i] = d(rng);
  }
  const FlowField got = propagate(f1, f2, 1.0);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got.u[i] == f2.u[i] - 3.0 * f1.u[i]);
    CHECK(got.v[i] == f2.v[i] - 3.0 * f1.v[i]);
  }
}

TEST_CASE("propagate is exactly linear under power-of-two scaling") {
  std::mt19937_64 rng(13);
  const FlowField a = oracles::random_flow(rng, 6, 6, 3.0);
  const FlowField b = oracles::random_flow(rng, 6, 6, 3.0);
  for (double alpha : {0.5, 2.0, 8.0}) {
    FlowField sa = a, sb = b;
    for (std::size_t i = 0; i < sa.size(); ++i) {
      sa.u[i] *= alpha;
      sa.v[i] *= alpha;
      sb.u[i] *= alpha;
      sb.v[i] *= alpha;
    }
    const FlowField lhs = propagate(sa, sb, 1.7);
    FlowField rhs = propagate(a, b, 1.7);
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      rhs.u[i] *= alpha;
      rhs.v[i] *= alpha;
    }
    CHECK(lhs.u == rhs.u);
    CHECK(lhs.v == rhs.v);
  }
}

TEST_CASE("warp_predict on constant fields") {
  const FlowField fwd = make_flow_constant(5, 6, 1.0, 0.0);   // F(-1->0)
  const FlowField back = make_flow_constant(5, 6, -1.0, 0.0); // F(0->-1)

  for (double t : {1.0, 0.5}) {
    const auto [flow, valid] = warp_predict(fwd, back, t);
    for (int y = 0; y < 5; ++y) {
      CHECK_FALSE(valid.at(y, 0));  // samples at x = -1
      for (int x = 1; x < 6; ++x) {
        CHECK(valid.at(y, x));
        CHECK(flow.u_at(y, x) == 1.0 * t);
        CHECK(flow.v_at(y, x) == 0.0);
      }
    }
  }

  const auto [zero, valid] = warp_predict(fwd, back, 0.0);
  for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero.u[i] == 0.0);
}

TEST_CASE("warp_predict and propagate agree for uniform velocity") {
  // velocity (1.5, -0.5): all constant fields
  const FlowField f_m1_0 = make_flow_constant(8, 8, 1.5, -0.5);
  const FlowField f_0_m1 = make_flow_constant(8, 8, -1.5, 0.5);
  const FlowField f_0_m2 = make_flow_constant(8, 8, -3.0, 1.0);
  const auto [warped, valid] = warp_predict(f_m1_0, f_0_m1, 1.0);
  const FlowField propagated = propagate(f_0_m1, f_0_m2, 1.0);
  CHECK(epe_where(warped, propagated, valid) <= 1e-4);
}

TEST_CASE("propagate beats warping under uniform acceleration") {
  // v = (2, 1), a = (1, 0.5): F(0->m) = -v m ... evaluated analytically
  const double vx = 2.0, vy = 1.0, ax = 1.0, ay = 0.5;
  auto flow_to = [&](double m) {
    return make_flow_constant(8, 8, vx * m + 0.5 * ax * m * m, vy * m + 0.5 * ay * m * m);
  };
  const FlowField truth = flow_to(1.0);
  const FlowField f_0_m1 = flow_to(-1.0);
  const FlowField f_0_m2 = flow_to(-2.0);
  FlowField f_m1_0(8, 8);
  {
    // F(-1->0) = offset(0) - offset(-1) = v - a/2
    const FlowField tmp = flow_to(-1.0);
    for (std::size_t i = 0; i < tmp.size(); ++i) {
      f_m1_0.u[i] = -tmp.u[i];
      f_m1_0.v[i] = -tmp.v[i];
    }
  }
  const auto [warped, valid] = warp_predict(f_m1_0, f_0_m1, 1.0);
  const FlowField propagated = propagate(f_0_m1, f_0_m2, 1.0);
  CHECK(epe_where(propagated, truth, valid) < epe_where(warped, truth, valid));
  CHECK(epe(propagated, truth) <= 1e-9);
}

TEST_CASE("block matching: identical frames give zero flow") {
  SceneSpec spec;
  spec.kind = SceneKind::Static;
  spec.height = 40;
  spec.width = 48;
  spec.texture_seed = 21;
  const Image img = render_scene_frame(spec, 0);
  const FlowField flow = block_match_estimate(img, img);
  CHECK(epe(flow, make_flow_constant(40, 48, 0, 0)) <= 0.01);

  // self-match sanity holds for arbitrary content, not only smooth scenes
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 3; ++trial) {
    const Image noisy = oracles::random_image(rng, 24, 31, 3);
    const FlowField f = block_match_estimate(noisy, noisy);
    CHECK(epe(f, make_flow_constant(24, 31, 0, 0)) <= 0.01);
  }
}

TEST_CASE("block matching recovers a checkerboard translation") {
  const Image a = checkerboard(40, 48, 0, 0);
  const Image b = checkerboard(40, 48, 2, 0);
  BlockMatchConfig cfg;
  // full-resolution search: pyramid halving aliases the 8 px period
  cfg.levels = 1;
  cfg.radius = 2;
  const FlowField flow = block_match_estimate(a, b, cfg);
  const FlowField truth = make_flow_constant(40, 48, 2.0, 0.0);
  double err = 0.0;
  int n = 0;
  for (int y = 8; y < 32; ++y)
    for (int x = 8; x < 40; ++x) {
      err += std::hypot(flow.u_at(y, x) - truth.u_at(y, x), flow.v_at(y, x) - truth.v_at(y, x));
      ++n;
    }
  CHECK(err / n < 0.5);
}

TEST_CASE("block matching recovers a textured sprite motion") {
  std::mt19937_64 rng(14);
  Image a(48, 48, 1, 0.05);
  Image b(48, 48, 1, 0.05);
  std::uniform_real_distribution<double> d(0.3, 1.0);
  Image sprite(16, 16, 1);
  for (double& v : sprite.data) v = d(rng);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      a.at(16 + y, 16 + x) = sprite.at(y, x);
      b.at(17 + y, 19 + x) = sprite.at(y, x);  // moved by (3, 1)
    }
  BlockMatchConfig cfg;
  cfg.levels = 1;
  cfg.radius = 4;
  const FlowField flow = block_match_estimate(a, b, cfg);
  double err = 0.0;
  int n = 0;
  for (int y = 20; y < 28; ++y)
    for (int x = 20; x < 28; ++x) {
      err += std::hypot(flow.u_at(y, x) - 3.0, flow.v_at(y, x) - 1.0);
      ++n;
    }
  CHECK(err / n < 0.5);
}

TEST_CASE("block matching is deterministic and validates input") {
  SceneSpec spec;
  spec.texture_seed = 5;
  spec.height = 32;
  spec.width = 32;
  const Image a = render_scene_frame(spec, 0);
  const Image b = render_scene_frame(spec, 1);
  const FlowField f1 = block_match_estimate(a, b);
  const FlowField f2 = block_match_estimate(a, b);
  CHECK(f1.u == f2.u);
  CHECK(f1.v == f2.v);

  CHECK_THROWS_AS(block_match_estimate(a, Image(16, 16, 3)), std::invalid_argument);
  BlockMatchConfig bad;
  bad.block = 8;
  CHECK_THROWS_AS(block_match_estimate(a, b, bad), std::invalid_argument);
}

TEST_CASE("estimate_lossy: static scene, translation, degradation monotonicity") {
  SceneSpec spec;
  spec.kind = SceneKind::Translate;
  spec.vx = 2.0;
  spec.vy = 0.0;
  spec.height = 64;
  spec.width = 64;
  spec.texture_seed = 33;
  const Image i0 = render_scene_frame(spec, 0);
  const Image i1 = render_scene_frame(spec, 1);
  const BlockMatchEstimator estimator;

  // static: the LR frame is a degraded copy of i0 itself
  const FlowField st = estimate_lossy(i0, degrade(i0, 2), 2, estimator);
  CHECK(epe(st, make_flow_constant(64, 64, 0, 0)) <= 0.25);

  // small translation at s = 2
  const FlowField tr = estimate_lossy(i0, degrade(i1, 2), 2, estimator);
  const FlowField truth = make_flow_constant(64, 64, 2.0, 0.0);
  double err = 0.0;
  int n = 0;
  for (int y = 8; y < 56; ++y)
    for (int x = 8; x < 56; ++x) {
      err += std::hypot(tr.u_at(y, x) - truth.u_at(y, x), tr.v_at(y, x) - truth.v_at(y, x));
      ++n;
    }
  CHECK(err / n < 1.0);

  // once the LR frame is tiny the estimate degrades
  const FlowField coarse = estimate_lossy(i0, degrade(i1, 8), 8, estimator);
  CHECK(epe(coarse, truth) > epe(tr, truth));

  CHECK_THROWS_AS(estimate_lossy(i0, degrade(i1, 4), 2, estimator), std::invalid_argument);
}
