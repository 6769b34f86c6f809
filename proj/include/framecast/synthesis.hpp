#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "framecast/core.hpp"
#include "framecast/fusion.hpp"
#include "framecast/motion.hpp"
#include "framecast/resample.hpp"

namespace framecast {

struct PipelineConfig {
  BlockMatchConfig estimator;
  ProjectionConfig projection;
  bool guided_correction = true;  // lossy only: low band follows the LR evidence
  double blur_sigma = 2.0;        // Gaussian width of the low-frequency band
  // candidate toggles, used by ablation experiments
  bool use_warped = true;
  bool use_propagated = true;
  bool use_estimated = true;
};

// Every intermediate of a recovery run. Fields for disabled candidates stay
// empty (0x0).
struct RecoveryDiagnostics {
  FlowField flow_0_to_m1;
  FlowField flow_0_to_m2;
  FlowField flow_m1_to_0;
  std::vector<FlowCandidate> candidates;
  FlowField fused;
  FlowField projected;  // backward flow before hole filling, zero at holes
  ValidityMask projection_valid;
  FlowField projected_filled;
  Image warped_frame;
  ValidityMask warp_valid;
  std::optional<Image> proxy;  // up-scaled LR observation, lossy only
};

// Peak signal-to-noise ratio on the [0,1] range, mean squared error taken
// over every pixel and channel. Capped at 99 dB so exact matches stay finite
// and reports stay diffable.
inline double psnr(const Image& a, const Image& b) {
  require(a.same_shape(b), "psnr: dimension mismatch");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

// Mean Charbonnier penalty sqrt(d^2 + eps^2) with eps = 1e-6 over all
// entries; identical images score eps.
inline double charbonnier(const Image& a, const Image& b) {
  require(a.same_shape(b), "charbonnier: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += detail::charbonnier_penalty(a.data[i] - b.data[i]);
  return sum / static_cast<double>(a.size());
}

// SSIM on luma with the standard 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range 1. Local statistics use edge
// replication so the map covers every pixel; the score is its mean.
inline double ssim(const Image& a, const Image& b) {
  require(a.same_shape(b), "ssim: dimension mismatch");
  const std::vector<double> la = luma(a);
  const std::vector<double> lb = luma(b);
  const int h = a.height;
  const int w = a.width;

  const int r = 5;
  std::array<double, 11> win{};
  double wsum = 0.0;
  for (int j = -r; j <= r; ++j) {
    win[static_cast<std::size_t>(j + r)] = std::exp(-(j * j) / (2.0 * 1.5 * 1.5));
    wsum += win[static_cast<std::size_t>(j + r)];
  }
  for (double& x : win) x /= wsum;

  auto smooth = [&](const std::vector<double>& src) {
    std::vector<double> tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int j = -r; j <= r; ++j)
          acc += win[static_cast<std::size_t>(j + r)] *
                 src[static_cast<std::size_t>(y) * w +
                     detail::resolve_index(x + j, w, BoundaryPolicy::Clamp)];
        tmp[static_cast<std::size_t>(y) * w + x] = acc;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int j = -r; j <= r; ++j)
          acc += win[static_cast<std::size_t>(j + r)] *
                 tmp[static_cast<std::size_t>(detail::resolve_index(y + j, h,
                                                                    BoundaryPolicy::Clamp)) *
                         w +
                     x];
        out[static_cast<std::size_t>(y) * w + x] = acc;
      }
    return out;
  };

  std::vector<double> aa(la.size()), bb(la.size()), ab(la.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    aa[i] = la[i] * la[i];
    bb[i] = lb[i] * lb[i];
    ab[i] = la[i] * lb[i];
  }
  const std::vector<double> mu_a = smooth(la);
  const std::vector<double> mu_b = smooth(lb);
  const std::vector<double> m_aa = smooth(aa);
  const std::vector<double> m_bb = smooth(bb);
  const std::vector<double> m_ab = smooth(ab);

  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const double va = m_aa[i] - mu_a[i] * mu_a[i];
    const double vb = m_bb[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    total += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(la.size());
}

namespace detail {

inline void validate_pipeline(const PipelineConfig& cfg, bool lossy) {
  require(cfg.blur_sigma > 0.0, "pipeline: blur_sigma must be positive");
  if (lossy)
    require(cfg.use_warped || cfg.use_propagated || cfg.use_estimated,
            "pipeline: all flow candidates disabled");
  else
    require(cfg.use_warped || cfg.use_propagated,
            "pipeline: lost case needs the warped or propagated candidate");
}

// Shared recovery pipeline. lr == nullptr selects the lost case.
inline std::pair<Image, RecoveryDiagnostics> recover(const HistoryBuffer& history, const Image* lr,
                                                     int s, double t, const PipelineConfig& cfg) {
  history.validate();
  require(t > 0.0, "recover: t must be positive");
  const bool lossy = lr != nullptr;
  validate_pipeline(cfg, lossy);

  const Image& i0 = history.frames[2];
  const Image& im1 = history.frames[1];
  const Image& im2 = history.frames[0];
  const BlockMatchEstimator estimator(cfg.estimator);

  RecoveryDiagnostics diag;
  if (cfg.use_warped || cfg.use_propagated) diag.flow_0_to_m1 = estimator.estimate(i0, im1);
  if (cfg.use_propagated) diag.flow_0_to_m2 = estimator.estimate(i0, im2);
  if (cfg.use_warped) diag.flow_m1_to_0 = estimator.estimate(im1, i0);

  if (cfg.use_warped) {
    auto [wf, wv] = warp_predict(diag.flow_m1_to_0, diag.flow_0_to_m1, t);
    diag.candidates.push_back({std::move(wf), std::move(wv), CandidateLabel::Warped});
  }
  if (cfg.use_propagated) {
    FlowField pf = propagate(diag.flow_0_to_m1, diag.flow_0_to_m2, t);
    diag.candidates.push_back(
        {std::move(pf), ValidityMask(i0.height, i0.width, true), CandidateLabel::Propagated});
  }
  if (lossy) {
    diag.proxy = upscale(*lr, i0.height, i0.width);
    if (cfg.use_estimated) {
      FlowField ef = estimate_lossy(i0, *lr, s, estimator);
      diag.candidates.push_back(
          {std::move(ef), ValidityMask(i0.height, i0.width, true), CandidateLabel::Estimated});
    }
  }

  diag.fused = fuse(diag.candidates, i0, lossy ? &*diag.proxy : nullptr);
  auto [projected, proj_valid] = project_flow(diag.fused, cfg.projection);
  diag.projected = projected;
  diag.projection_valid = proj_valid;
  diag.projected_filled = fill_holes(projected, proj_valid);
  auto [warped, warp_valid] = backward_warp(i0, diag.projected_filled);
  diag.warped_frame = warped;
  diag.warp_valid = warp_valid;

  Image out(i0.height, i0.width, i0.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const bool ok = lossy ? (warp_valid.at(y, x) && proj_valid.at(y, x)) : warp_valid.at(y, x);
      const Image& fallback = lossy ? *diag.proxy : i0;
      for (int c = 0; c < out.channels; ++c)
        out.at(y, x, c) = ok ? warped.at(y, x, c) : fallback.at(y, x, c);
    }

  if (lossy && cfg.guided_correction) {
    const Image low_proxy = gaussian_blur(*diag.proxy, cfg.blur_sigma);
    const Image low_out = gaussian_blur(out, cfg.blur_sigma);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.data[i] = out.data[i] + (low_proxy.data[i] - low_out.data[i]);
  }
  for (double& v : out.data) v = clamp01(v);
  return {std::move(out), std::move(diag)};
}

}  // namespace detail

// Lost case: predict the frame at time t (in history frame spacings after
// I0) from the three reference frames alone. Pixels whose final warp is
// invalid copy I0 at the same location.
inline std::pair<Image, RecoveryDiagnostics> predict_lost(const HistoryBuffer& history, double t,
                                                          const PipelineConfig& cfg = {}) {
  return detail::recover(history, nullptr, 0, t, cfg);
}

// Lossy case: enhance the received LR frame using the HR history. Projection
// holes and invalid warps take the up-scaled LR values; guided correction
// then replaces the low-frequency band with that of the LR evidence.
inline std::pair<Image, RecoveryDiagnostics> enhance_lossy(const HistoryBuffer& history,
                                                           const Image& lr, int s, double t,
                                                           const PipelineConfig& cfg = {}) {
  require(s >= 2, "enhance_lossy: scale must be >= 2");
  const Image& i0 = history.frames[2];
  require(lr.channels == i0.channels && lr.height == detail::ceil_div(i0.height, s) &&
              lr.width == detail::ceil_div(i0.width, s),
          "enhance_lossy: lr dimensions inconsistent with scale");
  return detail::recover(history, &lr, s, t, cfg);
}

}  // namespace framecast
