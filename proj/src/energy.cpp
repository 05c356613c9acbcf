#include "biflow/energy.hpp"

#include <algorithm>
#include <cmath>

namespace biflow {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_pair_dims(const Image& i1, const Image& i2, const FlowField& wf,
                       const FlowField& wb) {
  require(i1.width == i2.width && i1.height == i2.height &&
              i1.channels == i2.channels,
          "energy: frame shapes differ");
  require(wf.width == i1.width && wf.height == i1.height &&
              wb.width == i1.width && wb.height == i1.height,
          "energy: flow and image dimensions differ");
  require(i1.width > 0 && i1.height > 0, "energy: empty inputs");
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

void validate(const LossConfig& cfg) {
  require(cfg.alpha1 >= 0.0 && cfg.alpha2 >= 0.0,
          "LossConfig: alpha1/alpha2 must be non-negative");
  require(cfg.gamma > 0.0 && cfg.gamma <= 1.0,
          "LossConfig: gamma must lie in (0,1]");
  require(cfg.charbonnier_eps > 0.0, "LossConfig: charbonnier_eps must be positive");
  require(cfg.lambda_p >= 0.0 && cfg.lambda_s >= 0.0 && cfg.lambda_c >= 0.0,
          "LossConfig: weights must be non-negative");
  require(cfg.patch_radius >= 1 && cfg.patch_radius <= 3,
          "LossConfig: patch_radius must be 1, 2 or 3");
  require(!cfg.level_weights.empty() &&
              cfg.level_weights.size() == cfg.level_patch_radii.size(),
          "LossConfig: level weight/patch lists must be non-empty and equal length");
  for (double w : cfg.level_weights)
    require(w >= 0.0, "LossConfig: level weights must be non-negative");
  for (int r : cfg.level_patch_radii)
    require(r >= 1 && r <= 3, "LossConfig: level patch radii must be 1, 2 or 3");
}

double charbonnier(double x, double gamma, double eps) {
  const double t = x * x + eps * eps;
  if (t == 0.0) return 0.0;
  return std::pow(t, gamma);
}

Rho charbonnier_vd(double x, double gamma, double eps) {
  const double t = x * x + eps * eps;
  if (t == 0.0) return {0.0, 0.0};
  const double p = std::pow(t, gamma - 1.0);
  return {p * t, 2.0 * gamma * x * p};
}

double charbonnier_mean2(double a, double b, double gamma, double eps) {
  return 0.5 * (charbonnier(a, gamma, eps) + charbonnier(b, gamma, eps));
}

OcclusionMask detect_occlusion(const FlowField& wf, const FlowField& wb,
                               const LossConfig& cfg) {
  require(wf.width == wb.width && wf.height == wb.height,
          "detect_occlusion: flow dimensions differ");
  OcclusionMask m;
  m.forward = ScalarGrid(wf.width, wf.height);
  m.backward = ScalarGrid(wf.width, wf.height);
  if (!cfg.occlusion_masking) return m;

  auto flag_direction = [&cfg](const FlowField& a, const FlowField& b,
                               ScalarGrid& out) {
    std::size_t i = 0;
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x, ++i) {
        const Tap t = make_tap(a.width, a.height, x + a.u[i], y + a.v[i]);
        const double bu = tap_value(t, b.u.data());
        const double bv = tap_value(t, b.v.data());
        const double su = a.u[i] + bu;
        const double sv = a.v[i] + bv;
        const double lhs = su * su + sv * sv;
        const double rhs = cfg.alpha1 * (a.u[i] * a.u[i] + a.v[i] * a.v[i] +
                                         bu * bu + bv * bv) +
                           cfg.alpha2;
        out.data[i] = lhs >= rhs ? 1.0 : 0.0;
      }
    }
  };
  flag_direction(wf, wb, m.forward);
  flag_direction(wb, wf, m.backward);
  return m;
}

namespace {

// Photometric cost and gradient for one direction: reference frame `ref`,
// source frame `src` warped towards it by `flow`. Occluded pixels and pixels
// whose warp target leaves the image skip the photometric term and are
// charged lambda_p instead. Adds into `grad` scaled by inv_n.
void data_direction(const Image& ref, const Image& src, const FlowField& flow,
                    const ScalarGrid& occ, const LossConfig& cfg, double inv_n,
                    double& photo_sum, double& penalty_sum,
                    ScalarGrid& per_pixel, FlowField& grad) {
  const int w = ref.width, h = ref.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  per_pixel = ScalarGrid(w, h);

  if (cfg.data_term == DataTerm::brightness) {
    const int ch = ref.channels;
    const double inv_c = 1.0 / ch;
    std::size_t i = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x, ++i) {
        const Tap t = make_tap(w, h, x + flow.u[i], y + flow.v[i]);
        if (occ.data[i] != 0.0 || !t.in_bounds) {
          penalty_sum += cfg.lambda_p;
          continue;
        }
        double diff = 0.0, gx = 0.0, gy = 0.0;
        for (int c = 0; c < ch; ++c) {
          diff += ref.data[i * ch + c] - tap_value(t, src.data.data(), ch, c);
          gx += tap_dx(t, src.data.data(), ch, c);
          gy += tap_dy(t, src.data.data(), ch, c);
        }
        diff *= inv_c;
        const Rho r = charbonnier_vd(diff, cfg.gamma, cfg.charbonnier_eps);
        per_pixel.data[i] = r.value;
        photo_sum += r.value;
        const double a = inv_n * r.deriv * (-inv_c);
        grad.u[i] += a * gx;
        grad.v[i] += a * gy;
      }
    }
    return;
  }

  // Census route. The transform is applied to the warped source image so the
  // matching cost stays differentiable through the sampling positions.
  const ScalarGrid lum_ref = to_luminance(ref);
  const ScalarGrid lum_src = to_luminance(src);

  ScalarGrid warped(w, h);
  std::vector<double> gx(n), gy(n);
  std::vector<char> valid(n);
  {
    std::size_t i = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x, ++i) {
        const Tap t = make_tap(w, h, x + flow.u[i], y + flow.v[i]);
        warped.data[i] = tap_value(t, lum_src.data.data());
        gx[i] = tap_dx(t, lum_src.data.data());
        gy[i] = tap_dy(t, lum_src.data.data());
        valid[i] = t.in_bounds ? 1 : 0;
      }
    }
  }

  const int radius = cfg.patch_radius;
  const CensusField cref = census_transform(lum_ref, radius);
  const CensusField cwarp = census_transform(warped, radius);
  const auto offs = census_offsets(radius);
  const int ns = cref.slots();

  // Adjoint w.r.t. the warped luminance, then chain through the sampler.
  std::vector<double> g_img(n, 0.0);
  {
    std::size_t i = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x, ++i) {
        if (occ.data[i] != 0.0 || !valid[i]) {
          penalty_sum += cfg.lambda_p;
          continue;
        }
        const double* fr = &cref.features[i * ns];
        const double* fw = &cwarp.features[i * ns];
        double dist = 0.0;
        for (int k = 0; k < ns; ++k) dist += census_slot_cost(fr[k] - fw[k]);
        const Rho r = charbonnier_vd(dist, cfg.gamma, cfg.charbonnier_eps);
        per_pixel.data[i] = r.value;
        photo_sum += r.value;

        const double a = inv_n * r.deriv;
        const double center = warped.data[i];
        for (int k = 0; k < ns; ++k) {
          const int nx = std::clamp(x + offs[k].first, 0, w - 1);
          const int ny = std::clamp(y + offs[k].second, 0, h - 1);
          const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
          const double d = warped.data[nidx] - center;
          const double slope = a * census_slot_cost_deriv(fr[k] - fw[k]) *
                               census_response_deriv(d, kCensusSoftness);
          // dist falls as the warped response rises towards the reference one.
          g_img[nidx] -= slope;
          g_img[i] += slope;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    grad.u[i] += g_img[i] * gx[i];
    grad.v[i] += g_img[i] * gy[i];
  }
}

void consistency_direction(const FlowField& wa, const FlowField& wb,
                           const ScalarGrid& occ, const LossConfig& cfg,
                           double inv_n, double& sum, ScalarGrid& per_pixel,
                           FlowField& grad_a, FlowField& grad_b) {
  const int w = wa.width, h = wa.height;
  per_pixel = ScalarGrid(w, h);
  std::size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, ++i) {
      const Tap t = make_tap(w, h, x + wa.u[i], y + wa.v[i]);
      if (occ.data[i] != 0.0 || !t.in_bounds) continue;
      const double bu = tap_value(t, wb.u.data());
      const double bv = tap_value(t, wb.v.data());
      const double ru = wa.u[i] + bu;
      const double rv = wa.v[i] + bv;
      const Rho pu = charbonnier_vd(ru, cfg.gamma, cfg.charbonnier_eps);
      const Rho pv = charbonnier_vd(rv, cfg.gamma, cfg.charbonnier_eps);
      per_pixel.data[i] = 0.5 * (pu.value + pv.value);
      sum += per_pixel.data[i];

      const double gu = 0.5 * inv_n * pu.deriv;
      const double gv = 0.5 * inv_n * pv.deriv;
      grad_a.u[i] += gu * (1.0 + tap_dx(t, wb.u.data())) +
                     gv * tap_dx(t, wb.v.data());
      grad_a.v[i] += gu * tap_dy(t, wb.u.data()) +
                     gv * (1.0 + tap_dy(t, wb.v.data()));
      double cw[4];
      tap_corner_weights(t, cw);
      const std::size_t corners[4] = {t.i00, t.i10, t.i01, t.i11};
      for (int k = 0; k < 4; ++k) {
        grad_b.u[corners[k]] += gu * cw[k];
        grad_b.v[corners[k]] += gv * cw[k];
      }
    }
  }
}

void smoothness_field(const FlowField& f, const LossConfig& cfg, double inv_n,
                      double& sum, FlowField& grad) {
  const int w = f.width, h = f.height;
  const double g = cfg.gamma, eps = cfg.charbonnier_eps;
  if (cfg.smoothness_order == SmoothnessOrder::second) {
    require(w >= 3 && h >= 3, "smoothness_loss: grid too small for second order");
    static constexpr int dirs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t ic = static_cast<std::size_t>(y) * w + x;
        for (const auto& d : dirs) {
          const int sx = x - d[0], sy = y - d[1];
          const int rx = x + d[0], ry = y + d[1];
          if (sx < 0 || sx >= w || sy < 0 || sy >= h || rx < 0 || rx >= w ||
              ry < 0 || ry >= h) {
            continue;
          }
          const std::size_t is = static_cast<std::size_t>(sy) * w + sx;
          const std::size_t ir = static_cast<std::size_t>(ry) * w + rx;
          const double su = f.u[is] - 2.0 * f.u[ic] + f.u[ir];
          const double sv = f.v[is] - 2.0 * f.v[ic] + f.v[ir];
          const Rho pu = charbonnier_vd(su, g, eps);
          const Rho pv = charbonnier_vd(sv, g, eps);
          sum += 0.5 * (pu.value + pv.value);
          const double au = 0.5 * inv_n * pu.deriv;
          const double av = 0.5 * inv_n * pv.deriv;
          grad.u[is] += au;
          grad.u[ic] -= 2.0 * au;
          grad.u[ir] += au;
          grad.v[is] += av;
          grad.v[ic] -= 2.0 * av;
          grad.v[ir] += av;
        }
      }
    }
  } else {
    require(w >= 2 && h >= 2, "smoothness_loss: grid too small");
    static constexpr int dirs[2][2] = {{1, 0}, {0, 1}};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t ic = static_cast<std::size_t>(y) * w + x;
        for (const auto& d : dirs) {
          const int rx = x + d[0], ry = y + d[1];
          if (rx >= w || ry >= h) continue;
          const std::size_t ir = static_cast<std::size_t>(ry) * w + rx;
          const double su = f.u[ir] - f.u[ic];
          const double sv = f.v[ir] - f.v[ic];
          const Rho pu = charbonnier_vd(su, g, eps);
          const Rho pv = charbonnier_vd(sv, g, eps);
          sum += 0.5 * (pu.value + pv.value);
          const double au = 0.5 * inv_n * pu.deriv;
          const double av = 0.5 * inv_n * pv.deriv;
          grad.u[ir] += au;
          grad.u[ic] -= au;
          grad.v[ir] += av;
          grad.v[ic] -= av;
        }
      }
    }
  }
}

}  // namespace

DataLossResult data_loss(const Image& i1, const Image& i2, const FlowField& wf,
                         const FlowField& wb, const OcclusionMask& occ,
                         const LossConfig& cfg) {
  require_pair_dims(i1, i2, wf, wb);
  require(occ.forward.width == wf.width && occ.forward.height == wf.height &&
              occ.backward.width == wf.width && occ.backward.height == wf.height,
          "data_loss: mask dimensions differ");
  DataLossResult r;
  r.grad_forward = FlowField(wf.width, wf.height);
  r.grad_backward = FlowField(wf.width, wf.height);
  const double inv_n = 1.0 / (static_cast<double>(wf.width) * wf.height);
  double photo_f = 0.0, photo_b = 0.0, pen_f = 0.0, pen_b = 0.0;
  data_direction(i1, i2, wf, occ.forward, cfg, inv_n, photo_f, pen_f,
                 r.per_pixel_forward, r.grad_forward);
  data_direction(i2, i1, wb, occ.backward, cfg, inv_n, photo_b, pen_b,
                 r.per_pixel_backward, r.grad_backward);
  r.photometric = (photo_f + photo_b) * inv_n;
  r.occlusion_penalty = (pen_f + pen_b) * inv_n;
  r.value = r.photometric + r.occlusion_penalty;
  return r;
}

TermResult smoothness_loss(const FlowField& wf, const FlowField& wb,
                           const LossConfig& cfg) {
  require(wf.width == wb.width && wf.height == wb.height,
          "smoothness_loss: flow dimensions differ");
  TermResult r;
  r.grad_forward = FlowField(wf.width, wf.height);
  r.grad_backward = FlowField(wf.width, wf.height);
  const double inv_n = 1.0 / (static_cast<double>(wf.width) * wf.height);
  double sum_f = 0.0, sum_b = 0.0;
  smoothness_field(wf, cfg, inv_n, sum_f, r.grad_forward);
  smoothness_field(wb, cfg, inv_n, sum_b, r.grad_backward);
  r.value = (sum_f + sum_b) * inv_n;
  return r;
}

TermResult consistency_loss(const FlowField& wf, const FlowField& wb,
                            const OcclusionMask& occ, const LossConfig& cfg) {
  require(wf.width == wb.width && wf.height == wb.height,
          "consistency_loss: flow dimensions differ");
  TermResult r;
  r.grad_forward = FlowField(wf.width, wf.height);
  r.grad_backward = FlowField(wf.width, wf.height);
  const double inv_n = 1.0 / (static_cast<double>(wf.width) * wf.height);
  double sum_f = 0.0, sum_b = 0.0;
  consistency_direction(wf, wb, occ.forward, cfg, inv_n, sum_f,
                        r.per_pixel_forward, r.grad_forward, r.grad_backward);
  consistency_direction(wb, wf, occ.backward, cfg, inv_n, sum_b,
                        r.per_pixel_backward, r.grad_backward, r.grad_forward);
  r.value = (sum_f + sum_b) * inv_n;
  return r;
}

TotalLossResult total_loss_with_masks(const Image& i1, const Image& i2,
                                      const FlowField& wf, const FlowField& wb,
                                      const OcclusionMask& occ,
                                      const LossConfig& cfg) {
  validate(cfg);
  require_pair_dims(i1, i2, wf, wb);
  TotalLossResult r;
  DataLossResult d = data_loss(i1, i2, wf, wb, occ, cfg);
  TermResult s = smoothness_loss(wf, wb, cfg);
  TermResult c = consistency_loss(wf, wb, occ, cfg);

  r.breakdown.data = d.photometric;
  r.breakdown.occlusion_penalty = d.occlusion_penalty;
  r.breakdown.smooth = s.value;
  r.breakdown.consistency = c.value;
  r.breakdown.total = r.breakdown.data + r.breakdown.occlusion_penalty +
                      cfg.lambda_s * r.breakdown.smooth +
                      cfg.lambda_c * r.breakdown.consistency;

  r.grad_forward = std::move(d.grad_forward);
  r.grad_backward = std::move(d.grad_backward);
  axpy(cfg.lambda_s, s.grad_forward.u, r.grad_forward.u);
  axpy(cfg.lambda_s, s.grad_forward.v, r.grad_forward.v);
  axpy(cfg.lambda_s, s.grad_backward.u, r.grad_backward.u);
  axpy(cfg.lambda_s, s.grad_backward.v, r.grad_backward.v);
  axpy(cfg.lambda_c, c.grad_forward.u, r.grad_forward.u);
  axpy(cfg.lambda_c, c.grad_forward.v, r.grad_forward.v);
  axpy(cfg.lambda_c, c.grad_backward.u, r.grad_backward.u);
  axpy(cfg.lambda_c, c.grad_backward.v, r.grad_backward.v);
  r.masks = occ;
  return r;
}

TotalLossResult total_loss(const Image& i1, const Image& i2,
                           const FlowField& wf, const FlowField& wb,
                           const LossConfig& cfg) {
  validate(cfg);
  require_pair_dims(i1, i2, wf, wb);
  return total_loss_with_masks(i1, i2, wf, wb, detect_occlusion(wf, wb, cfg),
                               cfg);
}

double combine_level_losses(const std::vector<double>& level_losses,
                            const std::vector<double>& weights) {
  require(level_losses.size() == weights.size(),
          "combine_level_losses: level count mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    sum += weights[i] * level_losses[i];
  return sum;
}

double multiscale_loss(const std::vector<PyramidLevel>& levels,
                       const LossConfig& cfg) {
  validate(cfg);
  require(levels.size() == cfg.level_weights.size(),
          "multiscale_loss: level count mismatch");
  std::vector<double> losses(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    LossConfig level_cfg = cfg;
    level_cfg.patch_radius = cfg.level_patch_radii[i];
    losses[i] = total_loss(levels[i].i1, levels[i].i2, levels[i].forward,
                           levels[i].backward, level_cfg)
                    .breakdown.total;
  }
  return combine_level_losses(losses, cfg.level_weights);
}

SupervisedLossResult supervised_loss(const FlowField& est, const FlowField& gt,
                                     const ScalarGrid& valid, double gamma,
                                     double eps) {
  require(est.width == gt.width && est.height == gt.height &&
              valid.width == est.width && valid.height == est.height,
          "supervised_loss: dimensions differ");
  SupervisedLossResult r;
  r.grad = FlowField(est.width, est.height);
  const std::size_t n = est.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (valid.data[i] == 0.0) continue;
    const Rho pu = charbonnier_vd(est.u[i] - gt.u[i], gamma, eps);
    const Rho pv = charbonnier_vd(est.v[i] - gt.v[i], gamma, eps);
    sum += 0.5 * (pu.value + pv.value);
    r.grad.u[i] = 0.5 * inv_n * pu.deriv;
    r.grad.v[i] = 0.5 * inv_n * pv.deriv;
  }
  r.value = sum * inv_n;
  return r;
}

}  // namespace biflow
