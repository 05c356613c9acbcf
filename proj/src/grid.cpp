#include "biflow/grid.hpp"

#include <algorithm>

namespace biflow {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

double bilinear_sample(const Image& img, double x, double y, int channel) {
  const Tap t = make_tap(img.width, img.height, x, y);
  return tap_value(t, img.data.data(), img.channels, channel);
}

double bilinear_sample(const ScalarGrid& g, double x, double y) {
  const Tap t = make_tap(g.width, g.height, x, y);
  return tap_value(t, g.data.data());
}

SampleGrad bilinear_sample_grad(const ScalarGrid& g, double x, double y) {
  const Tap t = make_tap(g.width, g.height, x, y);
  SampleGrad s;
  s.value = tap_value(t, g.data.data());
  s.dx = tap_dx(t, g.data.data());
  s.dy = tap_dy(t, g.data.data());
  return s;
}

std::pair<Image, ScalarGrid> backward_warp(const Image& img,
                                           const FlowField& flow) {
  require(img.width == flow.width && img.height == flow.height,
          "backward_warp: image and flow dimensions differ");
  Image out(img.width, img.height, img.channels);
  ScalarGrid valid(img.width, img.height);
  std::size_t i = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x, ++i) {
      const Tap t = make_tap(img.width, img.height, x + flow.u[i], y + flow.v[i]);
      for (int c = 0; c < img.channels; ++c) {
        out.data[i * img.channels + c] =
            tap_value(t, img.data.data(), img.channels, c);
      }
      valid.data[i] = t.in_bounds ? 1.0 : 0.0;
    }
  }
  return {std::move(out), std::move(valid)};
}

namespace {

// 2x2 box mean of one channel; reads are clamped so odd trailing rows or
// columns reuse the last sample.
double box2(const double* buf, int w, int h, int stride, int offset, int x,
            int y) {
  const int x0 = std::min(2 * x, w - 1);
  const int x1 = std::min(2 * x + 1, w - 1);
  const int y0 = std::min(2 * y, h - 1);
  const int y1 = std::min(2 * y + 1, h - 1);
  const double a = buf[(static_cast<std::size_t>(y0) * w + x0) * stride + offset];
  const double b = buf[(static_cast<std::size_t>(y0) * w + x1) * stride + offset];
  const double c = buf[(static_cast<std::size_t>(y1) * w + x0) * stride + offset];
  const double d = buf[(static_cast<std::size_t>(y1) * w + x1) * stride + offset];
  return 0.25 * (a + b + c + d);
}

}  // namespace

Image downsample_half(const Image& img) {
  require(img.width >= 2 && img.height >= 2,
          "downsample_half: dimensions must be at least 2");
  const int ow = (img.width + 1) / 2;
  const int oh = (img.height + 1) / 2;
  Image out(ow, oh, img.channels);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out.at(x, y, c) = box2(img.data.data(), img.width, img.height,
                               img.channels, c, x, y);
      }
    }
  }
  return out;
}

FlowField downsample_flow_half(const FlowField& flow) {
  require(flow.width >= 2 && flow.height >= 2,
          "downsample_flow_half: dimensions must be at least 2");
  const int ow = (flow.width + 1) / 2;
  const int oh = (flow.height + 1) / 2;
  FlowField out(ow, oh);
  std::size_t i = 0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x, ++i) {
      out.u[i] = 0.5 * box2(flow.u.data(), flow.width, flow.height, 1, 0, x, y);
      out.v[i] = 0.5 * box2(flow.v.data(), flow.width, flow.height, 1, 0, x, y);
    }
  }
  return out;
}

FlowField upsample_flow_2x(const FlowField& flow, int target_w, int target_h) {
  require(target_w >= 1 && target_h >= 1 && std::abs(target_w - 2 * flow.width) <= 1 &&
              std::abs(target_h - 2 * flow.height) <= 1,
          "upsample_flow_2x: target must be within +-1 of double size");
  return resize_flow(flow, target_w, target_h);
}

Image resize_bilinear(const Image& img, int target_w, int target_h) {
  require(target_w >= 1 && target_h >= 1, "resize_bilinear: bad target size");
  if (target_w == img.width && target_h == img.height) return img;
  Image out(target_w, target_h, img.channels);
  const double sx = static_cast<double>(img.width) / target_w;
  const double sy = static_cast<double>(img.height) / target_h;
  for (int y = 0; y < target_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < target_w; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const Tap t = make_tap(img.width, img.height, src_x, src_y);
      for (int c = 0; c < img.channels; ++c) {
        out.at(x, y, c) = tap_value(t, img.data.data(), img.channels, c);
      }
    }
  }
  return out;
}

FlowField resize_flow(const FlowField& flow, int target_w, int target_h) {
  require(target_w >= 1 && target_h >= 1, "resize_flow: bad target size");
  FlowField out(target_w, target_h);
  const double sx = static_cast<double>(flow.width) / target_w;
  const double sy = static_cast<double>(flow.height) / target_h;
  const double u_scale = static_cast<double>(target_w) / flow.width;
  const double v_scale = static_cast<double>(target_h) / flow.height;
  std::size_t i = 0;
  for (int y = 0; y < target_h; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < target_w; ++x, ++i) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const Tap t = make_tap(flow.width, flow.height, src_x, src_y);
      out.u[i] = u_scale * tap_value(t, flow.u.data());
      out.v[i] = v_scale * tap_value(t, flow.v.data());
    }
  }
  return out;
}

ScalarGrid to_luminance(const Image& img) {
  ScalarGrid out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  if (img.channels == 1) {
    out.data.assign(img.data.begin(), img.data.end());
  } else if (img.channels == 3) {
    for (std::size_t i = 0; i < n; ++i) {
      out.data[i] = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] +
                    0.114 * img.data[3 * i + 2];
    }
  } else {
    throw std::invalid_argument("to_luminance: images must have 1 or 3 channels");
  }
  return out;
}

}  // namespace biflow
