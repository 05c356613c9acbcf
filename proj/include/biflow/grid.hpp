#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace biflow {

// Optimization diverged or a loss evaluation produced non-finite values.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major scalar grid (per-pixel costs, masks, error maps).
struct ScalarGrid {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ScalarGrid() = default;
  ScalarGrid(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
};

// Intensity image with values in [0,1], row-major, channel-interleaved.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c = 1, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t size() const { return data.size(); }
};

// Dense displacement field; u/v are horizontal/vertical components in pixels.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> u, v;

  FlowField() = default;
  FlowField(int w, int h, double fu = 0.0, double fv = 0.0)
      : width(w), height(h), u(static_cast<std::size_t>(w) * h, fu),
        v(static_cast<std::size_t>(w) * h, fv) {}

  std::size_t size() const { return u.size(); }
};

// ---------------------------------------------------------------------------
// Bilinear sampling with border clamp.
//
// A Tap is one clamped bilinear read at continuous (x, y): the four corner
// pixel indices, the in-cell fractions, and per-axis derivative masks that
// zero the spatial derivative where the coordinate was clamped outside the
// domain. The same tap geometry can be applied to any buffer of matching
// dimensions (image channels, flow components).

struct Tap {
  std::size_t i00 = 0, i10 = 0, i01 = 0, i11 = 0;
  double fx = 0.0, fy = 0.0;
  double ddx = 0.0, ddy = 0.0;
  bool in_bounds = false;  // original coordinate inside [0,w-1] x [0,h-1]
};

inline Tap make_tap(int width, int height, double x, double y) {
  Tap t;
  if (std::isnan(x) || std::isnan(y)) {
    return t;  // all-zero tap reading pixel (0,0), derivatives masked
  }
  const double xmax = static_cast<double>(width - 1);
  const double ymax = static_cast<double>(height - 1);
  const bool inx = (x >= 0.0 && x <= xmax);
  const bool iny = (y >= 0.0 && y <= ymax);
  t.in_bounds = inx && iny;

  double cx = x < 0.0 ? 0.0 : (x > xmax ? xmax : x);
  double cy = y < 0.0 ? 0.0 : (y > ymax ? ymax : y);
  int x0 = static_cast<int>(std::floor(cx));
  int y0 = static_cast<int>(std::floor(cy));
  if (x0 > width - 2) x0 = width - 2;
  if (y0 > height - 2) y0 = height - 2;
  if (x0 < 0) x0 = 0;
  if (y0 < 0) y0 = 0;
  const int x1 = x0 + 1 < width ? x0 + 1 : width - 1;
  const int y1 = y0 + 1 < height ? y0 + 1 : height - 1;

  t.fx = cx - static_cast<double>(x0);
  t.fy = cy - static_cast<double>(y0);
  t.i00 = static_cast<std::size_t>(y0) * width + x0;
  t.i10 = static_cast<std::size_t>(y0) * width + x1;
  t.i01 = static_cast<std::size_t>(y1) * width + x0;
  t.i11 = static_cast<std::size_t>(y1) * width + x1;
  t.ddx = (inx && width > 1) ? 1.0 : 0.0;
  t.ddy = (iny && height > 1) ? 1.0 : 0.0;
  return t;
}

inline double tap_value(const Tap& t, const double* buf, int stride = 1,
                        int offset = 0) {
  const double p00 = buf[t.i00 * stride + offset];
  const double p10 = buf[t.i10 * stride + offset];
  const double p01 = buf[t.i01 * stride + offset];
  const double p11 = buf[t.i11 * stride + offset];
  const double top = (1.0 - t.fx) * p00 + t.fx * p10;
  const double bot = (1.0 - t.fx) * p01 + t.fx * p11;
  return (1.0 - t.fy) * top + t.fy * bot;
}

inline double tap_dx(const Tap& t, const double* buf, int stride = 1,
                     int offset = 0) {
  const double p00 = buf[t.i00 * stride + offset];
  const double p10 = buf[t.i10 * stride + offset];
  const double p01 = buf[t.i01 * stride + offset];
  const double p11 = buf[t.i11 * stride + offset];
  return t.ddx * ((1.0 - t.fy) * (p10 - p00) + t.fy * (p11 - p01));
}

inline double tap_dy(const Tap& t, const double* buf, int stride = 1,
                     int offset = 0) {
  const double p00 = buf[t.i00 * stride + offset];
  const double p10 = buf[t.i10 * stride + offset];
  const double p01 = buf[t.i01 * stride + offset];
  const double p11 = buf[t.i11 * stride + offset];
  return t.ddy * ((1.0 - t.fx) * (p01 - p00) + t.fx * (p11 - p10));
}

// Corner weights in i00, i10, i01, i11 order, for adjoint scatter.
inline void tap_corner_weights(const Tap& t, double w[4]) {
  w[0] = (1.0 - t.fx) * (1.0 - t.fy);
  w[1] = t.fx * (1.0 - t.fy);
  w[2] = (1.0 - t.fx) * t.fy;
  w[3] = t.fx * t.fy;
}

struct SampleGrad {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

double bilinear_sample(const Image& img, double x, double y, int channel = 0);
double bilinear_sample(const ScalarGrid& g, double x, double y);
SampleGrad bilinear_sample_grad(const ScalarGrid& g, double x, double y);

// Warps img towards the reference frame: out(x) = img(x + flow(x)).
// The second grid is 1 where x + flow(x) lies inside the image rectangle.
std::pair<Image, ScalarGrid> backward_warp(const Image& img,
                                           const FlowField& flow);

// 2x2 box average; output dimensions are rounded up for odd inputs.
Image downsample_half(const Image& img);
// Box average plus a 0.5 scale on both components so displacements stay in
// level-local pixel units.
FlowField downsample_flow_half(const FlowField& flow);
// Bilinear upsampling to roughly double size (target within +-1 of 2x),
// scaling u by target_w/w and v by target_h/h.
FlowField upsample_flow_2x(const FlowField& flow, int target_w, int target_h);

// General bilinear resampling with half-pixel-centered coordinates.
Image resize_bilinear(const Image& img, int target_w, int target_h);
// Resampling plus per-axis component rescale (used by the evaluation
// protocol when mapping estimates between resolutions).
FlowField resize_flow(const FlowField& flow, int target_w, int target_h);

// Rec.601 luma for 3-channel images, plain copy for single-channel ones.
ScalarGrid to_luminance(const Image& img);

}  // namespace biflow
