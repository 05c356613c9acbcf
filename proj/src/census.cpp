#include "biflow/census.hpp"

#include <algorithm>

namespace biflow {

std::vector<std::pair<int, int>> census_offsets(int patch_radius) {
  std::vector<std::pair<int, int>> offs;
  offs.reserve((2 * patch_radius + 1) * (2 * patch_radius + 1) - 1);
  for (int dy = -patch_radius; dy <= patch_radius; ++dy) {
    for (int dx = -patch_radius; dx <= patch_radius; ++dx) {
      if (dx == 0 && dy == 0) continue;
      offs.emplace_back(dx, dy);
    }
  }
  return offs;
}

CensusField census_transform(const Image& img, int patch_radius,
                             double softness) {
  return census_transform(to_luminance(img), patch_radius, softness);
}

CensusField census_transform(const ScalarGrid& lum, int patch_radius,
                             double softness) {
  if (patch_radius < 1 || patch_radius > 3) {
    throw std::invalid_argument("census_transform: patch_radius must be 1, 2 or 3");
  }
  const auto offs = census_offsets(patch_radius);
  CensusField f;
  f.width = lum.width;
  f.height = lum.height;
  f.patch_radius = patch_radius;
  const int ns = f.slots();
  f.features.resize(static_cast<std::size_t>(lum.width) * lum.height * ns);

  const int w = lum.width, h = lum.height;
  std::size_t p = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, ++p) {
      const double center = lum.data[p];
      double* out = &f.features[p * ns];
      for (int k = 0; k < ns; ++k) {
        const int nx = std::clamp(x + offs[k].first, 0, w - 1);
        const int ny = std::clamp(y + offs[k].second, 0, h - 1);
        const double d = lum.data[static_cast<std::size_t>(ny) * w + nx] - center;
        out[k] = census_response(d, softness);
      }
    }
  }
  return f;
}

ScalarGrid census_distance(const CensusField& a, const CensusField& b) {
  if (a.width != b.width || a.height != b.height ||
      a.patch_radius != b.patch_radius) {
    throw std::invalid_argument("census_distance: field shapes differ");
  }
  ScalarGrid out(a.width, a.height);
  const int ns = a.slots();
  const std::size_t n = out.size();
  for (std::size_t p = 0; p < n; ++p) {
    const double* fa = &a.features[p * ns];
    const double* fb = &b.features[p * ns];
    double sum = 0.0;
    for (int k = 0; k < ns; ++k) {
      sum += census_slot_cost(fa[k] - fb[k]);
    }
    out.data[p] = sum;
  }
  return out;
}

ScalarGrid brightness_distance(const Image& i1, const Image& i2_warped) {
  if (i1.width != i2_warped.width || i1.height != i2_warped.height ||
      i1.channels != i2_warped.channels) {
    throw std::invalid_argument("brightness_distance: image shapes differ");
  }
  ScalarGrid out(i1.width, i1.height);
  const std::size_t n = out.size();
  const int c = i1.channels;
  const double inv_c = 1.0 / c;
  for (std::size_t p = 0; p < n; ++p) {
    double sum = 0.0;
    for (int k = 0; k < c; ++k) {
      sum += i1.data[p * c + k] - i2_warped.data[p * c + k];
    }
    out.data[p] = sum * inv_c;
  }
  return out;
}

}  // namespace biflow
