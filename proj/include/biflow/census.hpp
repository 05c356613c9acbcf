#pragma once

#include <cmath>
#include <vector>

#include "biflow/grid.hpp"

namespace biflow {

// Soft ternary census. Each neighbor contributes d / sqrt(softness + d^2)
// with d the intensity difference against the patch center, so responses
// live in (-1, 1) and approach the hard ternary signature as softness -> 0.
// Slot distances saturate through e^2 / (sat + e^2), keeping per-slot costs
// below 1 and gradients bounded.
inline constexpr double kCensusSoftness = 0.81;
inline constexpr double kCensusSaturation = 0.1;

struct CensusField {
  int width = 0;
  int height = 0;
  int patch_radius = 0;
  // Row-major, slot-interleaved: features[pixel * slots + k].
  std::vector<double> features;

  int slots() const {
    const int d = 2 * patch_radius + 1;
    return d * d - 1;
  }
};

inline double census_response(double d, double softness) {
  return d / std::sqrt(softness + d * d);
}

// d(response)/dd = softness / (softness + d^2)^(3/2)
inline double census_response_deriv(double d, double softness) {
  const double t = softness + d * d;
  return softness / (t * std::sqrt(t));
}

inline double census_slot_cost(double e) {
  return e * e / (kCensusSaturation + e * e);
}

inline double census_slot_cost_deriv(double e) {
  const double t = kCensusSaturation + e * e;
  return 2.0 * e * kCensusSaturation / (t * t);
}

// Neighbor offsets of a (2r+1)^2 patch excluding the center, in row-major
// scan order. Shared by the transform and the loss gradients so both walk
// slots identically.
std::vector<std::pair<int, int>> census_offsets(int patch_radius);

// 3-channel inputs are reduced to luminance first. Border neighbors read
// clamped pixels. patch_radius must be 1, 2 or 3.
CensusField census_transform(const Image& img, int patch_radius,
                             double softness = kCensusSoftness);
CensusField census_transform(const ScalarGrid& luminance, int patch_radius,
                             double softness = kCensusSoftness);

// Per-pixel sum of saturated squared response differences.
ScalarGrid census_distance(const CensusField& a, const CensusField& b);

// Baseline data measure: per-pixel channel mean of (i1 - i2_warped).
ScalarGrid brightness_distance(const Image& i1, const Image& i2_warped);

}  // namespace biflow
