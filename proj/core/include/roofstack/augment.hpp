/**
 * Copyright 2026 The roofstack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roofstack/raster.hpp"

namespace roofstack {

enum class BlurMode { kMedian, kBox, kGaussian };

std::string_view to_string(BlurMode mode);
BlurMode blur_mode_from_string(std::string_view name);

template <typename T>
struct Range {
  T lo{};
  T hi{};
  friend bool operator==(const Range&, const Range&) = default;
};

/// Transform parameters and per-transform application probabilities.
/// Defaults follow the engine's documented choices; every value is a knob.
struct AugmentConfig {
  int rgb_shift_limit = 20;

  std::vector<BlurMode> blur_modes = {BlurMode::kMedian, BlurMode::kBox, BlurMode::kGaussian};
  Range<int> blur_kernel = {3, 5};  // odd sizes for median/box
  Range<double> blur_sigma = {0.5, 1.5};

  Range<double> noise_sigma = {3.0, 12.0};

  double elastic_alpha = 30.0;
  double elastic_sigma = 6.0;

  int grid_num_steps = 5;
  double grid_distort_limit = 0.3;

  double optical_distort_limit = 0.3;

  Range<int> crop_margin = {0, 100};

  int mask_max_shift_px = 5;
  double mask_max_angle_deg = 5.0;

  int output_size = 224;

  double p_dihedral = 1.0;
  double p_rgb_shift = 0.5;
  double p_blur = 0.3;
  double p_noise = 0.3;
  double p_elastic = 0.2;
  double p_grid = 0.2;
  double p_optical = 0.2;
  double p_mask_jitter = 0.5;

  /// Throws ParameterError on empty ranges, bad probabilities or sizes.
  void validate() const;

  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

void to_json(nlohmann::json& j, const AugmentConfig& cfg);
void from_json(const nlohmann::json& j, AugmentConfig& cfg);

/// Per-item seed derivation. Workers seed each item independently, so the
/// output never depends on processing order.
struct SeedPolicy {
  std::uint64_t global_seed = 0;

  std::uint64_t item_seed(std::string_view building_id, std::uint64_t epoch,
                          std::uint64_t variant_index) const;
};

/// k encodes a counter-clockwise rotation by 90 * (k mod 4) degrees followed
/// by a horizontal flip when k >= 4. RGB and mask move together.
Chip dihedral(const Chip& c, int k);

/// Element equal to applying `first` and then `second`.
int dihedral_compose(int second, int first);
int dihedral_inverse(int k);

/// Adds per-channel offsets with clamping. Throws ParameterError when an
/// offset exceeds `limit` in magnitude.
Chip rgb_shift(const Chip& c, std::array<int, 3> delta, int limit = 20);

/// `param` is the odd kernel size for median/box, sigma for gaussian.
/// Borders replicate edge pixels; the mask is untouched.
Chip blur(const Chip& c, BlurMode mode, double param);

Chip gauss_noise(const Chip& c, double sigma, std::uint64_t seed);

/// Random displacement field U(-1,1), Gaussian-smoothed with `sigma`,
/// scaled by `alpha`; bilinear resampling with edge clamp.
Chip elastic_transform(const Chip& c, double alpha, double sigma, std::uint64_t seed);

/// Per-cell stretch factors U(1-d, 1+d) on both axes, renormalized so the
/// image border stays fixed.
Chip grid_distortion(const Chip& c, int num_steps, double distort_limit, std::uint64_t seed);

/// Radial remap r' = r * (1 + k * (r / R)^2) about the chip center,
/// R = half diagonal.
Chip optical_distortion(const Chip& c, double k);

struct CropMargins {
  int left = 0;
  int right = 0;
  int top = 0;
  int bottom = 0;
};

/// Trims the given pixels from each side (each at most the chip's stored
/// margin), then bilinearly resizes to output_size x output_size.
Chip random_crop_margin(const Chip& c, CropMargins margins, int output_size);

/// Bilinear resize of RGB and mask (mask re-thresholded at 128).
Chip resize_chip(const Chip& c, int width, int height);

/// Moves only the mask: rotation by `angle_deg` about the mask centroid,
/// then translation by (dx, dy). RGB is untouched.
Chip mask_jitter(const Chip& c, double dx, double dy, double angle_deg);

/// Record of what the pipeline sampled for one call.
struct AugmentTrace {
  int dihedral = 0;
  bool rgb_shift = false;
  bool blur = false;
  bool noise = false;
  bool elastic = false;
  bool grid = false;
  bool optical = false;
  bool mask_jitter = false;
  CropMargins crop;
};

/// dihedral -> color/blur/noise -> elastic/grid/optical -> mask jitter ->
/// crop margin + resize, each stage drawn with its configured probability.
Chip augment_pipeline(const Chip& c, const AugmentConfig& cfg, std::uint64_t seed,
                      AugmentTrace* trace = nullptr);

/// Grid of pipeline outputs (mask tinted red) for visual inspection.
ImageRGB contact_sheet(const Chip& c, const AugmentConfig& cfg, std::uint64_t seed, int rows,
                       int cols);

}  // namespace roofstack
