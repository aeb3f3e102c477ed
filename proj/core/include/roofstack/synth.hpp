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
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roofstack/augment.hpp"
#include "roofstack/geodata.hpp"
#include "roofstack/raster.hpp"
#include "roofstack/stacking.hpp"

namespace roofstack {

/// Roof texture of one class: per-building colour drawn around `mean` with
/// `building_sd`, then per-pixel noise with `pixel_sd`.
struct ClassTexture {
  std::array<double, 3> mean{};
  double building_sd = 0.0;
  double pixel_sd = 0.0;

  friend bool operator==(const ClassTexture&, const ClassTexture&) = default;
};

using Palette = std::array<ClassTexture, kNumClasses>;

Palette default_palette();

struct SynthParams {
  int map_id = 0;
  int map_size = 1600;
  int n_buildings = 1000;
  int n_label_clusters = 8;
  double label_noise = 0.05;
  /// Material frequencies of a real labeled roof survey.
  ProbVector class_prior = {1518.0 / 22553, 14817.0 / 22553, 669.0 / 22553, 5241.0 / 22553, 308.0 / 22553};
  Range<int> building_size = {12, 40};
  int min_gap = 3;
  Palette palette = default_palette();
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthParams& p);
void from_json(const nlohmann::json& j, SynthParams& p);

struct SynthMap {
  ImageRGB image;
  BuildingSet buildings;  // every building labeled
};

/// Places non-overlapping axis-aligned rectangles, labels them from the
/// dominant class of their Voronoi cluster (flipped uniformly with
/// probability label_noise) and paints roofs from the palette. Throws
/// CapacityError when placement runs out of attempts.
SynthMap generate_map(const SynthParams& p);

struct OracleParams {
  double confusion_level = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reads the mean RGB under the mask, picks the nearest palette class and
/// returns (1 - c) * onehot + c * noise, with the noise simplex seeded by
/// the chip content.
class OracleModel final : public BaseModel {
 public:
  OracleModel(OracleParams params, Palette palette, std::string name = "oracle");

  std::string name() const override { return name_; }
  ProbVector predict(const Chip& chip) const override;

  /// Class whose palette mean is nearest to the chip's masked mean colour.
  int nearest_class(const Chip& chip) const;

 private:
  OracleParams params_;
  Palette palette_;
  std::string name_;
};

struct HiddenSplit {
  BuildingSet train;  // hidden buildings keep their geometry, lose the label
  std::vector<std::tuple<int, std::string, int>> truth;  // (map_id, id, label)
};

/// Hides round(test_fraction * n) labeled buildings of each map.
HiddenSplit hide_labels(const BuildingSet& set, double test_fraction, std::uint64_t seed);

}  // namespace roofstack
