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
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roofstack {

inline constexpr std::size_t kNumClasses = 5;
inline constexpr int kNumMaps = 7;

/// Roof materials in fixed column order. Every probability matrix in the
/// project uses this order.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "concrete_cement", "healthy_metal", "incomplete", "irregular_metal", "other"};

/// Index of a material name in kClassNames, or nullopt when unknown.
std::optional<int> class_index(std::string_view name);

/// Planar pixel coordinate in the frame of one source map.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BBox {
  Point min;
  Point max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Exterior ring of a roof outline. The closing vertex is never repeated.
class Polygon {
 public:
  /// Throws FeatureError on fewer than 3 vertices or non-finite coordinates.
  /// A trailing vertex equal to the first is dropped.
  explicit Polygon(std::vector<Point> exterior);

  const std::vector<Point>& exterior() const noexcept { return exterior_; }
  std::size_t size() const noexcept { return exterior_.size(); }

  Polygon reversed() const;
  Polygon translated(Point delta) const;

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  std::vector<Point> exterior_;
};

/// Absolute shoelace area, independent of vertex orientation.
double polygon_area(const Polygon& p);

/// Area-weighted centroid; falls back to the vertex mean for zero-area rings.
Point polygon_centroid(const Polygon& p);

BBox polygon_bbox(const Polygon& p);

struct Building {
  std::string id;
  int map_id = 0;
  Polygon polygon;
  std::optional<int> label;
  bool verified = true;

  friend bool operator==(const Building&, const Building&) = default;
};

/// Immutable collection of buildings, possibly spanning several maps.
/// Ids are unique within each map.
class BuildingSet {
 public:
  BuildingSet() = default;
  /// Validates labels, map ids and per-map id uniqueness.
  explicit BuildingSet(std::vector<Building> buildings);

  const std::vector<Building>& buildings() const noexcept { return buildings_; }
  std::size_t size() const noexcept { return buildings_.size(); }
  bool empty() const noexcept { return buildings_.empty(); }
  const Building& operator[](std::size_t i) const { return buildings_[i]; }

  auto begin() const noexcept { return buildings_.begin(); }
  auto end() const noexcept { return buildings_.end(); }

  /// Position of (map_id, id) in buildings(), or nullopt.
  std::optional<std::size_t> find(int map_id, std::string_view id) const;

  static constexpr const std::array<std::string_view, kNumClasses>& class_names() {
    return kClassNames;
  }

  friend bool operator==(const BuildingSet&, const BuildingSet&) = default;

 private:
  std::vector<Building> buildings_;
};

/// Concatenates sets; throws if an (map_id, id) pair repeats.
BuildingSet merge(const std::vector<BuildingSet>& sets);

/// Parses the GeoJSON subset: a FeatureCollection of Polygon features with
/// `id`, optional `roof_material` and optional `verified` properties.
/// Interior rings are ignored and reported through `warnings`.
BuildingSet parse_feature_collection(std::string_view text, int map_id,
                                     std::vector<std::string>* warnings = nullptr);

/// Writes the buildings of one map back to the same GeoJSON subset.
std::string to_feature_collection(const BuildingSet& set);

}  // namespace roofstack
