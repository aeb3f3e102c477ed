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

#include "roofstack/geodata.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "roofstack/error.hpp"

namespace roofstack {

using nlohmann::json;

std::optional<int> class_index(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

Polygon::Polygon(std::vector<Point> exterior) : exterior_(std::move(exterior)) {
  for (const auto& p : exterior_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw FeatureError("polygon has a non-finite coordinate");
    }
  }
  if (exterior_.size() >= 2 && exterior_.front() == exterior_.back()) exterior_.pop_back();
  if (exterior_.size() < 3) {
    throw FeatureError("polygon needs at least 3 distinct ring vertices, got " +
                       std::to_string(exterior_.size()));
  }
}

Polygon Polygon::reversed() const {
  std::vector<Point> pts(exterior_.rbegin(), exterior_.rend());
  return Polygon(std::move(pts));
}

Polygon Polygon::translated(Point delta) const {
  std::vector<Point> pts = exterior_;
  for (auto& p : pts) {
    p.x += delta.x;
    p.y += delta.y;
  }
  return Polygon(std::move(pts));
}

namespace {

// Twice the signed area, accumulated relative to the first vertex so that
// translated copies of a ring produce the same terms.
double signed_area2(const std::vector<Point>& v, Point ref) {
  double acc = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % n];
    acc += (a.x - ref.x) * (b.y - ref.y) - (b.x - ref.x) * (a.y - ref.y);
  }
  return acc;
}

}  // namespace

double polygon_area(const Polygon& p) {
  // Walk the ring from its lexicographically smallest vertex towards the
  // smaller neighbour. A reversed ring yields the same walk, so both
  // orientations accumulate identical terms in identical order.
  const auto& v = p.exterior();
  const std::size_t n = v.size();
  auto less = [](const Point& a, const Point& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  };
  const std::size_t start =
      static_cast<std::size_t>(std::min_element(v.begin(), v.end(), less) - v.begin());
  const bool forward = !less(v[(start + n - 1) % n], v[(start + 1) % n]);
  std::vector<Point> walk(n);
  for (std::size_t i = 0; i < n; ++i) {
    walk[i] = forward ? v[(start + i) % n] : v[(start + n - i) % n];
  }
  return std::abs(signed_area2(walk, walk.front())) / 2.0;
}

Point polygon_centroid(const Polygon& p) {
  const auto& v = p.exterior();
  const Point ref = v.front();
  const double a2 = signed_area2(v, ref);
  const std::size_t n = v.size();
  if (std::abs(a2) <= 1e-12) {
    Point mean;
    for (const auto& q : v) {
      mean.x += q.x;
      mean.y += q.y;
    }
    mean.x /= static_cast<double>(n);
    mean.y /= static_cast<double>(n);
    return mean;
  }
  double cx = 0.0;
  double cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = v[i].x - ref.x, ay = v[i].y - ref.y;
    const double bx = v[(i + 1) % n].x - ref.x, by = v[(i + 1) % n].y - ref.y;
    const double cross = ax * by - bx * ay;
    cx += (ax + bx) * cross;
    cy += (ay + by) * cross;
  }
  return {ref.x + cx / (3.0 * a2), ref.y + cy / (3.0 * a2)};
}

BBox polygon_bbox(const Polygon& p) {
  const auto& v = p.exterior();
  BBox box{v.front(), v.front()};
  for (const auto& q : v) {
    box.min.x = std::min(box.min.x, q.x);
    box.min.y = std::min(box.min.y, q.y);
    box.max.x = std::max(box.max.x, q.x);
    box.max.y = std::max(box.max.y, q.y);
  }
  return box;
}

BuildingSet::BuildingSet(std::vector<Building> buildings) : buildings_(std::move(buildings)) {
  std::set<std::pair<int, std::string>> seen;
  for (const auto& b : buildings_) {
    if (b.map_id < 0 || b.map_id >= kNumMaps) {
      throw FeatureError("building '" + b.id + "' has map id " + std::to_string(b.map_id) +
                         " outside [0," + std::to_string(kNumMaps) + ")");
    }
    if (b.label && (*b.label < 0 || *b.label >= static_cast<int>(kNumClasses))) {
      throw FeatureError("building '" + b.id + "' has label " + std::to_string(*b.label));
    }
    if (!seen.emplace(b.map_id, b.id).second) {
      throw FeatureError("duplicate building id '" + b.id + "' in map " +
                         std::to_string(b.map_id));
    }
  }
}

std::optional<std::size_t> BuildingSet::find(int map_id, std::string_view id) const {
  for (std::size_t i = 0; i < buildings_.size(); ++i) {
    if (buildings_[i].map_id == map_id && buildings_[i].id == id) return i;
  }
  return std::nullopt;
}

BuildingSet merge(const std::vector<BuildingSet>& sets) {
  std::vector<Building> all;
  for (const auto& s : sets) all.insert(all.end(), s.begin(), s.end());
  return BuildingSet(std::move(all));
}

namespace {

std::string feature_label(const json& feature, std::size_t index) {
  if (feature.contains("properties") && feature["properties"].is_object()) {
    const auto& props = feature["properties"];
    if (props.contains("id")) {
      const auto& id = props["id"];
      return id.is_string() ? id.get<std::string>() : id.dump();
    }
  }
  return "#" + std::to_string(index);
}

Point parse_point(const json& coord, const std::string& id) {
  if (!coord.is_array() || coord.size() < 2 || !coord[0].is_number() || !coord[1].is_number()) {
    throw FeatureError("feature '" + id + "': coordinate is not a [x, y] number pair");
  }
  return {coord[0].get<double>(), coord[1].get<double>()};
}

}  // namespace

BuildingSet parse_feature_collection(std::string_view text, int map_id,
                                     std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed GeoJSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object() || doc.value("type", std::string{}) != "FeatureCollection") {
    throw ParseError("document is not a GeoJSON FeatureCollection", 0);
  }
  if (!doc.contains("features") || !doc["features"].is_array()) {
    throw ParseError("FeatureCollection has no 'features' array", 0);
  }

  std::vector<Building> buildings;
  const auto& features = doc["features"];
  buildings.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const std::string label_text = feature_label(f, i);
    if (!f.is_object() || !f.contains("properties") || !f["properties"].is_object() ||
        !f["properties"].contains("id")) {
      throw FeatureError("feature '" + label_text + "' has no 'id' property");
    }
    const auto& props = f["properties"];
    const auto& geom = f.contains("geometry") ? f["geometry"] : json();
    if (!geom.is_object() || geom.value("type", std::string{}) != "Polygon") {
      throw FeatureError("feature '" + label_text + "' geometry is not a Polygon");
    }
    const auto& rings = geom.contains("coordinates") ? geom["coordinates"] : json();
    if (!rings.is_array() || rings.empty() || !rings[0].is_array()) {
      throw FeatureError("feature '" + label_text + "' has no exterior ring");
    }
    if (rings.size() > 1 && warnings) {
      warnings->push_back("feature '" + label_text + "': " + std::to_string(rings.size() - 1) +
                          " interior ring(s) ignored");
    }
    std::vector<Point> pts;
    pts.reserve(rings[0].size());
    for (const auto& c : rings[0]) pts.push_back(parse_point(c, label_text));

    std::optional<int> label;
    if (props.contains("roof_material") && !props["roof_material"].is_null()) {
      const auto& mat = props["roof_material"];
      if (!mat.is_string()) {
        throw FeatureError("feature '" + label_text + "': roof_material is not a string");
      }
      const auto name = mat.get<std::string>();
      label = class_index(name);
      if (!label) {
        throw FeatureError("feature '" + label_text + "': unknown roof material '" + name + "'");
      }
    }
    bool verified = true;
    if (props.contains("verified") && !props["verified"].is_null()) {
      if (!props["verified"].is_boolean()) {
        throw FeatureError("feature '" + label_text + "': verified is not a boolean");
      }
      verified = props["verified"].get<bool>();
    }

    try {
      buildings.push_back(Building{label_text, map_id, Polygon(std::move(pts)), label, verified});
    } catch (const FeatureError& e) {
      throw FeatureError("feature '" + label_text + "': " + e.what());
    }
  }
  return BuildingSet(std::move(buildings));
}

std::string to_feature_collection(const BuildingSet& set) {
  json features = json::array();
  for (const auto& b : set) {
    json ring = json::array();
    for (const auto& p : b.polygon.exterior()) ring.push_back({p.x, p.y});
    ring.push_back({b.polygon.exterior().front().x, b.polygon.exterior().front().y});
    json props = {{"id", b.id}, {"verified", b.verified}};
    if (b.label) props["roof_material"] = std::string(kClassNames[*b.label]);
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                        {"properties", props}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", features}};
  return doc.dump(1);
}

}  // namespace roofstack
