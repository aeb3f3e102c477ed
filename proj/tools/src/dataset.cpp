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

#include "dataset.hpp"

#include <filesystem>

#include <nlohmann/json.hpp>

#include "roofstack/csv.hpp"
#include "roofstack/error.hpp"

namespace roofstack::cli {
namespace fs = std::filesystem;

Dataset load_dataset(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("dataset '" + path + "': " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  Dataset d;
  std::vector<BuildingSet> sets;
  try {
    for (const auto& m : j.at("maps")) {
      MapSource s;
      s.map_id = m.at("map_id").get<int>();
      s.geojson = (base / m.at("geojson").get<std::string>()).string();
      s.image = (base / m.at("image").get<std::string>()).string();
      sets.push_back(parse_feature_collection(read_text_file(s.geojson), s.map_id));
      d.maps.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("dataset '" + path + "': " + e.what());
  }
  d.buildings = merge(sets);
  return d;
}

std::string dataset_json(const Dataset& d, const std::string& dataset_path, const std::vector<std::string>& warnings) {
  const fs::path base = fs::absolute(dataset_path).parent_path();
  nlohmann::ordered_json j;
  j["maps"] = nlohmann::ordered_json::array();
  for (const auto& m : d.maps) {
    std::size_t n = 0, labeled = 0;
    for (const auto& b : d.buildings)
      if (b.map_id == m.map_id) {
        ++n;
        labeled += b.label.has_value();
      }
    j["maps"].push_back({{"map_id", m.map_id},
                         {"geojson", fs::relative(fs::absolute(m.geojson), base).generic_string()},
                         {"image", fs::relative(fs::absolute(m.image), base).generic_string()},
                         {"buildings", n},
                         {"labeled", labeled}});
  }
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

ImageRGB load_image(const std::string& path) { return decode_png_rgb(read_file_bytes(path)); }

const MapSource& map_source(const Dataset& d, int map_id) {
  for (const auto& m : d.maps)
    if (m.map_id == map_id) return m;
  throw FormatError("dataset has no map " + std::to_string(map_id));
}

void write_bytes_atomic(const std::string& path, std::span<const std::uint8_t> bytes) {
  write_text_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace roofstack::cli
