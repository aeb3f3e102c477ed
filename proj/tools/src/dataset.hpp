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

#include <string>
#include <vector>

#include "roofstack/geodata.hpp"
#include "roofstack/raster.hpp"

namespace roofstack::cli {

struct MapSource {
  int map_id = 0;
  std::string geojson;  // resolved paths
  std::string image;
};

/// What `ingest` writes: the maps of a run plus their parsed buildings.
struct Dataset {
  std::vector<MapSource> maps;
  BuildingSet buildings;  // maps in listed order, features in file order
};

/// `dataset.json` stores paths relative to its own directory.
Dataset load_dataset(const std::string& path);
std::string dataset_json(const Dataset& d, const std::string& dataset_path,
                         const std::vector<std::string>& warnings);

ImageRGB load_image(const std::string& path);
const MapSource& map_source(const Dataset& d, int map_id);

/// Atomic binary write.
void write_bytes_atomic(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace roofstack::cli
