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

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roofstack/geodata.hpp"
#include "roofstack/matrix.hpp"

namespace roofstack {

struct Neighbor {
  std::size_t index = 0;  // position in the indexed BuildingSet
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct KnnResult {
  std::vector<Neighbor> neighbors;  // ascending (distance, id)
  bool shortfall = false;           // fewer than k same-map buildings exist
};

/// Uniform-grid index over building centroids, one grid per map. Immutable
/// after construction; concurrent queries are safe.
class SpatialIndex {
 public:
  explicit SpatialIndex(const BuildingSet& set);

  std::size_t size() const noexcept { return centroids_.size(); }
  Point centroid(std::size_t i) const { return centroids_[i]; }
  int map_id(std::size_t i) const { return map_ids_[i]; }
  const std::string& id(std::size_t i) const { return ids_[i]; }

  /// Position of (map_id, id), or nullopt.
  std::optional<std::size_t> find(int map_id, std::string_view id) const;

  /// k nearest same-map buildings, excluding `query` itself. Ties are
  /// broken by ascending building id.
  KnnResult knn(std::size_t query, std::size_t k) const;

  /// Same-map buildings with centroid distance <= r, excluding `query`,
  /// ordered by (distance, id).
  std::vector<Neighbor> radius_query(std::size_t query, double r) const;

 private:
  struct Grid {
    double min_x = 0.0, min_y = 0.0;
    double cell = 1.0;
    int nx = 1, ny = 1;
    std::vector<std::vector<std::size_t>> cells;
  };

  const Grid& grid_for(int map_id) const;
  std::pair<int, int> cell_of(const Grid& g, Point p) const;

  std::vector<Point> centroids_;
  std::vector<int> map_ids_;
  std::vector<std::string> ids_;
  std::map<std::pair<int, std::string>, std::size_t, std::less<>> lookup_;
  std::map<int, Grid> grids_;
};

SpatialIndex build_index(const BuildingSet& set);

/// Convenience wrappers taking the query building itself.
KnnResult knn(const SpatialIndex& idx, const Building& b, std::size_t k);
std::vector<Neighbor> radius_query(const SpatialIndex& idx, const Building& b, double r);

struct LabelDistribution {
  ProbVector probs{};
  int labeled_count = 0;
};

/// Normalized class histogram of the labeled entries; uniform 1/5 with
/// labeled_count 0 when none are labeled.
LabelDistribution label_distribution(const std::vector<std::optional<int>>& labels);
LabelDistribution label_distribution(const BuildingSet& set, const std::vector<Neighbor>& neighbors);

struct FeatureConfig {
  std::size_t k_neighbors = 8;
  std::vector<double> radii = {100.0, 300.0, 1000.0};
  bool normalize_coords = true;

  /// Throws ParameterError unless k >= 1 and radii are positive ascending.
  void validate() const;
};

void to_json(nlohmann::json& j, const FeatureConfig& cfg);
void from_json(const nlohmann::json& j, FeatureConfig& cfg);

struct ColumnInfo {
  std::string name;
  std::string group;
  std::string note;  // sentinel or unit description, may be empty
};

struct FeatureMatrix {
  Matrix values;  // one row per building, input order
  std::vector<ColumnInfo> columns;

  std::vector<std::string> column_names() const;
};

/// Second-level inputs for every building: base-model OOF probabilities,
/// map one-hot, area, location, k-NN block, k-NN and radius label
/// distributions. `oof` holds one matrix per base model, rows aligned with
/// `set`, kNumClasses columns each.
FeatureMatrix assemble_features(const BuildingSet& set, const SpatialIndex& idx,
                                const std::vector<Matrix>& oof, const std::vector<std::string>& model_names,
                                const FeatureConfig& cfg, unsigned threads = 1);

/// Column count produced by assemble_features.
std::size_t feature_column_count(std::size_t n_models, const FeatureConfig& cfg);

/// CSV with header `building_id,map_id,<columns...>`.
std::string features_to_csv(const BuildingSet& set, const FeatureMatrix& fm);

struct FeatureTable {
  std::vector<std::pair<int, std::string>> keys;  // (map_id, building_id)
  std::vector<std::string> columns;
  Matrix values;
};

FeatureTable features_from_csv(std::string_view text);

/// Sidecar describing the config and the column layout.
std::string features_sidecar_json(const FeatureConfig& cfg, const FeatureMatrix& fm);

}  // namespace roofstack
