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

#include "roofstack/spatial_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "roofstack/csv.hpp"
#include "roofstack/error.hpp"
#include "roofstack/parallel.hpp"

namespace roofstack {

namespace {

constexpr int kMaxGridCells = 2048;

double distance(Point a, Point b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

SpatialIndex::SpatialIndex(const BuildingSet& set) {
  const std::size_t n = set.size();
  centroids_.reserve(n);
  map_ids_.reserve(n);
  ids_.reserve(n);
  std::map<int, std::vector<std::size_t>> by_map;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = set[i];
    centroids_.push_back(polygon_centroid(b.polygon));
    map_ids_.push_back(b.map_id);
    ids_.push_back(b.id);
    lookup_.emplace(std::pair{b.map_id, b.id}, i);
    by_map[b.map_id].push_back(i);
  }
  for (const auto& [map, members] : by_map) {
    Grid g;
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = max_x;
    g.min_x = std::numeric_limits<double>::infinity();
    g.min_y = g.min_x;
    for (auto i : members) {
      g.min_x = std::min(g.min_x, centroids_[i].x);
      g.min_y = std::min(g.min_y, centroids_[i].y);
      max_x = std::max(max_x, centroids_[i].x);
      max_y = std::max(max_y, centroids_[i].y);
    }
    const double w = max_x - g.min_x, h = max_y - g.min_y;
    const double extent = std::max(w, h);
    g.cell = std::sqrt(std::max(w * h, 0.0) / static_cast<double>(members.size()));
    g.cell = std::max({g.cell, extent / kMaxGridCells, 1e-9});
    g.nx = std::min(kMaxGridCells, static_cast<int>(w / g.cell) + 1);
    g.ny = std::min(kMaxGridCells, static_cast<int>(h / g.cell) + 1);
    g.cells.resize(static_cast<std::size_t>(g.nx) * g.ny);
    for (auto i : members) {
      const auto [cx, cy] = cell_of(g, centroids_[i]);
      g.cells[static_cast<std::size_t>(cy) * g.nx + cx].push_back(i);
    }
    grids_.emplace(map, std::move(g));
  }
}

std::optional<std::size_t> SpatialIndex::find(int map_id, std::string_view id) const {
  const auto it = lookup_.find(std::pair{map_id, std::string(id)});
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

const SpatialIndex::Grid& SpatialIndex::grid_for(int map_id) const { return grids_.at(map_id); }

std::pair<int, int> SpatialIndex::cell_of(const Grid& g, Point p) const {
  const int cx = std::clamp(static_cast<int>(std::floor((p.x - g.min_x) / g.cell)), 0, g.nx - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((p.y - g.min_y) / g.cell)), 0, g.ny - 1);
  return {cx, cy};
}

KnnResult SpatialIndex::knn(std::size_t query, std::size_t k) const {
  if (k == 0) throw ParameterError("knn needs k >= 1");
  const Grid& g = grid_for(map_ids_[query]);
  const Point q = centroids_[query];
  const auto [qx, qy] = cell_of(g, q);
  auto closer = [this](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && ids_[a.index] < ids_[b.index]);
  };

  std::vector<Neighbor> found;
  const int max_ring = std::max(g.nx, g.ny);
  for (int ring = 0; ring <= max_ring; ++ring) {
    for (int cy = qy - ring; cy <= qy + ring; ++cy) {
      if (cy < 0 || cy >= g.ny) continue;
      const bool edge_row = cy == qy - ring || cy == qy + ring;
      for (int cx = qx - ring; cx <= qx + ring; cx += (edge_row || ring == 0) ? 1 : 2 * ring) {
        if (cx < 0 || cx >= g.nx) continue;
        for (auto i : g.cells[static_cast<std::size_t>(cy) * g.nx + cx]) {
          if (i != query) found.push_back({i, distance(q, centroids_[i])});
        }
      }
    }
    if (found.size() >= k) {
      std::nth_element(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k - 1), found.end(), closer);
      const double kth = found[k - 1].distance;
      // Cells beyond this ring are at least ring * cell away from the query.
      if (kth + 1e-9 * g.cell < ring * g.cell) break;
    }
  }
  std::sort(found.begin(), found.end(), closer);
  KnnResult result;
  result.shortfall = found.size() < k;
  if (found.size() > k) found.resize(k);
  result.neighbors = std::move(found);
  return result;
}

std::vector<Neighbor> SpatialIndex::radius_query(std::size_t query, double r) const {
  if (!(r > 0.0)) throw ParameterError("radius must be positive");
  const Grid& g = grid_for(map_ids_[query]);
  const Point q = centroids_[query];
  const auto [qx, qy] = cell_of(g, q);
  const int reach = static_cast<int>(std::min<double>(std::ceil(r / g.cell) + 1, kMaxGridCells));
  std::vector<Neighbor> found;
  for (int cy = std::max(0, qy - reach); cy <= std::min(g.ny - 1, qy + reach); ++cy)
    for (int cx = std::max(0, qx - reach); cx <= std::min(g.nx - 1, qx + reach); ++cx)
      for (auto i : g.cells[static_cast<std::size_t>(cy) * g.nx + cx]) {
        if (i == query) continue;
        const double d = distance(q, centroids_[i]);
        if (d <= r) found.push_back({i, d});
      }
  std::sort(found.begin(), found.end(), [this](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && ids_[a.index] < ids_[b.index]);
  });
  return found;
}

SpatialIndex build_index(const BuildingSet& set) { return SpatialIndex(set); }

namespace {

std::size_t locate(const SpatialIndex& idx, const Building& b) {
  const auto i = idx.find(b.map_id, b.id);
  if (!i) throw ParameterError("building '" + b.id + "' is not in the spatial index");
  return *i;
}

}  // namespace

KnnResult knn(const SpatialIndex& idx, const Building& b, std::size_t k) { return idx.knn(locate(idx, b), k); }

std::vector<Neighbor> radius_query(const SpatialIndex& idx, const Building& b, double r) {
  return idx.radius_query(locate(idx, b), r);
}

LabelDistribution label_distribution(const std::vector<std::optional<int>>& labels) {
  LabelDistribution d;
  for (const auto& l : labels) {
    if (!l) continue;
    d.probs[static_cast<std::size_t>(*l)] += 1.0;
    ++d.labeled_count;
  }
  if (d.labeled_count == 0) {
    d.probs.fill(1.0 / kNumClasses);
    return d;
  }
  for (auto& p : d.probs) p /= d.labeled_count;
  return d;
}

LabelDistribution label_distribution(const BuildingSet& set, const std::vector<Neighbor>& neighbors) {
  std::vector<std::optional<int>> labels;
  labels.reserve(neighbors.size());
  for (const auto& n : neighbors) labels.push_back(set[n.index].label);
  return label_distribution(labels);
}

void FeatureConfig::validate() const {
  if (k_neighbors < 1) throw ParameterError("k_neighbors must be >= 1");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ParameterError("radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw ParameterError("radii must be strictly ascending");
  }
}

void to_json(nlohmann::json& j, const FeatureConfig& cfg) {
  j = {{"k_neighbors", cfg.k_neighbors}, {"radii", cfg.radii}, {"normalize_coords", cfg.normalize_coords}};
}

void from_json(const nlohmann::json& j, FeatureConfig& cfg) {
  cfg = FeatureConfig{};
  if (j.contains("k_neighbors")) cfg.k_neighbors = j.at("k_neighbors").get<std::size_t>();
  if (j.contains("radii")) cfg.radii = j.at("radii").get<std::vector<double>>();
  if (j.contains("normalize_coords")) cfg.normalize_coords = j.at("normalize_coords").get<bool>();
  cfg.validate();
}

std::vector<std::string> FeatureMatrix::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::size_t feature_column_count(std::size_t n_models, const FeatureConfig& cfg) {
  return n_models * kNumClasses + kNumMaps + 2 + 2 + cfg.k_neighbors * 4 + kNumClasses +
         cfg.radii.size() * (kNumClasses + 1);
}

namespace {

std::vector<ColumnInfo> feature_columns(const std::vector<std::string>& model_names, const FeatureConfig& cfg) {
  std::vector<ColumnInfo> cols;
  for (const auto& m : model_names)
    for (auto cls : kClassNames) cols.push_back({"oof_" + m + "_" + std::string(cls), "oof", ""});
  for (int m = 0; m < kNumMaps; ++m) cols.push_back({"map_" + std::to_string(m), "map_onehot", ""});
  cols.push_back({"area", "area", "squared pixels"});
  cols.push_back({"log_area", "area", "log(1 + area)"});
  const std::string coord_note = cfg.normalize_coords ? "per-map bbox normalized to [0,1]" : "pixels";
  cols.push_back({"centroid_x", "location", coord_note});
  cols.push_back({"centroid_y", "location", coord_note});
  for (std::size_t r = 1; r <= cfg.k_neighbors; ++r) {
    const std::string p = "knn" + std::to_string(r) + "_";
    cols.push_back({p + "distance", "knn", "missing neighbor: 2 x map diagonal"});
    cols.push_back({p + "area", "knn", "missing neighbor: 0"});
    cols.push_back({p + "dx", "knn", "missing neighbor: 0"});
    cols.push_back({p + "dy", "knn", "missing neighbor: 0"});
  }
  for (auto cls : kClassNames) {
    cols.push_back({"knn_label_" + std::string(cls), "knn_label_distribution", "no labeled neighbors: 0.2"});
  }
  for (double r : cfg.radii) {
    for (auto cls : kClassNames) {
      cols.push_back({"radius" + format_double(r) + "_label_" + std::string(cls), "radius_label_distribution",
                      "no labeled neighbors: 0.2"});
    }
  }
  for (double r : cfg.radii) {
    cols.push_back({"radius" + format_double(r) + "_labeled_count", "labeled_neighbor_count", ""});
  }
  return cols;
}

struct MapFrame {
  BBox box;
  double diagonal = 0.0;
};

}  // namespace

FeatureMatrix assemble_features(const BuildingSet& set, const SpatialIndex& idx, const std::vector<Matrix>& oof,
                                const std::vector<std::string>& model_names, const FeatureConfig& cfg,
                                unsigned threads) {
  cfg.validate();
  if (oof.size() != model_names.size()) throw DimensionError("one model name per OOF matrix is required");
  for (const auto& m : oof) {
    if (m.rows != set.size() || m.cols != kNumClasses) {
      throw DimensionError("OOF matrix is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ", expected " +
                           std::to_string(set.size()) + "x" + std::to_string(kNumClasses));
    }
  }
  if (idx.size() != set.size()) throw DimensionError("spatial index does not match the building set");

  std::map<int, MapFrame> frames;
  for (const auto& b : set) {
    const BBox pb = polygon_bbox(b.polygon);
    auto [it, fresh] = frames.try_emplace(b.map_id, MapFrame{pb, 0.0});
    if (!fresh) {
      auto& box = it->second.box;
      box.min.x = std::min(box.min.x, pb.min.x);
      box.min.y = std::min(box.min.y, pb.min.y);
      box.max.x = std::max(box.max.x, pb.max.x);
      box.max.y = std::max(box.max.y, pb.max.y);
    }
  }
  for (auto& [map, f] : frames) f.diagonal = std::hypot(f.box.width(), f.box.height());

  FeatureMatrix fm;
  fm.columns = feature_columns(model_names, cfg);
  fm.values = Matrix(set.size(), fm.columns.size());
  std::vector<double> areas(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) areas[i] = polygon_area(set[i].polygon);

  parallel_for(set.size(), threads, [&](std::size_t i) {
    const Building& b = set[i];
    const MapFrame& frame = frames.at(b.map_id);
    auto row = fm.values.row(i);
    std::size_t c = 0;
    for (const auto& m : oof)
      for (std::size_t k = 0; k < kNumClasses; ++k) row[c++] = m(i, k);
    for (int m = 0; m < kNumMaps; ++m) row[c++] = b.map_id == m ? 1.0 : 0.0;
    row[c++] = areas[i];
    row[c++] = std::log1p(areas[i]);
    const Point cen = idx.centroid(i);
    if (cfg.normalize_coords) {
      const double w = frame.box.width(), h = frame.box.height();
      row[c++] = w > 0.0 ? (cen.x - frame.box.min.x) / w : 0.5;
      row[c++] = h > 0.0 ? (cen.y - frame.box.min.y) / h : 0.5;
    } else {
      row[c++] = cen.x;
      row[c++] = cen.y;
    }
    const KnnResult nn = idx.knn(i, cfg.k_neighbors);
    for (std::size_t r = 0; r < cfg.k_neighbors; ++r) {
      if (r < nn.neighbors.size()) {
        const auto& n = nn.neighbors[r];
        const Point p = idx.centroid(n.index);
        row[c++] = n.distance;
        row[c++] = areas[n.index];
        row[c++] = p.x - cen.x;
        row[c++] = p.y - cen.y;
      } else {
        row[c++] = 2.0 * frame.diagonal;
        row[c++] = 0.0;
        row[c++] = 0.0;
        row[c++] = 0.0;
      }
    }
    for (double p : label_distribution(set, nn.neighbors).probs) row[c++] = p;
    std::vector<int> counts;
    for (double r : cfg.radii) {
      const auto d = label_distribution(set, idx.radius_query(i, r));
      for (double p : d.probs) row[c++] = p;
      counts.push_back(d.labeled_count);
    }
    for (int n : counts) row[c++] = n;
  });
  return fm;
}

std::string features_to_csv(const BuildingSet& set, const FeatureMatrix& fm) {
  std::string out = "building_id,map_id";
  for (const auto& c : fm.columns) out += "," + csv_field(c.name);
  out += "\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    out += csv_field(set[i].id);
    out += ",";
    out += std::to_string(set[i].map_id);
    for (double v : fm.values.row(i)) {
      out += ",";
      out += format_double(v);
    }
    out += "\n";
  }
  return out;
}

FeatureTable features_from_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  if (t.header.size() < 2 || t.header[0] != "building_id" || t.header[1] != "map_id") {
    throw FormatError("feature CSV must start with building_id,map_id");
  }
  FeatureTable ft;
  ft.columns.assign(t.header.begin() + 2, t.header.end());
  ft.values = Matrix(t.rows.size(), ft.columns.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ft.keys.emplace_back(static_cast<int>(parse_int(t.rows[r][1])), t.rows[r][0]);
    for (std::size_t c = 0; c < ft.columns.size(); ++c) ft.values(r, c) = parse_double(t.rows[r][c + 2]);
  }
  return ft;
}

std::string features_sidecar_json(const FeatureConfig& cfg, const FeatureMatrix& fm) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : fm.columns) cols.push_back({{"name", c.name}, {"group", c.group}, {"note", c.note}});
  nlohmann::json doc = {{"config", cfg}, {"n_rows", fm.values.rows}, {"columns", cols}};
  return doc.dump(2) + "\n";
}

}  // namespace roofstack
