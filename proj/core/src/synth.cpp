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

#include "roofstack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "roofstack/error.hpp"
#include "roofstack/rng.hpp"

namespace roofstack {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

struct Rect {
  int x0, y0, x1, y1;  // half-open pixel extent
};

bool overlaps(const Rect& a, const Rect& b, int gap) {
  return a.x0 < b.x1 + gap && b.x0 < a.x1 + gap && a.y0 < b.y1 + gap && b.y0 < a.y1 + gap;
}

int draw_class(Rng& rng, const ProbVector& prior) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    acc += prior[c];
    if (u < acc) return static_cast<int>(c);
  }
  return kNumClasses - 1;
}

}  // namespace

Palette default_palette() {
  return {{
      {{165.0, 163.0, 158.0}, 12.0, 6.0},  // concrete_cement
      {{182.0, 192.0, 208.0}, 12.0, 6.0},  // healthy_metal
      {{152.0, 128.0, 98.0}, 12.0, 6.0},   // incomplete
      {{150.0, 150.0, 162.0}, 12.0, 6.0},  // irregular_metal
      {{98.0, 122.0, 88.0}, 12.0, 6.0},    // other
  }};
}

void SynthParams::validate() const {
  if (map_id < 0 || map_id >= kNumMaps) throw ParameterError("map_id must be in [0,7)");
  if (map_size < 1) throw ParameterError("map_size must be positive");
  if (n_buildings < 0) throw ParameterError("n_buildings must be non-negative");
  if (n_label_clusters < 1) throw ParameterError("n_label_clusters must be positive");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ParameterError("label_noise must be in [0,1]");
  double sum = 0.0;
  for (double p : class_prior) {
    if (!(p >= 0.0)) throw ParameterError("class prior entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ParameterError("class prior must sum to 1");
  if (building_size.lo < 1 || building_size.hi < building_size.lo) throw ParameterError("invalid building size range");
  if (building_size.hi > map_size) throw ParameterError("buildings larger than the map");
  if (min_gap < 0) throw ParameterError("min_gap must be non-negative");
  for (const auto& t : palette) {
    if (!(t.building_sd >= 0.0 && t.pixel_sd >= 0.0)) throw ParameterError("palette deviations must be non-negative");
  }
}

void to_json(nlohmann::json& j, const SynthParams& p) {
  nlohmann::json palette = nlohmann::json::array();
  for (const auto& t : p.palette)
    palette.push_back({{"mean", t.mean}, {"building_sd", t.building_sd}, {"pixel_sd", t.pixel_sd}});
  j = {{"map_id", p.map_id},
       {"map_size", p.map_size},
       {"n_buildings", p.n_buildings},
       {"n_label_clusters", p.n_label_clusters},
       {"label_noise", p.label_noise},
       {"class_prior", p.class_prior},
       {"building_size", {p.building_size.lo, p.building_size.hi}},
       {"min_gap", p.min_gap},
       {"palette", palette},
       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, SynthParams& p) {
  p = SynthParams{};
  p.map_id = j.value("map_id", p.map_id);
  p.map_size = j.value("map_size", p.map_size);
  p.n_buildings = j.value("n_buildings", p.n_buildings);
  p.n_label_clusters = j.value("n_label_clusters", p.n_label_clusters);
  p.label_noise = j.value("label_noise", p.label_noise);
  if (j.contains("class_prior")) p.class_prior = j.at("class_prior").get<ProbVector>();
  if (j.contains("building_size")) {
    p.building_size.lo = j.at("building_size").at(0).get<int>();
    p.building_size.hi = j.at("building_size").at(1).get<int>();
  }
  p.min_gap = j.value("min_gap", p.min_gap);
  if (j.contains("palette")) {
    const auto& a = j.at("palette");
    if (a.size() != kNumClasses) throw FormatError("palette needs 5 entries");
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      p.palette[c].mean = a[c].at("mean").get<std::array<double, 3>>();
      p.palette[c].building_sd = a[c].at("building_sd").get<double>();
      p.palette[c].pixel_sd = a[c].at("pixel_sd").get<double>();
    }
  }
  p.seed = j.value("seed", p.seed);
  p.validate();
}

SynthMap generate_map(const SynthParams& p) {
  p.validate();
  Rng rng(combine_seed(p.seed, static_cast<std::uint64_t>(p.map_id)));

  // Cluster centers and their dominant classes.
  std::vector<Point> centers;
  std::vector<int> dominant;
  for (int c = 0; c < p.n_label_clusters; ++c) {
    centers.push_back({rng.uniform(0.0, p.map_size), rng.uniform(0.0, p.map_size)});
    dominant.push_back(draw_class(rng, p.class_prior));
  }

  std::vector<Rect> rects;
  constexpr int kAttemptsPerBuilding = 500;
  for (int i = 0; i < p.n_buildings; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttemptsPerBuilding && !placed; ++attempt) {
      const int w = static_cast<int>(rng.uniform_int(p.building_size.lo, p.building_size.hi));
      const int h = static_cast<int>(rng.uniform_int(p.building_size.lo, p.building_size.hi));
      if (w > p.map_size || h > p.map_size) continue;
      const int x0 = static_cast<int>(rng.uniform_int(0, p.map_size - w));
      const int y0 = static_cast<int>(rng.uniform_int(0, p.map_size - h));
      const Rect r{x0, y0, x0 + w, y0 + h};
      if (std::none_of(rects.begin(), rects.end(), [&](const Rect& o) { return overlaps(r, o, p.min_gap); })) {
        rects.push_back(r);
        placed = true;
      }
    }
    if (!placed) {
      throw CapacityError("could not place building " + std::to_string(i) + " of " +
                          std::to_string(p.n_buildings) + " on a " + std::to_string(p.map_size) + " px map");
    }
  }

  ImageRGB img(p.map_size, p.map_size);
  for (int y = 0; y < p.map_size; ++y) {
    for (int x = 0; x < p.map_size; ++x) {
      auto* px = img.at(x, y);
      px[0] = to_byte(rng.normal(96.0, 8.0));
      px[1] = to_byte(rng.normal(104.0, 8.0));
      px[2] = to_byte(rng.normal(92.0, 8.0));
    }
  }

  std::vector<Building> buildings;
  buildings.reserve(rects.size());
  for (std::size_t i = 0; i < rects.size(); ++i) {
    const Rect& r = rects[i];
    const double cx = 0.5 * (r.x0 + r.x1);
    const double cy = 0.5 * (r.y0 + r.y1);
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = (centers[c].x - cx) * (centers[c].x - cx) + (centers[c].y - cy) * (centers[c].y - cy);
      if (d < best) {
        best = d;
        nearest = c;
      }
    }
    int label = dominant[nearest];
    if (rng.bernoulli(p.label_noise)) label = static_cast<int>(rng.uniform_int(0, kNumClasses - 1));

    const auto& tex = p.palette[static_cast<std::size_t>(label)];
    std::array<double, 3> colour{};
    for (std::size_t ch = 0; ch < 3; ++ch) colour[ch] = rng.normal(tex.mean[ch], tex.building_sd);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        auto* px = img.at(x, y);
        for (std::size_t ch = 0; ch < 3; ++ch) px[ch] = to_byte(rng.normal(colour[ch], tex.pixel_sd));
      }
    }

    char id[32];
    std::snprintf(id, sizeof id, "m%d_b%05zu", p.map_id, i);
    buildings.push_back(Building{id, p.map_id,
                                 Polygon({{double(r.x0), double(r.y0)},
                                          {double(r.x1), double(r.y0)},
                                          {double(r.x1), double(r.y1)},
                                          {double(r.x0), double(r.y1)}}),
                                 label, true});
  }
  return SynthMap{std::move(img), BuildingSet(std::move(buildings))};
}

void OracleParams::validate() const {
  if (!(confusion_level >= 0.0 && confusion_level <= 1.0)) throw ParameterError("confusion_level must be in [0,1]");
}

OracleModel::OracleModel(OracleParams params, Palette palette, std::string name)
    : params_(params), palette_(palette), name_(std::move(name)) {
  params_.validate();
}

int OracleModel::nearest_class(const Chip& chip) const {
  std::array<double, 3> sum{};
  std::size_t n = 0;
  const auto pixels = static_cast<std::size_t>(chip.width) * static_cast<std::size_t>(chip.height);
  const bool any_mask = std::any_of(chip.mask.begin(), chip.mask.end(), [](std::uint8_t m) { return m != 0; });
  for (std::size_t i = 0; i < pixels; ++i) {
    if (any_mask && chip.mask[i] == 0) continue;
    for (std::size_t ch = 0; ch < 3; ++ch) sum[ch] += chip.rgb[i * 3 + ch];
    ++n;
  }
  if (n == 0) return 0;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double d = 0.0;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double diff = sum[ch] / static_cast<double>(n) - palette_[c].mean[ch];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

ProbVector OracleModel::predict(const Chip& chip) const {
  const int cls = nearest_class(chip);
  std::uint64_t h = fnv1a64(std::span<const std::uint8_t>(chip.rgb));
  h = fnv1a64(std::span<const std::uint8_t>(chip.mask), h);
  Rng rng(combine_seed(params_.seed, h));
  ProbVector noise{};
  double noise_sum = 0.0;
  for (auto& v : noise) {
    v = -std::log(1.0 - rng.uniform());  // Exp(1): normalized gives a flat Dirichlet draw
    noise_sum += v;
  }
  const double c = params_.confusion_level;
  ProbVector out{};
  double total = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    out[k] = c * noise[k] / noise_sum + (static_cast<int>(k) == cls ? 1.0 - c : 0.0);
    total += out[k];
  }
  for (auto& v : out) v /= total;
  return out;
}

HiddenSplit hide_labels(const BuildingSet& set, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ParameterError("test_fraction must be in (0,1)");
  std::vector<bool> hidden(set.size(), false);
  for (int map = 0; map < kNumMaps; ++map) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (set[i].map_id == map && set[i].label) rows.push_back(i);
    if (rows.empty()) continue;
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return set[a].id < set[b].id; });
    Rng rng(combine_seed(seed, static_cast<std::uint64_t>(map)));
    rng.shuffle(rows.begin(), rows.end());
    const auto n_hide = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    for (std::size_t j = 0; j < n_hide; ++j) hidden[rows[j]] = true;
  }
  HiddenSplit out;
  std::vector<Building> kept;
  kept.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    Building b = set[i];
    if (hidden[i]) {
      out.truth.emplace_back(b.map_id, b.id, *b.label);
      b.label.reset();
    }
    kept.push_back(std::move(b));
  }
  out.train = BuildingSet(std::move(kept));
  return out;
}

}  // namespace roofstack
