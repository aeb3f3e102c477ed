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

#include "synthetic_benchmark.hpp"

#include <algorithm>
#include <map>

#include "roofstack/parallel.hpp"
#include "roofstack/raster.hpp"
#include "roofstack/spatial_features.hpp"

namespace roofstack::testing {

BenchmarkResult run_synthetic_benchmark(const BenchmarkConfig& cfg) {
  std::vector<SynthMap> maps;
  std::vector<BuildingSet> sets;
  for (int m = 0; m < cfg.n_maps; ++m) {
    SynthParams p;
    p.map_id = m;
    p.n_buildings = cfg.buildings_per_map;
    p.label_noise = cfg.label_noise;
    p.seed = cfg.seed;
    maps.push_back(generate_map(p));
    sets.push_back(maps.back().buildings);
  }
  const BuildingSet all = merge(sets);
  const HiddenSplit split = hide_labels(all, cfg.test_fraction, cfg.seed);
  const BuildingSet& train = split.train;

  const std::vector<OracleModel> models = {
      OracleModel({cfg.confusion_level, cfg.seed + 1}, default_palette(), "oracle_a"),
      OracleModel({cfg.confusion_level, cfg.seed + 2}, default_palette(), "oracle_b"),
  };

  // Base predictions per building; oracles are not trained, so every fold
  // model of a base model shares them.
  std::vector<Matrix> raw(models.size(), Matrix(train.size(), kNumClasses));
  parallel_for(train.size(), cfg.threads, [&](std::size_t i) {
    const Building& b = train[i];
    const Chip chip = extract_chip(maps[static_cast<std::size_t>(b.map_id)].image, b, cfg.margin);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const ProbVector p = models[m].predict(chip);
      std::copy(p.begin(), p.end(), raw[m].row(i).begin());
    }
  });

  const FoldAssignment folds = make_folds(train, cfg.folds, cfg.seed);
  BenchmarkResult out;
  std::vector<Matrix> oof;
  std::vector<std::size_t> labeled;
  std::vector<int> y;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].label) {
      labeled.push_back(i);
      y.push_back(*train[i].label);
    }
  }
  std::map<std::pair<int, std::string>, int> truth;
  for (const auto& [map, id, label] : split.truth) truth[{map, id}] = label;
  std::vector<std::size_t> hidden;
  std::vector<int> y_hidden;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto it = truth.find({train[i].map_id, train[i].id});
    if (it != truth.end()) {
      hidden.push_back(i);
      y_hidden.push_back(it->second);
    }
  }

  for (std::size_t m = 0; m < models.size(); ++m) {
    const Matrix& r = raw[m];
    auto factory = [&r](std::span<const std::size_t>, int) -> RowPredictor {
      return [&r](std::size_t row) {
        ProbVector p{};
        std::copy(r.row(row).begin(), r.row(row).end(), p.begin());
        return p;
      };
    };
    OofResult res = oof_predict(factory, folds, cfg.threads);
    out.model_names.push_back(models[m].name());
    out.base_oof_log_loss.push_back(log_loss(select_rows(res.probs, labeled), y));
    out.base_oof_accuracy.push_back(accuracy(select_rows(res.probs, labeled), y));
    out.base_heldout_log_loss.push_back(log_loss(select_rows(res.probs, hidden), y_hidden));
    oof.push_back(std::move(res.probs));
  }
  out.best_base_oof_log_loss = *std::min_element(out.base_oof_log_loss.begin(), out.base_oof_log_loss.end());

  const SpatialIndex idx(train);
  const FeatureMatrix fm = assemble_features(train, idx, oof, out.model_names, FeatureConfig{}, cfg.threads);
  const Matrix x_train = select_rows(fm.values, labeled);
  const Matrix x_hidden = select_rows(fm.values, hidden);
  const EnsembleModel ens = random_param_ensemble(x_train, y, cfg.ranges, cfg.members, cfg.seed, cfg.threads);
  out.stacked = evaluate(ensemble_predict(ens, x_hidden), y_hidden);
  for (const auto& member : ens.members) out.member_heldout_log_loss.push_back(log_loss(gbdt_predict(member, x_hidden), y_hidden));
  return out;
}

}  // namespace roofstack::testing
