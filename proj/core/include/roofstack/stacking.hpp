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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roofstack/augment.hpp"
#include "roofstack/gbdt.hpp"
#include "roofstack/geodata.hpp"
#include "roofstack/matrix.hpp"
#include "roofstack/raster.hpp"

namespace roofstack {

// ---------------------------------------------------------------------------
// Folds

/// Per-building fold index. Labeled buildings on verified maps get a fold in
/// [0, k); labeled buildings marked unverified train every fold model but
/// are never validated on; unlabeled buildings get no fold.
struct FoldAssignment {
  static constexpr int kTrainOnly = -1;
  static constexpr int kUnassigned = -2;

  std::vector<int> fold;
  int k = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

/// Within each map, the verified labeled buildings are ordered by id,
/// shuffled with a per-map seeded generator and dealt round robin into k
/// folds. Throws FoldError for a map holding between 1 and k-1 of them.
FoldAssignment make_folds(const BuildingSet& set, int k, std::uint64_t seed);

std::string folds_to_csv(const BuildingSet& set, const FoldAssignment& folds);
/// Aligns a folds CSV (map_id,building_id,fold) with `set`.
FoldAssignment folds_from_csv(std::string_view text, const BuildingSet& set);

// ---------------------------------------------------------------------------
// Base models and out-of-fold prediction

/// First-level model: chip in, class probabilities out. Implementations
/// must be safe to call concurrently.
class BaseModel {
 public:
  virtual ~BaseModel() = default;
  virtual std::string name() const = 0;
  virtual ProbVector predict(const Chip& chip) const = 0;
};

/// Prediction for one row by a model trained for one fold.
using RowPredictor = std::function<ProbVector(std::size_t row)>;
/// Trains on `train_rows` for fold `fold` and returns its predictor.
using ModelFactory = std::function<RowPredictor(std::span<const std::size_t> train_rows, int fold)>;

struct OofResult {
  /// Row per building. Validation rows come from the model of their fold;
  /// unassigned and train-only rows average all fold models.
  Matrix probs;
  /// Training rows given to each fold model, for audit.
  std::vector<std::vector<std::size_t>> train_rows;
};

OofResult oof_predict(const ModelFactory& factory, const FoldAssignment& folds, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Second-level ensemble

struct ParamRanges {
  Range<int> n_rounds = {100, 400};
  Range<int> max_depth = {2, 5};
  Range<double> learning_rate = {0.03, 0.3};
  Range<int> min_samples_leaf = {5, 30};
  Range<double> feature_subsample = {0.6, 1.0};
  Range<double> row_subsample = {0.6, 1.0};

  void validate() const;
};

void to_json(nlohmann::json& j, const ParamRanges& r);
void from_json(const nlohmann::json& j, ParamRanges& r);

/// Draws `n` parameter sets uniformly from `ranges`.
std::vector<GbdtParams> sample_params(const ParamRanges& ranges, int n, std::uint64_t seed);

struct EnsembleModel {
  std::vector<GbdtModel> members;
};

void to_json(nlohmann::json& j, const EnsembleModel& m);
void from_json(const nlohmann::json& j, EnsembleModel& m);

/// Trains one GBDT per sampled parameter set (concurrently when threads > 1).
EnsembleModel random_param_ensemble(const Matrix& x, std::span<const int> y, const ParamRanges& ranges,
                                    int n_members, std::uint64_t seed, unsigned threads = 1);

/// Arithmetic mean of member probability matrices, reduced in member order.
Matrix ensemble_predict(const EnsembleModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Test-time augmentation

enum class TtaMean { kArithmetic, kGeometric };

struct TtaConfig {
  std::vector<int> margins = {0, 25, 50, 75};
  int output_size = 64;
  TtaMean mean = TtaMean::kArithmetic;
};

/// For every margin crop (resized to output_size) runs the model on all 8
/// dihedral variants and averages the probability vectors.
ProbVector tta_aggregate(const BaseModel& model, const Chip& chip, const TtaConfig& cfg = {});

// ---------------------------------------------------------------------------
// Metrics

/// -(1/N) sum_i log p[i, y_i] with p clipped to [1e-15, 1].
double log_loss(const Matrix& probs, std::span<const int> y);
/// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Matrix& probs, std::span<const int> y);
/// Mean clipped loss over the rows of each class; 0 for absent classes.
ProbVector per_class_log_loss(const Matrix& probs, std::span<const int> y);

struct Metrics {
  double log_loss = 0.0;
  double accuracy = 0.0;
  ProbVector per_class_log_loss{};
  std::size_t n = 0;
};

Metrics evaluate(const Matrix& probs, std::span<const int> y);
std::string metrics_to_json(const Metrics& m);

// ---------------------------------------------------------------------------
// Probability tables (OOF matrices and predictions)

struct ProbTable {
  std::vector<std::pair<int, std::string>> keys;  // (map_id, building_id)
  std::vector<std::string> models;
  std::vector<Matrix> probs;  // one keys.size() x kNumClasses matrix per model
};

/// Header `building_id,map_id,<model>_<class>...`.
std::string prob_table_to_csv(const ProbTable& t);
ProbTable prob_table_from_csv(std::string_view text);

/// Held-out labels as CSV `building_id,map_id,label`; tuples are
/// (map_id, building_id, label).
std::vector<std::tuple<int, std::string, int>> truth_from_csv(std::string_view text);
std::string truth_to_csv(const std::vector<std::tuple<int, std::string, int>>& rows);

}  // namespace roofstack
