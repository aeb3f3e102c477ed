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
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roofstack/matrix.hpp"

namespace roofstack {

struct GbdtParams {
  int n_rounds = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 1;
  double feature_subsample = 1.0;
  double row_subsample = 1.0;
  std::uint64_t seed = 0;
  /// Leaf weight sum(g) / sum(h) instead of the mean residual.
  bool newton_leaves = false;
  int max_bins = 64;

  /// Throws ParameterError when a field is outside its domain.
  void validate() const;

  friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

void to_json(nlohmann::json& j, const GbdtParams& p);
void from_json(const nlohmann::json& j, GbdtParams& p);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, learning rate already applied

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t leaf_count() const;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

/// Softmax gradient boosting: initial scores are class log-priors; every
/// round adds one tree per class.
struct GbdtModel {
  std::size_t n_features = 0;
  ProbVector init_scores{};
  std::vector<RegressionTree> trees;  // round-major, kNumClasses per round
  GbdtParams params;
  std::vector<double> train_log_loss;  // after each round

  std::size_t rounds() const { return trees.size() / kNumClasses; }

  friend bool operator==(const GbdtModel&, const GbdtModel&) = default;
};

void to_json(nlohmann::json& j, const GbdtModel& m);
void from_json(const nlohmann::json& j, GbdtModel& m);

/// Throws DimensionError on shape mismatch, DegenerateTargetError when `y`
/// holds a single class, ParameterError on bad params or labels.
GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, const GbdtParams& params);

/// Row-wise class probabilities. Throws DimensionError on a column mismatch.
Matrix gbdt_predict(const GbdtModel& model, const Matrix& x);

/// Class priors floored at 1e-7 and renormalized; shared by every learner.
ProbVector class_priors(std::span<const int> y);

/// Checks the common learner preconditions; throws as train_gbdt documents.
void check_training_data(const Matrix& x, std::span<const int> y);

}  // namespace roofstack
