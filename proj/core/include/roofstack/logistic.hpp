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
#include <span>
#include <vector>

#include "roofstack/matrix.hpp"

namespace roofstack {

/// Multinomial logistic regression on standardized inputs.
struct LogisticModel {
  std::vector<double> means;
  std::vector<double> scales;
  /// kNumClasses x n_features weights (row-major) followed by kNumClasses biases.
  std::vector<double> params;

  std::size_t n_features() const { return means.size(); }
};

/// Mean cross-entropy plus (l2 / 2) * ||W||^2 (biases unpenalized) for the
/// parameter layout of LogisticModel::params on already standardized `x`.
/// Writes the gradient into `grad` when non-null.
double logistic_objective(const Matrix& x, std::span<const int> y, std::span<const double> params, double l2,
                          std::vector<double>* grad);

/// Full-batch gradient descent from a small seeded random initialization.
LogisticModel train_logistic(const Matrix& x, std::span<const int> y, double l2, int epochs, double lr,
                             std::uint64_t seed);

/// Initial parameters train_logistic starts from for this shape and seed.
std::vector<double> logistic_initial_params(std::size_t n_features, std::uint64_t seed);

Matrix standardize(const LogisticModel& m, const Matrix& x);
Matrix logistic_predict(const LogisticModel& m, const Matrix& x);

}  // namespace roofstack
