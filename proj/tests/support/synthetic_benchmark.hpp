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
#include <string>
#include <vector>

#include "roofstack/stacking.hpp"
#include "roofstack/synth.hpp"

namespace roofstack::testing {

struct BenchmarkConfig {
  int n_maps = 2;
  int buildings_per_map = 1000;
  double label_noise = 0.05;
  double confusion_level = 0.3;
  double test_fraction = 0.3;
  int folds = 5;
  int members = 10;
  int margin = 100;
  std::uint64_t seed = 42;
  ParamRanges ranges;
  unsigned threads = 1;
};

struct BenchmarkResult {
  std::vector<std::string> model_names;
  std::vector<double> base_oof_log_loss;  // on the labeled training rows
  std::vector<double> base_oof_accuracy;
  std::vector<double> base_heldout_log_loss;
  double best_base_oof_log_loss = 0.0;
  Metrics stacked;  // on the hidden rows
  std::vector<double> member_heldout_log_loss;
};

/// In-memory synth -> chip -> folds -> oof -> features -> ensemble -> evaluate.
BenchmarkResult run_synthetic_benchmark(const BenchmarkConfig& cfg);

}  // namespace roofstack::testing
