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
#include <iosfwd>
#include <string>
#include <vector>

namespace roofstack::cli {

struct Globals {
  unsigned threads = 1;
  std::string manifest;  // empty: "<primary output>.manifest.json"
};

struct SynthOptions {
  std::string out;
  int maps = 2;
  int buildings = 1000;
  int map_size = 1600;
  int clusters = 8;
  double label_noise = 0.05;
  double test_fraction = 0.3;
  std::uint64_t seed = 42;
};

struct IngestOptions {
  std::string data;
  std::vector<std::string> maps;  // "id:geojson:png"
  std::string out;
};

struct ChipOptions {
  std::string dataset;
  std::string out;
  int margin = 100;
};

struct AdaptOptions {
  std::string in;
  std::string out;
  std::string mode = "proportional";
  std::size_t channels = 4;
};

struct PreviewOptions {
  std::string chip;
  std::string config;
  std::string out;
  int rows = 4;
  int cols = 4;
  std::uint64_t seed = 0;
};

struct FoldOptions {
  std::string dataset;
  std::string out;
  int k = 5;
  std::uint64_t seed = 42;
};

struct OofOptions {
  std::string dataset;
  std::string chips;
  std::string folds;
  std::string model = "oracle";
  std::string name;
  double confusion = 0.3;
  std::uint64_t seed = 0;
  bool tta = false;
  std::string tta_mean = "arithmetic";
  std::string out;
};

struct FeatureOptions {
  std::string dataset;
  std::vector<std::string> oof;
  std::string config;
  std::string out;
};

struct TrainOptions {
  std::string dataset;
  std::string features;
  std::string ranges;
  int members = 10;
  std::uint64_t seed = 42;
  std::string out;
};

struct PredictOptions {
  std::string model;
  std::string features;
  std::string name = "stack";
  std::string out;
};

struct EvaluateOptions {
  std::string predictions;
  std::string model;
  std::string truth;
  std::string dataset;
  std::string out;
};

struct ReportOptions {
  std::vector<std::string> runs;  // "name=metrics.json"
  std::string out;
};

void cmd_synth(const SynthOptions& o, const Globals& g, std::ostream& out);
void cmd_ingest(const IngestOptions& o, const Globals& g, std::ostream& out);
void cmd_chip(const ChipOptions& o, const Globals& g, std::ostream& out);
void cmd_adapt_weights(const AdaptOptions& o, const Globals& g, std::ostream& out);
void cmd_augment_preview(const PreviewOptions& o, const Globals& g, std::ostream& out);
void cmd_folds(const FoldOptions& o, const Globals& g, std::ostream& out);
void cmd_oof(const OofOptions& o, const Globals& g, std::ostream& out);
void cmd_features(const FeatureOptions& o, const Globals& g, std::ostream& out);
void cmd_train_stack(const TrainOptions& o, const Globals& g, std::ostream& out);
void cmd_predict(const PredictOptions& o, const Globals& g, std::ostream& out);
void cmd_evaluate(const EvaluateOptions& o, const Globals& g, std::ostream& out);
void cmd_report(const ReportOptions& o, const Globals& g, std::ostream& out);

}  // namespace roofstack::cli
