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

#include "roofstack/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "roofstack/csv.hpp"
#include "roofstack/error.hpp"
#include "roofstack/parallel.hpp"
#include "roofstack/rng.hpp"

namespace roofstack {

namespace {

constexpr double kClip = 1e-15;

// Only the true-class probability reaches the log, so the upper bound is 1:
// a correct one-hot row then scores exactly 0.
double clipped(double p) { return std::clamp(p, kClip, 1.0); }

void check_metric_input(const Matrix& probs, std::span<const int> y) {
  if (probs.rows == 0) throw MetricError("metric undefined on zero rows");
  if (probs.cols != kNumClasses) throw DimensionError("probability matrix needs 5 columns");
  if (y.size() != probs.rows) throw DimensionError("label count does not match probability rows");
  for (int label : y) {
    if (label < 0 || label >= kNumClasses) throw ParameterError("label out of range: " + std::to_string(label));
  }
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Folds

FoldAssignment make_folds(const BuildingSet& set, int k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("fold count must be at least 2");
  FoldAssignment out;
  out.k = k;
  out.seed = seed;
  out.fold.assign(set.size(), FoldAssignment::kUnassigned);

  std::array<std::vector<std::size_t>, kNumMaps> per_map;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& b = set[i];
    if (!b.label) continue;
    if (!b.verified) {
      out.fold[i] = FoldAssignment::kTrainOnly;
      continue;
    }
    per_map[static_cast<std::size_t>(b.map_id)].push_back(i);
  }
  for (int map = 0; map < kNumMaps; ++map) {
    auto& rows = per_map[static_cast<std::size_t>(map)];
    if (rows.empty()) continue;
    if (rows.size() < static_cast<std::size_t>(k)) {
      throw FoldError("map " + std::to_string(map) + " has " + std::to_string(rows.size()) +
                      " labeled buildings, fewer than k=" + std::to_string(k));
    }
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return set[a].id < set[b].id; });
    Rng rng(combine_seed(seed, static_cast<std::uint64_t>(map)));
    rng.shuffle(rows.begin(), rows.end());
    for (std::size_t j = 0; j < rows.size(); ++j) out.fold[rows[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
  }
  return out;
}

std::string folds_to_csv(const BuildingSet& set, const FoldAssignment& folds) {
  if (folds.fold.size() != set.size()) throw DimensionError("fold assignment does not match building set");
  std::string out = "map_id,building_id,fold\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    out += std::to_string(set[i].map_id) + "," + csv_field(set[i].id) + "," + std::to_string(folds.fold[i]) + "\n";
  }
  return out;
}

FoldAssignment folds_from_csv(std::string_view text, const BuildingSet& set) {
  const CsvTable t = parse_csv(text);
  const auto c_map = t.column("map_id");
  const auto c_id = t.column("building_id");
  const auto c_fold = t.column("fold");
  FoldAssignment out;
  out.fold.assign(set.size(), FoldAssignment::kUnassigned);
  std::vector<bool> seen(set.size(), false);
  int max_fold = -1;
  for (const auto& row : t.rows) {
    const auto map = static_cast<int>(parse_int(row.at(c_map)));
    const auto pos = set.find(map, row.at(c_id));
    if (!pos) throw FormatError("folds CSV names unknown building " + row.at(c_id));
    if (seen[*pos]) throw FormatError("folds CSV repeats building " + row.at(c_id));
    seen[*pos] = true;
    const auto f = static_cast<int>(parse_int(row.at(c_fold)));
    if (f < FoldAssignment::kUnassigned) throw FormatError("invalid fold index " + row.at(c_fold));
    out.fold[*pos] = f;
    max_fold = std::max(max_fold, f);
  }
  out.k = max_fold + 1;
  return out;
}

// ---------------------------------------------------------------------------
// OOF

OofResult oof_predict(const ModelFactory& factory, const FoldAssignment& folds, unsigned threads) {
  const std::size_t n = folds.fold.size();
  const int k = folds.k;
  if (k < 2) throw ParameterError("fold assignment needs k >= 2");
  OofResult out;
  out.train_rows.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const int f = folds.fold[i];
    if (f >= k) throw FoldError("fold index " + std::to_string(f) + " out of range");
    for (int g = 0; g < k; ++g) {
      if (f == FoldAssignment::kTrainOnly || (f >= 0 && f != g)) out.train_rows[static_cast<std::size_t>(g)].push_back(i);
    }
  }

  // Every fold model predicts every row; the reduction below picks what it needs.
  std::vector<Matrix> per_fold(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t g) {
    try {
      const RowPredictor predict = factory(out.train_rows[g], static_cast<int>(g));
      Matrix m(n, kNumClasses);
      for (std::size_t i = 0; i < n; ++i) {
        const ProbVector p = predict(i);
        std::copy(p.begin(), p.end(), m.row(i).begin());
      }
      per_fold[g] = std::move(m);
    } catch (const std::exception& e) {
      throw Error("fold " + std::to_string(g) + ": " + e.what());
    }
  });

  out.probs = Matrix(n, kNumClasses);
  for (std::size_t i = 0; i < n; ++i) {
    const int f = folds.fold[i];
    if (f >= 0) {
      for (std::size_t c = 0; c < kNumClasses; ++c) out.probs(i, c) = per_fold[static_cast<std::size_t>(f)](i, c);
      continue;
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      double s = 0.0;
      for (const auto& m : per_fold) s += m(i, c);
      out.probs(i, c) = s / static_cast<double>(k);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble

void ParamRanges::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ParameterError(std::string("invalid parameter range: ") + what);
  };
  check(n_rounds.lo >= 1 && n_rounds.lo <= n_rounds.hi, "n_rounds");
  check(max_depth.lo >= 1 && max_depth.lo <= max_depth.hi, "max_depth");
  check(learning_rate.lo > 0.0 && learning_rate.lo <= learning_rate.hi && learning_rate.hi <= 1.0, "learning_rate");
  check(min_samples_leaf.lo >= 1 && min_samples_leaf.lo <= min_samples_leaf.hi, "min_samples_leaf");
  check(feature_subsample.lo > 0.0 && feature_subsample.lo <= feature_subsample.hi && feature_subsample.hi <= 1.0,
        "feature_subsample");
  check(row_subsample.lo > 0.0 && row_subsample.lo <= row_subsample.hi && row_subsample.hi <= 1.0,
        "row_subsample");
}

void to_json(nlohmann::json& j, const ParamRanges& r) {
  auto pair = [](const auto& range) { return nlohmann::json::array({range.lo, range.hi}); };
  j = {{"n_rounds", pair(r.n_rounds)},
       {"max_depth", pair(r.max_depth)},
       {"learning_rate", pair(r.learning_rate)},
       {"min_samples_leaf", pair(r.min_samples_leaf)},
       {"feature_subsample", pair(r.feature_subsample)},
       {"row_subsample", pair(r.row_subsample)}};
}

void from_json(const nlohmann::json& j, ParamRanges& r) {
  r = ParamRanges{};
  auto read = [&](const char* key, auto& range) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    using T = decltype(range.lo);
    range.lo = a.at(0).template get<T>();
    range.hi = a.at(1).template get<T>();
  };
  read("n_rounds", r.n_rounds);
  read("max_depth", r.max_depth);
  read("learning_rate", r.learning_rate);
  read("min_samples_leaf", r.min_samples_leaf);
  read("feature_subsample", r.feature_subsample);
  read("row_subsample", r.row_subsample);
  r.validate();
}

std::vector<GbdtParams> sample_params(const ParamRanges& ranges, int n, std::uint64_t seed) {
  ranges.validate();
  if (n < 1) throw ParameterError("ensemble needs at least one member");
  Rng rng(seed);
  std::vector<GbdtParams> out;
  for (int i = 0; i < n; ++i) {
    GbdtParams p;
    p.n_rounds = static_cast<int>(rng.uniform_int(ranges.n_rounds.lo, ranges.n_rounds.hi));
    p.max_depth = static_cast<int>(rng.uniform_int(ranges.max_depth.lo, ranges.max_depth.hi));
    p.learning_rate = rng.uniform(ranges.learning_rate.lo, ranges.learning_rate.hi);
    p.min_samples_leaf = static_cast<int>(rng.uniform_int(ranges.min_samples_leaf.lo, ranges.min_samples_leaf.hi));
    p.feature_subsample = rng.uniform(ranges.feature_subsample.lo, ranges.feature_subsample.hi);
    p.row_subsample = rng.uniform(ranges.row_subsample.lo, ranges.row_subsample.hi);
    p.seed = combine_seed(seed, static_cast<std::uint64_t>(i));
    out.push_back(p);
  }
  return out;
}

void to_json(nlohmann::json& j, const EnsembleModel& m) {
  j = nlohmann::json{{"members", m.members}};
}

void from_json(const nlohmann::json& j, EnsembleModel& m) {
  m.members = j.at("members").get<std::vector<GbdtModel>>();
  if (m.members.empty()) throw FormatError("ensemble has no members");
}

EnsembleModel random_param_ensemble(const Matrix& x, std::span<const int> y, const ParamRanges& ranges,
                                    int n_members, std::uint64_t seed, unsigned threads) {
  const auto params = sample_params(ranges, n_members, seed);
  check_training_data(x, y);
  EnsembleModel out;
  out.members.resize(params.size());
  parallel_for(params.size(), threads, [&](std::size_t i) { out.members[i] = train_gbdt(x, y, params[i]); });
  return out;
}

Matrix ensemble_predict(const EnsembleModel& model, const Matrix& x) {
  if (model.members.empty()) throw ParameterError("ensemble has no members");
  Matrix sum(x.rows, kNumClasses);
  for (const auto& m : model.members) {
    const Matrix p = gbdt_predict(m, x);
    for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += p.data[i];
  }
  const auto n = static_cast<double>(model.members.size());
  for (auto& v : sum.data) v /= n;
  return sum;
}

// ---------------------------------------------------------------------------
// TTA

ProbVector tta_aggregate(const BaseModel& model, const Chip& chip, const TtaConfig& cfg) {
  if (cfg.margins.empty()) throw ParameterError("TTA needs at least one margin");
  if (cfg.output_size < 1) throw ParameterError("TTA output size must be positive");
  for (int m : cfg.margins) {
    if (m < 0 || m > chip.margin) {
      throw ParameterError("TTA margin " + std::to_string(m) + " exceeds chip margin " + std::to_string(chip.margin));
    }
  }
  // Collect every variant first and reduce in a fixed (margin, k) order.
  std::vector<ProbVector> outputs;
  outputs.reserve(cfg.margins.size() * 8);
  for (int m : cfg.margins) {
    const Chip cropped = random_crop_margin(chip, CropMargins{m, m, m, m}, cfg.output_size);
    for (int k = 0; k < 8; ++k) outputs.push_back(model.predict(dihedral(cropped, k)));
  }
  const auto n = static_cast<double>(outputs.size());
  ProbVector out{};
  if (cfg.mean == TtaMean::kArithmetic) {
    for (const auto& p : outputs)
      for (std::size_t c = 0; c < kNumClasses; ++c) out[c] += p[c];
    for (auto& v : out) v /= n;
    return out;
  }
  for (const auto& p : outputs)
    for (std::size_t c = 0; c < kNumClasses; ++c) out[c] += std::log(std::max(p[c], kClip));
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v / n);
    sum += v;
  }
  for (auto& v : out) v /= sum;
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

double log_loss(const Matrix& probs, std::span<const int> y) {
  check_metric_input(probs, y);
  double s = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) s -= std::log(clipped(probs(i, static_cast<std::size_t>(y[i]))));
  return s / static_cast<double>(probs.rows);
}

double accuracy(const Matrix& probs, std::span<const int> y) {
  check_metric_input(probs, y);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.rows; ++i)
    if (argmax(probs.row(i)) == static_cast<std::size_t>(y[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(probs.rows);
}

ProbVector per_class_log_loss(const Matrix& probs, std::span<const int> y) {
  check_metric_input(probs, y);
  ProbVector sum{};
  std::array<std::size_t, kNumClasses> count{};
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    sum[c] -= std::log(clipped(probs(i, c)));
    ++count[c];
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) sum[c] = count[c] ? sum[c] / static_cast<double>(count[c]) : 0.0;
  return sum;
}

Metrics evaluate(const Matrix& probs, std::span<const int> y) {
  return Metrics{log_loss(probs, y), accuracy(probs, y), per_class_log_loss(probs, y), probs.rows};
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["log_loss"] = m.log_loss;
  j["accuracy"] = m.accuracy;
  j["per_class_log_loss"] = m.per_class_log_loss;
  j["n"] = m.n;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV tables

std::string prob_table_to_csv(const ProbTable& t) {
  if (t.models.size() != t.probs.size()) throw DimensionError("one probability matrix per model expected");
  for (const auto& m : t.probs) {
    if (m.rows != t.keys.size() || m.cols != kNumClasses) throw DimensionError("probability matrix shape mismatch");
  }
  std::string out = "building_id,map_id";
  for (const auto& model : t.models)
    for (auto name : kClassNames) out += "," + csv_field(model + "_" + std::string(name));
  out += "\n";
  for (std::size_t i = 0; i < t.keys.size(); ++i) {
    out += csv_field(t.keys[i].second) + "," + std::to_string(t.keys[i].first);
    for (const auto& m : t.probs)
      for (std::size_t c = 0; c < kNumClasses; ++c) out += "," + format_double(m(i, c));
    out += "\n";
  }
  return out;
}

ProbTable prob_table_from_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  if (t.header.size() < 2 || t.header[0] != "building_id" || t.header[1] != "map_id") {
    throw FormatError("probability CSV must start with building_id,map_id");
  }
  const std::size_t value_cols = t.header.size() - 2;
  if (value_cols == 0 || value_cols % kNumClasses != 0) {
    throw FormatError("probability CSV needs 5 columns per model");
  }
  ProbTable out;
  for (std::size_t g = 0; g < value_cols / kNumClasses; ++g) {
    std::string model;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const std::string& col = t.header[2 + g * kNumClasses + c];
      const std::string suffix = "_" + std::string(kClassNames[c]);
      if (col.size() <= suffix.size() || col.compare(col.size() - suffix.size(), suffix.size(), suffix) != 0) {
        throw FormatError("unexpected probability column " + col);
      }
      const std::string prefix = col.substr(0, col.size() - suffix.size());
      if (c == 0) model = prefix;
      else if (prefix != model) throw FormatError("inconsistent model prefix in column " + col);
    }
    out.models.push_back(model);
    out.probs.emplace_back(t.rows.size(), kNumClasses);
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row.size() != t.header.size()) throw FormatError("row " + std::to_string(i + 1) + " has the wrong width");
    out.keys.emplace_back(static_cast<int>(parse_int(row[1])), row[0]);
    for (std::size_t j = 0; j < value_cols; ++j)
      out.probs[j / kNumClasses](i, j % kNumClasses) = parse_double(row[2 + j]);
  }
  return out;
}

std::vector<std::tuple<int, std::string, int>> truth_from_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  const auto c_id = t.column("building_id");
  const auto c_map = t.column("map_id");
  const auto c_label = t.column("label");
  std::vector<std::tuple<int, std::string, int>> out;
  for (const auto& row : t.rows) {
    const auto label = parse_int(row.at(c_label));
    if (label < 0 || label >= kNumClasses) throw FormatError("truth label out of range: " + row.at(c_label));
    out.emplace_back(static_cast<int>(parse_int(row.at(c_map))), row.at(c_id), static_cast<int>(label));
  }
  return out;
}

std::string truth_to_csv(const std::vector<std::tuple<int, std::string, int>>& rows) {
  std::string out = "building_id,map_id,label\n";
  for (const auto& [map, id, label] : rows)
    out += csv_field(id) + "," + std::to_string(map) + "," + std::to_string(label) + "\n";
  return out;
}

}  // namespace roofstack
