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
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "roofstack/error.hpp"

namespace roofstack {
namespace {

Polygon dot(double x, double y) { return Polygon({{x, y}, {x + 1, y}, {x + 1, y + 1}, {x, y + 1}}); }

BuildingSet labeled_maps(const std::vector<int>& per_map, std::uint32_t seed, double unverified_share = 0.0,
                         double unlabeled_share = 0.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Building> out;
  for (std::size_t m = 0; m < per_map.size(); ++m)
    for (int i = 0; i < per_map[m]; ++i) {
      const bool unlabeled = u(gen) < unlabeled_share;
      const bool unverified = u(gen) < unverified_share;
      out.push_back({"b" + std::to_string(i), static_cast<int>(m), dot(i * 3.0, 0), unlabeled ? std::nullopt : std::optional<int>(i % 5),
                     !unverified});
    }
  return BuildingSet(std::move(out));
}

TEST(Folds, ExactDivisionAndDeterminism) {
  const BuildingSet set = labeled_maps({10}, 1);
  const FoldAssignment f = make_folds(set, 5, 3);
  std::array<int, 5> sizes{};
  for (int v : f.fold) ++sizes[static_cast<std::size_t>(v)];
  for (int s : sizes) EXPECT_EQ(s, 2);
  EXPECT_EQ(f, make_folds(set, 5, 3));
  EXPECT_NE(f.fold, make_folds(set, 5, 4).fold);
}

TEST(Folds, TwoMapsOf103) {
  const BuildingSet set = labeled_maps({103, 103}, 2);
  const FoldAssignment f = make_folds(set, 5, 8);
  for (int m = 0; m < 2; ++m) {
    std::array<int, 5> sizes{};
    for (std::size_t i = 0; i < set.size(); ++i)
      if (set[i].map_id == m) ++sizes[static_cast<std::size_t>(f.fold[i])];
    for (int s : sizes) EXPECT_TRUE(s == 20 || s == 21);
  }
  EXPECT_TRUE(std::all_of(f.fold.begin(), f.fold.end(), [](int v) { return v >= 0 && v < 5; }));
}

TEST(Folds, TrainOnlyAndUnlabeled) {
  const BuildingSet set = labeled_maps({60, 40}, 5, 0.2, 0.2);
  const FoldAssignment f = make_folds(set, 4, 1);
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!set[i].label) EXPECT_EQ(f.fold[i], FoldAssignment::kUnassigned);
    else if (!set[i].verified) EXPECT_EQ(f.fold[i], FoldAssignment::kTrainOnly);
    else EXPECT_GE(f.fold[i], 0);
  }
}

TEST(Folds, TooFewLabeledNamesTheMap) {
  const BuildingSet set = labeled_maps({20, 3}, 1);
  try {
    make_folds(set, 5, 0);
    FAIL();
  } catch (const FoldError& e) {
    EXPECT_NE(std::string(e.what()).find("map 1"), std::string::npos);
  }
  EXPECT_THROW(make_folds(set, 1, 0), ParameterError);
}

TEST(Folds, CsvRoundTrip) {
  const BuildingSet set = labeled_maps({30, 12}, 3, 0.1, 0.1);
  const FoldAssignment f = make_folds(set, 3, 11);
  const FoldAssignment back = folds_from_csv(folds_to_csv(set, f), set);
  EXPECT_EQ(back.fold, f.fold);
  EXPECT_EQ(back.k, 3);
}

RowPredictor constant_predictor(ProbVector p) {
  return [p](std::size_t) { return p; };
}

TEST(Oof, ConstantFactory) {
  const BuildingSet set = labeled_maps({25}, 1, 0.0, 0.2);
  const FoldAssignment f = make_folds(set, 5, 2);
  const ProbVector p = {0.1, 0.2, 0.3, 0.25, 0.15};
  const OofResult r = oof_predict([&](std::span<const std::size_t>, int) { return constant_predictor(p); }, f, 3);
  for (std::size_t i = 0; i < set.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      EXPECT_NEAR(r.probs(i, c), p[c], 1e-15);
      s += r.probs(i, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Oof, PriorFactoryTwoFolds) {
  // 10 samples, k=2: each fold model predicts the prior of the other fold.
  const std::vector<int> labels = {0, 0, 0, 1, 1, 2, 2, 2, 2, 4};
  std::vector<Building> bs;
  for (int i = 0; i < 10; ++i) bs.push_back({"b" + std::to_string(i), 0, dot(i * 2.0, 0), labels[static_cast<std::size_t>(i)], true});
  const BuildingSet set(bs);
  const FoldAssignment f = make_folds(set, 2, 6);
  const OofResult r = oof_predict(
      [&](std::span<const std::size_t> train, int) {
        ProbVector prior{};
        for (auto i : train) prior[static_cast<std::size_t>(labels[i])] += 1.0 / static_cast<double>(train.size());
        return constant_predictor(prior);
      },
      f);
  for (int fold = 0; fold < 2; ++fold) {
    ProbVector other{};
    int n = 0;
    for (std::size_t i = 0; i < 10; ++i)
      if (f.fold[i] != fold) {
        other[static_cast<std::size_t>(labels[i])] += 1.0;
        ++n;
      }
    for (std::size_t i = 0; i < 10; ++i) {
      if (f.fold[i] != fold) continue;
      for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_NEAR(r.probs(i, c), other[c] / n, 1e-15);
    }
  }
}

TEST(Oof, PurityFromTrainingLogs) {
  const BuildingSet set = labeled_maps({50, 37}, 9, 0.15, 0.1);
  const FoldAssignment f = make_folds(set, 5, 4);
  const OofResult r = oof_predict([](std::span<const std::size_t>, int) { return constant_predictor({1, 0, 0, 0, 0}); }, f, 2);
  ASSERT_EQ(r.train_rows.size(), 5u);
  for (int g = 0; g < 5; ++g) {
    const std::set<std::size_t> train(r.train_rows[static_cast<std::size_t>(g)].begin(), r.train_rows[static_cast<std::size_t>(g)].end());
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (f.fold[i] == g) EXPECT_FALSE(train.count(i)) << "row " << i << " leaked into fold " << g;
      if (f.fold[i] == FoldAssignment::kTrainOnly) EXPECT_TRUE(train.count(i));
      if (f.fold[i] == FoldAssignment::kUnassigned) EXPECT_FALSE(train.count(i));
    }
  }
}

TEST(Oof, FactoryErrorCarriesFold) {
  const BuildingSet set = labeled_maps({20}, 1);
  const FoldAssignment f = make_folds(set, 4, 1);
  try {
    oof_predict(
        [](std::span<const std::size_t>, int fold) -> RowPredictor {
          if (fold == 2) throw std::runtime_error("boom");
          return constant_predictor({1, 0, 0, 0, 0});
        },
        f, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("fold 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST(Metrics, ClosedForms) {
  Matrix uniform(7, kNumClasses, 0.2);
  const std::vector<int> y = {0, 1, 2, 3, 4, 0, 2};
  EXPECT_NEAR(log_loss(uniform, y), std::log(5.0), 1e-9);
  EXPECT_NEAR(accuracy(uniform, y), 2.0 / 7.0, 1e-15);  // ties go to class 0

  Matrix onehot(5, kNumClasses, 0.0);
  for (std::size_t i = 0; i < 5; ++i) onehot(i, i) = 1.0;
  const std::vector<int> diag = {0, 1, 2, 3, 4};
  EXPECT_EQ(log_loss(onehot, diag), 0.0);
  EXPECT_EQ(accuracy(onehot, diag), 1.0);

  Matrix two(2, kNumClasses, 0.0);
  two.data = {0.5, 0.5, 0, 0, 0, 0.25, 0.75, 0, 0, 0};
  EXPECT_NEAR(log_loss(two, std::vector<int>{0, 0}), (std::log(2.0) + std::log(4.0)) / 2.0, 1e-12);
  EXPECT_NEAR(log_loss(two, std::vector<int>{0, 0}), 1.03972, 1e-5);

  Matrix four(4, kNumClasses, 0.0);
  four.data = {0.9, 0.1, 0, 0, 0, 0.2, 0.8, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0.3, 0.7};
  EXPECT_EQ(accuracy(four, std::vector<int>{0, 1, 2, 3}), 0.75);

  Matrix zero_p(1, kNumClasses, 0.0);
  zero_p(0, 1) = 1.0;
  EXPECT_NEAR(log_loss(zero_p, std::vector<int>{0}), -std::log(1e-15), 1e-9);
}

TEST(Metrics, ErrorsAndPerClass) {
  EXPECT_THROW(log_loss(Matrix(0, kNumClasses), {}), MetricError);
  EXPECT_THROW(accuracy(Matrix(0, kNumClasses), {}), MetricError);
  Matrix p(3, kNumClasses, 0.2);
  p(0, 0) = 0.6;
  p(0, 1) = 0.1;
  p(0, 2) = 0.1;
  const ProbVector per = per_class_log_loss(p, std::vector<int>{0, 0, 3});
  EXPECT_NEAR(per[0], (-std::log(0.6) - std::log(0.2)) / 2.0, 1e-12);
  EXPECT_NEAR(per[3], -std::log(0.2), 1e-12);
  EXPECT_EQ(per[1], 0.0);
  const Metrics m = evaluate(p, std::vector<int>{0, 0, 3});
  const auto j = nlohmann::json::parse(metrics_to_json(m));
  EXPECT_EQ(j.at("n").get<int>(), 3);
  EXPECT_EQ(j.at("per_class_log_loss").size(), 5u);
  EXPECT_DOUBLE_EQ(j.at("log_loss").get<double>(), m.log_loss);
}

class CountingModel : public BaseModel {
 public:
  explicit CountingModel(std::function<ProbVector(const Chip&)> fn) : fn_(std::move(fn)) {}
  std::string name() const override { return "counting"; }
  ProbVector predict(const Chip& c) const override {
    ++calls;
    return fn_(c);
  }
  mutable std::atomic<int> calls{0};

 private:
  std::function<ProbVector(const Chip&)> fn_;
};

TEST(Tta, ThirtyTwoCallsAndConstantFixedPoint) {
  const ProbVector p = {0.05, 0.6, 0.1, 0.2, 0.05};
  CountingModel model([&](const Chip&) { return p; });
  const Chip chip = oracle::random_chip(180, 170, 75, 3);
  const ProbVector out = tta_aggregate(model, chip);
  EXPECT_EQ(model.calls.load(), 32);
  for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_NEAR(out[c], p[c], 1e-12);
  TtaConfig geo;
  geo.mean = TtaMean::kGeometric;
  const ProbVector g = tta_aggregate(model, chip, geo);
  for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_NEAR(g[c], p[c], 1e-12);
}

ProbVector mean_pixel_probs(const Chip& c) {
  std::array<double, 3> s{};
  for (std::size_t i = 0; i < c.rgb.size(); ++i) s[i % 3] += c.rgb[i];
  const double total = s[0] + s[1] + s[2] + 2.0;
  return {s[0] / total, s[1] / total, s[2] / total, 1.0 / total, 1.0 / total};
}

TEST(Tta, SymmetricPredictorIsInvariant) {
  CountingModel model(mean_pixel_probs);
  const Chip chip = oracle::random_chip(40, 33, 10, 8);
  TtaConfig cfg;
  cfg.margins = {0};
  cfg.output_size = 24;
  const ProbVector tta = tta_aggregate(model, chip, cfg);
  const ProbVector single = mean_pixel_probs(random_crop_margin(chip, {0, 0, 0, 0}, 24));
  for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_NEAR(tta[c], single[c], 1e-9);
}

TEST(Tta, MarginBeyondChipThrows) {
  CountingModel model(mean_pixel_probs);
  const Chip chip = oracle::random_chip(60, 60, 20, 1);
  EXPECT_THROW(tta_aggregate(model, chip), ParameterError);
}

TEST(Tta, EnumerationOrderIrrelevant) {
  CountingModel model(mean_pixel_probs);
  const Chip chip = oracle::random_chip(200, 190, 80, 2);
  TtaConfig a;
  TtaConfig b;
  b.margins = {75, 0, 50, 25};
  const ProbVector pa = tta_aggregate(model, chip, a);
  const ProbVector pb = tta_aggregate(model, chip, b);
  for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_NEAR(pa[c], pb[c], 1e-12);
}

TEST(Ensemble, SingleMemberAndSimplexRows) {
  std::mt19937 gen(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(120, 3);
  std::vector<int> y;
  for (std::size_t i = 0; i < 120; ++i) {
    const int c = static_cast<int>(i % 5);
    y.push_back(c);
    x(i, 0) = c + n(gen);
    x(i, 1) = n(gen);
    x(i, 2) = (c > 2) + n(gen);
  }
  ParamRanges ranges;
  ranges.n_rounds = {5, 20};
  const EnsembleModel one = random_param_ensemble(x, y, ranges, 1, 3);
  ASSERT_EQ(one.members.size(), 1u);
  EXPECT_EQ(ensemble_predict(one, x), gbdt_predict(train_gbdt(x, y, sample_params(ranges, 1, 3)[0]), x));

  const EnsembleModel five = random_param_ensemble(x, y, ranges, 5, 3, 3);
  EXPECT_EQ(five.members, random_param_ensemble(x, y, ranges, 5, 3, 1).members);
  const Matrix p = ensemble_predict(five, x);
  for (std::size_t i = 0; i < p.rows; ++i) {
    const auto row = p.row(i);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
  }
  // Averaging never loses to the average member (log loss is convex).
  double member_mean = 0.0;
  for (const auto& m : five.members) member_mean += log_loss(gbdt_predict(m, x), y) / 5.0;
  EXPECT_LE(log_loss(p, y), member_mean + 1e-12);

  const nlohmann::json j = five;
  EXPECT_EQ(ensemble_predict(j.get<EnsembleModel>(), x), p);
  EXPECT_THROW(random_param_ensemble(x, y, ranges, 0, 1), ParameterError);
}

TEST(Ensemble, SampledParamsStayInRanges) {
  const ParamRanges r;
  for (const GbdtParams& p : sample_params(r, 200, 5)) {
    EXPECT_GE(p.n_rounds, 100);
    EXPECT_LE(p.n_rounds, 400);
    EXPECT_GE(p.max_depth, 2);
    EXPECT_LE(p.max_depth, 5);
    EXPECT_GE(p.learning_rate, 0.03);
    EXPECT_LE(p.learning_rate, 0.3);
    EXPECT_GE(p.row_subsample, 0.6);
    EXPECT_LE(p.feature_subsample, 1.0);
  }
  const nlohmann::json j = r;
  EXPECT_EQ(j.get<ParamRanges>().max_depth, r.max_depth);
  ParamRanges bad;
  bad.learning_rate = {0.5, 0.1};
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(ProbTable, CsvRoundTrip) {
  ProbTable t;
  t.keys = {{0, "a"}, {1, "b,c"}, {1, "d"}};
  t.models = {"oracle_a", "net_x"};
  t.probs = {Matrix(3, kNumClasses, 0.2), Matrix(3, kNumClasses, 0.0)};
  t.probs[1](0, 1) = 1.0;
  t.probs[1](1, 0) = 1.0 / 3.0;
  t.probs[1](1, 4) = 2.0 / 3.0;
  t.probs[1](2, 2) = 1.0;
  const ProbTable back = prob_table_from_csv(prob_table_to_csv(t));
  EXPECT_EQ(back.keys, t.keys);
  EXPECT_EQ(back.models, t.models);
  EXPECT_EQ(back.probs, t.probs);
  EXPECT_THROW(prob_table_from_csv("building_id,map_id,x_1\na,0,1\n"), FormatError);
}

TEST(Truth, CsvRoundTrip) {
  const std::vector<std::tuple<int, std::string, int>> rows = {{0, "a", 3}, {2, "b", 0}};
  EXPECT_EQ(truth_from_csv(truth_to_csv(rows)), rows);
  EXPECT_THROW(truth_from_csv("building_id,map_id,label\na,0,9\n"), FormatError);
}

}  // namespace
}  // namespace roofstack
