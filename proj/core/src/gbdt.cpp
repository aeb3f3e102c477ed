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

#include "roofstack/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "roofstack/error.hpp"
#include "roofstack/rng.hpp"

namespace roofstack {

void GbdtParams::validate() const {
  if (n_rounds < 0) throw ParameterError("n_rounds must be >= 0");
  if (max_depth < 1) throw ParameterError("max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ParameterError("learning_rate must be in (0,1]");
  if (min_samples_leaf < 1) throw ParameterError("min_samples_leaf must be >= 1");
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) {
    throw ParameterError("feature_subsample must be in (0,1]");
  }
  if (!(row_subsample > 0.0 && row_subsample <= 1.0)) throw ParameterError("row_subsample must be in (0,1]");
  if (max_bins < 2 || max_bins > 256) throw ParameterError("max_bins must be in [2,256]");
}

void to_json(nlohmann::json& j, const GbdtParams& p) {
  j = {{"n_rounds", p.n_rounds},
       {"max_depth", p.max_depth},
       {"learning_rate", p.learning_rate},
       {"min_samples_leaf", p.min_samples_leaf},
       {"feature_subsample", p.feature_subsample},
       {"row_subsample", p.row_subsample},
       {"seed", p.seed},
       {"newton_leaves", p.newton_leaves},
       {"max_bins", p.max_bins}};
}

void from_json(const nlohmann::json& j, GbdtParams& p) {
  p.n_rounds = j.at("n_rounds").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.feature_subsample = j.at("feature_subsample").get<double>();
  p.row_subsample = j.at("row_subsample").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.newton_leaves = j.value("newton_leaves", false);
  p.max_bins = j.value("max_bins", 64);
}

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace {

nlohmann::json node_to_json(const RegressionTree& t, int i) {
  const auto& n = t.nodes[i];
  if (n.feature < 0) return {{"leaf", n.value}};
  return {{"split",
           {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_to_json(t, n.left)},
            {"right", node_to_json(t, n.right)}}}};
}

int node_from_json(const nlohmann::json& j, RegressionTree& t, std::size_t n_features) {
  const int index = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    t.nodes[index].value = j.at("leaf").get<double>();
    return index;
  }
  const auto& s = j.at("split");
  const int feature = s.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= n_features) {
    throw FormatError("tree split references feature " + std::to_string(feature));
  }
  t.nodes[index].feature = feature;
  t.nodes[index].threshold = s.at("threshold").get<double>();
  const int left = node_from_json(s.at("left"), t, n_features);
  const int right = node_from_json(s.at("right"), t, n_features);
  t.nodes[index].left = left;
  t.nodes[index].right = right;
  return index;
}

}  // namespace

void to_json(nlohmann::json& j, const GbdtModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) trees.push_back(node_to_json(t, 0));
  j = {{"n_features", m.n_features},
       {"n_classes", kNumClasses},
       {"init_scores", m.init_scores},
       {"params", m.params},
       {"train_log_loss", m.train_log_loss},
       {"trees", trees}};
}

void from_json(const nlohmann::json& j, GbdtModel& m) {
  try {
    if (j.at("n_classes").get<std::size_t>() != kNumClasses) throw FormatError("model class count mismatch");
    m.n_features = j.at("n_features").get<std::size_t>();
    m.init_scores = j.at("init_scores").get<ProbVector>();
    m.params = j.at("params").get<GbdtParams>();
    m.train_log_loss = j.value("train_log_loss", std::vector<double>{});
    m.trees.clear();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      node_from_json(t, tree, m.n_features);
      m.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed GBDT model: ") + e.what());
  }
  if (m.trees.size() % kNumClasses != 0) throw FormatError("tree count is not a multiple of the class count");
}

ProbVector class_priors(std::span<const int> y) {
  ProbVector counts{};
  for (int label : y) counts[static_cast<std::size_t>(label)] += 1.0;
  double total = 0.0;
  for (auto& c : counts) {
    c = std::max(c / static_cast<double>(y.size()), 1e-7);
    total += c;
  }
  for (auto& c : counts) c /= total;
  return counts;
}

void check_training_data(const Matrix& x, std::span<const int> y) {
  if (x.rows != y.size()) {
    throw DimensionError("feature rows (" + std::to_string(x.rows) + ") != label count (" + std::to_string(y.size()) +
                         ")");
  }
  if (y.size() < 2) throw DimensionError("training needs at least 2 rows");
  for (int label : y) {
    if (label < 0 || label >= static_cast<int>(kNumClasses)) {
      throw ParameterError("label " + std::to_string(label) + " outside [0," + std::to_string(kNumClasses) + ")");
    }
  }
  if (std::all_of(y.begin(), y.end(), [&](int l) { return l == y.front(); })) {
    throw DegenerateTargetError("training labels contain a single class");
  }
}

namespace {

void softmax_inplace(std::span<double> scores) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - mx);
    sum += s;
  }
  for (auto& s : scores) s /= sum;
}

struct BinnedData {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::vector<double>> cuts;  // ascending; bin b holds cuts[b-1] < x <= cuts[b]
  std::vector<std::uint8_t> bins;         // feature-major
};

double cut_between(double a, double b) {
  const double mid = a + (b - a) * 0.5;
  return mid < b ? mid : a;
}

BinnedData bin_features(const Matrix& x, int max_bins) {
  BinnedData data;
  data.n = x.rows;
  data.d = x.cols;
  data.cuts.resize(x.cols);
  data.bins.resize(x.rows * x.cols);
  std::vector<double> sorted(x.rows);
  for (std::size_t f = 0; f < x.cols; ++f) {
    for (std::size_t i = 0; i < x.rows; ++i) sorted[i] = x(i, f);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq = sorted;
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    auto& cuts = data.cuts[f];
    if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t u = 0; u + 1 < uniq.size(); ++u) cuts.push_back(cut_between(uniq[u], uniq[u + 1]));
    } else {
      for (int q = 1; q < max_bins; ++q) {
        const double v = sorted[static_cast<std::size_t>(q) * x.rows / static_cast<std::size_t>(max_bins)];
        const auto next = std::upper_bound(uniq.begin(), uniq.end(), v);
        if (next == uniq.end()) break;
        const double c = cut_between(v, *next);
        if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
      }
    }
    for (std::size_t i = 0; i < x.rows; ++i) {
      const auto b = std::lower_bound(cuts.begin(), cuts.end(), x(i, f)) - cuts.begin();
      data.bins[f * x.rows + i] = static_cast<std::uint8_t>(b);
    }
  }
  return data;
}

class TreeBuilder {
 public:
  TreeBuilder(const BinnedData& data, const GbdtParams& params, std::span<const double> grad,
              std::span<const double> hess, std::vector<std::size_t> features)
      : data_(data), params_(params), grad_(grad), hess_(hess), features_(std::move(features)) {}

  // Builds a tree over `rows`; `split_bin` receives each node's bin split.
  RegressionTree build(std::vector<std::size_t> rows, std::vector<int>& split_bin) {
    rows_ = std::move(rows);
    tree_ = {};
    split_bin_.clear();
    grow(0, rows_.size(), 0);
    split_bin = split_bin_;
    return std::move(tree_);
  }

 private:
  int grow(std::size_t begin, std::size_t end, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    split_bin_.push_back(-1);

    double g_sum = 0.0, h_sum = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      g_sum += grad_[rows_[r]];
      h_sum += hess_[rows_[r]];
    }
    const auto count = static_cast<double>(end - begin);
    double leaf;
    if (params_.newton_leaves) {
      constexpr double k = static_cast<double>(kNumClasses);
      leaf = (k - 1.0) / k * g_sum / std::max(h_sum, 1e-12);
    } else {
      leaf = g_sum / count;
    }
    tree_.nodes[index].value = params_.learning_rate * leaf;

    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    if (depth >= params_.max_depth || end - begin < 2 * min_leaf) return index;

    int best_feature = -1;
    int best_bin = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    const double parent = params_.newton_leaves ? g_sum * g_sum / std::max(h_sum, 1e-12) : g_sum * g_sum / count;
    for (auto f : features_) {
      const int nb = static_cast<int>(data_.cuts[f].size()) + 1;
      if (nb < 2) continue;
      hist_g_.assign(nb, 0.0);
      hist_h_.assign(nb, 0.0);
      hist_n_.assign(nb, 0);
      const std::uint8_t* fb = data_.bins.data() + f * data_.n;
      for (std::size_t r = begin; r < end; ++r) {
        const auto row = rows_[r];
        const auto b = fb[row];
        hist_g_[b] += grad_[row];
        hist_h_[b] += hess_[row];
        ++hist_n_[b];
      }
      double gl = 0.0, hl = 0.0;
      std::size_t nl = 0;
      for (int b = 0; b + 1 < nb; ++b) {
        gl += hist_g_[b];
        hl += hist_h_[b];
        nl += hist_n_[b];
        const std::size_t nr = (end - begin) - nl;
        if (nl < min_leaf || hist_n_[b] == 0) continue;
        if (nr < min_leaf) break;
        const double gr = g_sum - gl;
        double gain;
        if (params_.newton_leaves) {
          gain = gl * gl / std::max(hl, 1e-12) + gr * gr / std::max(h_sum - hl, 1e-12) - parent;
        } else {
          gain = gl * gl / static_cast<double>(nl) + gr * gr / static_cast<double>(nr) - parent;
        }
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_bin = b;
        }
      }
    }
    if (best_feature < 0) return index;

    const std::uint8_t* fb = data_.bins.data() + static_cast<std::size_t>(best_feature) * data_.n;
    const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t row) { return fb[row] <= best_bin; });
    const auto split = static_cast<std::size_t>(mid - rows_.begin());
    tree_.nodes[index].feature = best_feature;
    tree_.nodes[index].threshold = data_.cuts[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_bin)];
    split_bin_[index] = best_bin;
    const int left = grow(begin, split, depth + 1);
    const int right = grow(split, end, depth + 1);
    tree_.nodes[index].left = left;
    tree_.nodes[index].right = right;
    return index;
  }

  const BinnedData& data_;
  const GbdtParams& params_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  RegressionTree tree_;
  std::vector<int> split_bin_;
  std::vector<double> hist_g_, hist_h_;
  std::vector<std::size_t> hist_n_;
};

double binned_predict(const RegressionTree& t, const std::vector<int>& split_bin, const BinnedData& data,
                      std::size_t row) {
  int i = 0;
  while (t.nodes[i].feature >= 0) {
    const auto f = static_cast<std::size_t>(t.nodes[i].feature);
    i = data.bins[f * data.n + row] <= split_bin[i] ? t.nodes[i].left : t.nodes[i].right;
  }
  return t.nodes[i].value;
}

}  // namespace

GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, const GbdtParams& params) {
  params.validate();
  check_training_data(x, y);
  const std::size_t n = x.rows;
  constexpr std::size_t K = kNumClasses;

  GbdtModel model;
  model.n_features = x.cols;
  model.params = params;
  const ProbVector priors = class_priors(y);
  for (std::size_t k = 0; k < K; ++k) model.init_scores[k] = std::log(priors[k]);

  const BinnedData data = bin_features(x, params.max_bins);
  Rng rng(params.seed);

  std::vector<double> scores(n * K);
  for (std::size_t i = 0; i < n; ++i) std::copy(model.init_scores.begin(), model.init_scores.end(), &scores[i * K]);
  std::vector<double> probs(n * K);
  std::vector<double> grad(n), hess(n);
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<std::size_t> all_features(x.cols);
  std::iota(all_features.begin(), all_features.end(), 0);
  const auto n_rows_sampled =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.row_subsample * static_cast<double>(n))));
  const auto n_features_sampled = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.feature_subsample * static_cast<double>(x.cols))));

  auto refresh_probs = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> p(&probs[i * K], K);
      std::copy_n(&scores[i * K], K, p.begin());
      softmax_inplace(p);
      loss -= std::log(std::clamp(p[static_cast<std::size_t>(y[i])], 1e-15, 1.0 - 1e-15));
    }
    return loss / static_cast<double>(n);
  };

  refresh_probs();
  std::vector<int> split_bin;
  std::vector<double> round_update(n * K);
  for (int round = 0; round < params.n_rounds; ++round) {
    std::vector<std::size_t> rows = all_rows;
    if (n_rows_sampled < n) {
      rng.shuffle(rows.begin(), rows.end());
      rows.resize(n_rows_sampled);
      std::sort(rows.begin(), rows.end());
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = probs[i * K + k];
        grad[i] = (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0) - p;
        hess[i] = p * (1.0 - p);
      }
      std::vector<std::size_t> features = all_features;
      if (n_features_sampled < x.cols) {
        rng.shuffle(features.begin(), features.end());
        features.resize(n_features_sampled);
        std::sort(features.begin(), features.end());
      }
      TreeBuilder builder(data, params, grad, hess, std::move(features));
      RegressionTree tree = builder.build(rows, split_bin);
      for (std::size_t i = 0; i < n; ++i) round_update[i * K + k] = binned_predict(tree, split_bin, data, i);
      model.trees.push_back(std::move(tree));
    }
    for (std::size_t i = 0; i < n * K; ++i) scores[i] += round_update[i];
    model.train_log_loss.push_back(refresh_probs());
  }
  return model;
}

Matrix gbdt_predict(const GbdtModel& model, const Matrix& x) {
  if (x.cols != model.n_features) {
    throw DimensionError("model expects " + std::to_string(model.n_features) + " features, got " +
                         std::to_string(x.cols));
  }
  constexpr std::size_t K = kNumClasses;
  Matrix out(x.rows, K);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto row = out.row(i);
    const auto features = x.row(i);
    std::copy(model.init_scores.begin(), model.init_scores.end(), row.begin());
    for (std::size_t t = 0; t < model.trees.size(); ++t) row[t % K] += model.trees[t].predict(features);
    softmax_inplace(row);
  }
  return out;
}

}  // namespace roofstack
