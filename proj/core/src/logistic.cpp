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

#include "roofstack/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "roofstack/error.hpp"
#include "roofstack/gbdt.hpp"
#include "roofstack/rng.hpp"

namespace roofstack {

namespace {

constexpr std::size_t K = kNumClasses;

void class_scores(std::span<const double> params, std::size_t d, std::span<const double> features,
                  std::span<double> out) {
  for (std::size_t k = 0; k < K; ++k) {
    double s = params[K * d + k];
    for (std::size_t f = 0; f < d; ++f) s += params[k * d + f] * features[f];
    out[k] = s;
  }
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (auto& v : out) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : out) v /= sum;
}

}  // namespace

double logistic_objective(const Matrix& x, std::span<const int> y, std::span<const double> params, double l2,
                          std::vector<double>* grad) {
  const std::size_t d = x.cols;
  if (params.size() != K * d + K) throw DimensionError("logistic parameter vector has the wrong length");
  if (y.size() != x.rows) throw DimensionError("label count does not match feature rows");
  const auto n = static_cast<double>(x.rows);
  if (grad) grad->assign(params.size(), 0.0);
  double loss = 0.0;
  std::array<double, K> p{};
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto row = x.row(i);
    class_scores(params, d, row, p);
    const auto label = static_cast<std::size_t>(y[i]);
    loss -= std::log(std::max(p[label], 1e-300));
    if (!grad) continue;
    for (std::size_t k = 0; k < K; ++k) {
      const double residual = (p[k] - (k == label ? 1.0 : 0.0)) / n;
      for (std::size_t f = 0; f < d; ++f) (*grad)[k * d + f] += residual * row[f];
      (*grad)[K * d + k] += residual;
    }
  }
  loss /= n;
  double penalty = 0.0;
  for (std::size_t w = 0; w < K * d; ++w) {
    penalty += params[w] * params[w];
    if (grad) (*grad)[w] += l2 * params[w];
  }
  return loss + 0.5 * l2 * penalty;
}

std::vector<double> logistic_initial_params(std::size_t n_features, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> params(K * n_features + K, 0.0);
  for (std::size_t w = 0; w < K * n_features; ++w) params[w] = rng.normal(0.0, 0.01);
  return params;
}

Matrix standardize(const LogisticModel& m, const Matrix& x) {
  if (x.cols != m.n_features()) {
    throw DimensionError("model expects " + std::to_string(m.n_features()) + " features, got " +
                         std::to_string(x.cols));
  }
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t f = 0; f < x.cols; ++f) out(i, f) = (x(i, f) - m.means[f]) / m.scales[f];
  return out;
}

LogisticModel train_logistic(const Matrix& x, std::span<const int> y, double l2, int epochs, double lr,
                             std::uint64_t seed) {
  check_training_data(x, y);
  if (l2 < 0.0 || epochs < 0 || !(lr > 0.0)) throw ParameterError("logistic needs l2 >= 0, epochs >= 0, lr > 0");
  LogisticModel m;
  const std::size_t d = x.cols;
  m.means.assign(d, 0.0);
  m.scales.assign(d, 1.0);
  for (std::size_t f = 0; f < d; ++f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) mean += x(i, f);
    mean /= static_cast<double>(x.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) var += (x(i, f) - mean) * (x(i, f) - mean);
    var /= static_cast<double>(x.rows);
    m.means[f] = mean;
    m.scales[f] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  const Matrix xs = standardize(m, x);
  m.params = logistic_initial_params(d, seed);
  std::vector<double> grad;
  for (int e = 0; e < epochs; ++e) {
    logistic_objective(xs, y, m.params, l2, &grad);
    for (std::size_t w = 0; w < m.params.size(); ++w) m.params[w] -= lr * grad[w];
  }
  return m;
}

Matrix logistic_predict(const LogisticModel& m, const Matrix& x) {
  const Matrix xs = standardize(m, x);
  Matrix out(x.rows, K);
  for (std::size_t i = 0; i < x.rows; ++i) class_scores(m.params, x.cols, xs.row(i), out.row(i));
  return out;
}

}  // namespace roofstack
