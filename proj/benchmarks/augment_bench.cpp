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

#include <random>

#include <benchmark/benchmark.h>

#include "roofstack/augment.hpp"

namespace {

roofstack::Chip noisy_chip(int side) {
  roofstack::Chip c(side, side);
  std::mt19937 gen(1);
  for (auto& v : c.rgb) v = static_cast<std::uint8_t>(gen());
  for (int y = side / 4; y < 3 * side / 4; ++y)
    for (int x = side / 4; x < 3 * side / 4; ++x) c.mask_at(x, y) = 255;
  return c;
}

void BM_Pipeline(benchmark::State& state) {
  const auto chip = noisy_chip(static_cast<int>(state.range(0)));
  const roofstack::AugmentConfig cfg;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(roofstack::augment_pipeline(chip, cfg, seed++));
}
BENCHMARK(BM_Pipeline)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Dihedral(benchmark::State& state) {
  const auto chip = noisy_chip(128);
  int k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(roofstack::dihedral(chip, k++ & 7));
}
BENCHMARK(BM_Dihedral);

void BM_Elastic(benchmark::State& state) {
  const auto chip = noisy_chip(128);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(roofstack::elastic_transform(chip, 30.0, 5.0, seed++));
}
BENCHMARK(BM_Elastic)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
