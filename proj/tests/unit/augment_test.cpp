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

#include "roofstack/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "roofstack/error.hpp"

namespace roofstack {
namespace {

bool binary_mask(const Chip& c) {
  return std::all_of(c.mask.begin(), c.mask.end(), [](std::uint8_t v) { return v == 0 || v == 255; });
}

Chip constant_chip(int w, int h, std::uint8_t value) {
  Chip c(w, h);
  std::fill(c.rgb.begin(), c.rgb.end(), value);
  return c;
}

AugmentConfig quiet_config() {
  AugmentConfig cfg;
  cfg.p_dihedral = cfg.p_rgb_shift = cfg.p_blur = cfg.p_noise = 0.0;
  cfg.p_elastic = cfg.p_grid = cfg.p_optical = cfg.p_mask_jitter = 0.0;
  return cfg;
}

TEST(Dihedral, HandComputedRotation) {
  Chip c(3, 2);
  for (int i = 0; i < 6; ++i) {
    c.rgb[static_cast<std::size_t>(i) * 3] = static_cast<std::uint8_t>(i);
    c.mask[static_cast<std::size_t>(i)] = (i % 2) ? 255 : 0;
  }
  const Chip r = dihedral(c, 1);
  ASSERT_EQ(r.width, 2);
  ASSERT_EQ(r.height, 3);
  const int expected[3][2] = {{2, 5}, {1, 4}, {0, 3}};
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 2; ++x) {
      EXPECT_EQ(r.pixel(x, y)[0], expected[y][x]);
      EXPECT_EQ(r.mask_at(x, y), (expected[y][x] % 2) ? 255 : 0);
    }
  EXPECT_EQ(dihedral(c, 0), c);
  EXPECT_THROW(dihedral(c, 8), ParameterError);
  EXPECT_THROW(dihedral(c, -1), ParameterError);
}

TEST(Dihedral, GroupLaws) {
  const Chip c = oracle::random_chip(5, 4, 1, 3);
  Chip r = c;
  for (int i = 0; i < 4; ++i) r = dihedral(r, 1);
  EXPECT_EQ(r, c);
  for (int a = 0; a < 8; ++a) {
    EXPECT_EQ(dihedral(dihedral(c, a), dihedral_inverse(a)), c) << a;
    for (int b = 0; b < 8; ++b) EXPECT_EQ(dihedral(dihedral(c, a), b), dihedral(c, dihedral_compose(b, a))) << a << b;
  }
}

TEST(RgbShift, ClampAndMaskUntouched) {
  Chip c(1, 1);
  c.rgb = {250, 10, 128};
  c.mask = {255};
  const Chip s = rgb_shift(c, {20, -20, 20});
  EXPECT_EQ(s.rgb, (std::vector<std::uint8_t>{255, 0, 148}));
  EXPECT_EQ(s.mask, c.mask);
  EXPECT_EQ(rgb_shift(c, {0, 0, 0}), c);
  EXPECT_THROW(rgb_shift(c, {21, 0, 0}), ParameterError);
}

TEST(RgbShift, InverseOnUnclampedPixels) {
  const Chip c = oracle::random_chip(16, 16, 2, 4);
  const Chip back = rgb_shift(rgb_shift(c, {5, 5, 5}), {-5, -5, -5});
  for (std::size_t i = 0; i < c.rgb.size(); ++i)
    if (c.rgb[i] >= 5 && c.rgb[i] <= 250) EXPECT_EQ(back.rgb[i], c.rgb[i]);
}

TEST(Blur, ConstantImageFixed) {
  const Chip c = constant_chip(9, 7, 77);
  EXPECT_EQ(blur(c, BlurMode::kMedian, 3), c);
  EXPECT_EQ(blur(c, BlurMode::kBox, 5), c);
  EXPECT_EQ(blur(c, BlurMode::kGaussian, 1.2), c);
}

TEST(Blur, BoxOfSinglePixel) {
  Chip c(5, 5);
  c.pixel(2, 2)[0] = 255;
  const Chip b = blur(c, BlurMode::kBox, 3);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool near = std::abs(x - 2) <= 1 && std::abs(y - 2) <= 1;
      EXPECT_EQ(b.pixel(x, y)[0], near ? 28 : 0) << x << "," << y;  // round(255/9)
    }
}

TEST(Blur, MedianMatchesBruteForce) {
  Chip c = constant_chip(12, 12, 100);
  for (int k = 0; k < 10; ++k) c.pixel((k * 5) % 12, (k * 7) % 12)[1] = 255;
  const Chip m = blur(c, BlurMode::kMedian, 3);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        std::vector<int> window;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = std::clamp(x + dx, 0, 11), yy = std::clamp(y + dy, 0, 11);
            window.push_back(c.pixel(xx, yy)[ch]);
          }
        std::nth_element(window.begin(), window.begin() + 4, window.end());
        ASSERT_EQ(m.pixel(x, y)[ch], window[4]);
      }
  EXPECT_EQ(m.mask, c.mask);
}

TEST(Blur, RejectsBadKernels) {
  const Chip c = constant_chip(4, 4, 1);
  EXPECT_THROW(blur(c, BlurMode::kMedian, 4), ParameterError);
  EXPECT_THROW(blur(c, BlurMode::kBox, 1), ParameterError);
  EXPECT_THROW(blur(c, BlurMode::kGaussian, 0.0), ParameterError);
}

TEST(GaussNoise, IdentityDeterminismAndSpread) {
  const Chip c = constant_chip(128, 128, 128);
  EXPECT_EQ(gauss_noise(c, 0.0, 1), c);
  EXPECT_EQ(gauss_noise(c, 10.0, 5), gauss_noise(c, 10.0, 5));
  const Chip n = gauss_noise(c, 10.0, 5);
  double sum = 0.0, sq = 0.0;
  for (auto v : n.rgb) {
    sum += v;
    sq += double(v) * v;
  }
  const double mean = sum / n.rgb.size();
  const double sd = std::sqrt(sq / n.rgb.size() - mean * mean);
  EXPECT_GE(sd, 8.5);
  EXPECT_LE(sd, 11.5);
  EXPECT_EQ(n.mask, c.mask);
}

Chip checkerboard(int size, int cell) {
  Chip c(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const bool on = ((x / cell) + (y / cell)) % 2 == 0;
      std::fill_n(c.pixel(x, y), 3, on ? 220 : 30);
      c.mask_at(x, y) = (x > size / 4 && x < 3 * size / 4 && y > size / 4 && y < 3 * size / 4) ? 255 : 0;
    }
  return c;
}

double mean_intensity(const Chip& c) {
  return std::accumulate(c.rgb.begin(), c.rgb.end(), 0.0) / static_cast<double>(c.rgb.size());
}

TEST(Elastic, IdentityDeterminismMass) {
  const Chip c = checkerboard(64, 8);
  EXPECT_EQ(elastic_transform(c, 0.0, 6.0, 5), c);
  const Chip e = elastic_transform(c, 30.0, 6.0, 5);
  EXPECT_EQ(e, elastic_transform(c, 30.0, 6.0, 5));
  EXPECT_NEAR(mean_intensity(e), mean_intensity(c), 0.02 * mean_intensity(c));
  EXPECT_TRUE(binary_mask(e));
}

TEST(GridDistortion, IdentityDeterminismCorners) {
  const Chip c = checkerboard(50, 5);
  EXPECT_EQ(grid_distortion(c, 5, 0.0, 3), c);
  const Chip g = grid_distortion(c, 5, 0.3, 3);
  EXPECT_EQ(g, grid_distortion(c, 5, 0.3, 3));
  for (auto [x, y] : {std::pair{0, 0}, {49, 0}, {0, 49}, {49, 49}})
    for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(g.pixel(x, y)[ch], c.pixel(x, y)[ch]);
  EXPECT_TRUE(binary_mask(g));
  EXPECT_THROW(grid_distortion(c, 1, 0.1, 3), ParameterError);
}

TEST(OpticalDistortion, IdentityCenterAndSymmetry) {
  const int n = 61;
  Chip rings(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double r = std::hypot(x - 30.0, y - 30.0);
      std::fill_n(rings.pixel(x, y), 3, static_cast<std::uint8_t>(static_cast<int>(r / 4) % 2 ? 200 : 40));
      rings.mask_at(x, y) = r < 15 ? 255 : 0;
    }
  EXPECT_EQ(optical_distortion(rings, 0.0), rings);
  const Chip o = optical_distortion(rings, 0.3);
  EXPECT_EQ(o.pixel(30, 30)[0], rings.pixel(30, 30)[0]);
  const Chip rot = dihedral(o, 1);
  for (std::size_t i = 0; i < o.rgb.size(); ++i) ASSERT_LE(std::abs(int(o.rgb[i]) - int(rot.rgb[i])), 1);
  EXPECT_TRUE(binary_mask(o));
  EXPECT_THROW(optical_distortion(rings, 1.0), ParameterError);
}

TEST(CropMargin, Windows) {
  Chip c = oracle::random_chip(40, 30, 10, 8);  // mask is the inner 20x10 box
  const Chip full = random_crop_margin(c, {0, 0, 0, 0}, 40);
  EXPECT_EQ(full.width, 40);
  EXPECT_EQ(full.height, 40);
  EXPECT_EQ(full.margin, 10);

  const Chip bbox = random_crop_margin(c, {10, 10, 10, 10}, 20);
  EXPECT_EQ(bbox.margin, 0);
  EXPECT_TRUE(std::all_of(bbox.mask.begin(), bbox.mask.end(), [](auto v) { return v == 255; }));

  const Chip same = random_crop_margin(c, {0, 0, 0, 0}, 1);
  EXPECT_EQ(same.width, 1);
  EXPECT_TRUE(binary_mask(same));

  EXPECT_THROW(random_crop_margin(c, {11, 0, 0, 0}, 8), ParameterError);
  EXPECT_THROW(random_crop_margin(c, {0, 0, 0, -1}, 8), ParameterError);
}

TEST(CropMargin, MatchesResizeOfTheWindow) {
  const Chip c = oracle::random_chip(30, 30, 10, 12);
  Chip window(20, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      std::copy_n(c.pixel(x + 5, y + 5), 3, window.pixel(x, y));
      window.mask_at(x, y) = c.mask_at(x + 5, y + 5);
    }
  const Chip a = random_crop_margin(c, {5, 5, 5, 5}, 16);
  const Chip b = resize_chip(window, 16, 16);
  EXPECT_EQ(a.rgb, b.rgb);
  EXPECT_EQ(a.mask, b.mask);
}

Chip square_mask_chip(int size, int side) {
  Chip c = constant_chip(size, size, 90);
  const int lo = (size - side) / 2;
  for (int y = lo; y < lo + side; ++y)
    for (int x = lo; x < lo + side; ++x) c.mask_at(x, y) = 255;
  return c;
}

TEST(MaskJitter, IdentityShiftAndCount) {
  const Chip c = square_mask_chip(140, 100);
  EXPECT_EQ(mask_jitter(c, 0, 0, 0), c);
  const Chip back = mask_jitter(mask_jitter(c, 3, 0, 0), -3, 0, 0);
  EXPECT_EQ(back.mask, c.mask);  // the square stays clear of the borders
  EXPECT_EQ(back.rgb, c.rgb);

  const auto original = std::count(c.mask.begin(), c.mask.end(), 255);
  for (double dx : {-5.0, 2.5, 5.0})
    for (double angle : {-5.0, 0.0, 3.0}) {
      const Chip j = mask_jitter(c, dx, -dx, angle);
      const auto n = std::count(j.mask.begin(), j.mask.end(), 255);
      EXPECT_NEAR(static_cast<double>(n), static_cast<double>(original), 0.1 * original);
      EXPECT_EQ(j.rgb, c.rgb);
      EXPECT_TRUE(binary_mask(j));
    }
}

TEST(ColorTransforms, LeaveMaskBitIdentical) {
  const Chip c = oracle::random_chip(24, 24, 4, 31);
  EXPECT_EQ(rgb_shift(c, {-7, 3, 20}).mask, c.mask);
  EXPECT_EQ(blur(c, BlurMode::kMedian, 5).mask, c.mask);
  EXPECT_EQ(blur(c, BlurMode::kBox, 3).mask, c.mask);
  EXPECT_EQ(blur(c, BlurMode::kGaussian, 0.8).mask, c.mask);
  EXPECT_EQ(gauss_noise(c, 9.0, 2).mask, c.mask);
}

TEST(AugmentConfig, ValidationAndJson) {
  AugmentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  const nlohmann::json j = cfg;
  EXPECT_EQ(j.get<AugmentConfig>(), cfg);
  AugmentConfig bad = cfg;
  bad.p_blur = 1.5;
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = cfg;
  bad.crop_margin = {50, 10};
  EXPECT_THROW(bad.validate(), ParameterError);
  bad = cfg;
  bad.output_size = 0;
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(SeedPolicy, StableAndDistinct) {
  const SeedPolicy p{42};
  EXPECT_EQ(p.item_seed("b1", 0, 0), p.item_seed("b1", 0, 0));
  EXPECT_NE(p.item_seed("b1", 0, 0), p.item_seed("b1", 0, 1));
  EXPECT_NE(p.item_seed("b1", 0, 0), p.item_seed("b1", 1, 0));
  EXPECT_NE(p.item_seed("b1", 0, 0), p.item_seed("b2", 0, 0));
  EXPECT_NE(p.item_seed("b1", 0, 0), SeedPolicy{43}.item_seed("b1", 0, 0));
}

TEST(Pipeline, QuietConfigIsPlainResize) {
  AugmentConfig cfg = quiet_config();
  cfg.crop_margin = {0, 0};
  cfg.output_size = 32;
  const Chip c = oracle::random_chip(50, 40, 8, 2);
  EXPECT_EQ(augment_pipeline(c, cfg, 7), resize_chip(c, 32, 32));
}

TEST(Pipeline, DeterministicAndBinary) {
  AugmentConfig cfg;
  cfg.p_rgb_shift = cfg.p_blur = cfg.p_noise = cfg.p_elastic = cfg.p_grid = cfg.p_optical = cfg.p_mask_jitter = 1.0;
  cfg.output_size = 48;
  const Chip c = oracle::random_chip(80, 80, 20, 6);
  const Chip a = augment_pipeline(c, cfg, 99);
  EXPECT_EQ(a, augment_pipeline(c, cfg, 99));
  EXPECT_EQ(a.width, 48);
  EXPECT_TRUE(binary_mask(a));
}

TEST(Pipeline, DihedralVariantsEquallyLikely) {
  AugmentConfig cfg = quiet_config();
  cfg.p_dihedral = 1.0;
  cfg.output_size = 4;
  const Chip c = oracle::random_chip(6, 6, 1, 1);
  const SeedPolicy policy{2024};
  std::array<int, 8> counts{};
  for (int i = 0; i < 8000; ++i) {
    AugmentTrace trace;
    augment_pipeline(c, cfg, policy.item_seed(c.building_id, 0, static_cast<std::uint64_t>(i)), &trace);
    ++counts[static_cast<std::size_t>(trace.dihedral)];
  }
  for (int n : counts) EXPECT_NEAR(n / 8000.0, 0.125, 0.015);
}

TEST(ContactSheet, Layout) {
  AugmentConfig cfg;
  cfg.output_size = 20;
  const Chip c = oracle::random_chip(40, 40, 10, 5);
  const ImageRGB sheet = contact_sheet(c, cfg, 3, 2, 3);
  EXPECT_EQ(sheet.width, 3 * 20 + 4 * 2);
  EXPECT_EQ(sheet.height, 2 * 20 + 3 * 2);
}

}  // namespace
}  // namespace roofstack
