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

#include "roofstack/raster.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roofstack/error.hpp"

namespace roofstack {
namespace {

Polygon rect(double x0, double y0, double x1, double y1) {
  return Polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

TEST(RasterizeMask, Examples) {
  const Polygon sq = rect(0, 0, 4, 4);
  EXPECT_EQ(rasterize_mask(sq, {0, 0}, 4, 4).count(), 16u);
  EXPECT_EQ(rasterize_mask(sq, {10, 10}, 4, 4).count(), 0u);

  const Mask tri = rasterize_mask(Polygon({{0, 0}, {4, 0}, {0, 4}}), {0, 0}, 4, 4);
  EXPECT_EQ(tri.count(), 6u);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(tri.at(j, i), (i + j + 1 < 4) ? 255 : 0) << i << "," << j;
}

TEST(RasterizeMask, MatchesPointInPolygonOnRandomQuads) {
  std::mt19937 gen(123);
  std::uniform_real_distribution<double> radius(3.0, 14.0);
  std::uniform_real_distribution<double> jitter(-0.6, 0.6);
  for (int trial = 0; trial < 200; ++trial) {
    // Convex quadrilateral: four increasing angles around a center.
    const double cx = 16.0 + jitter(gen), cy = 16.0 + jitter(gen);
    std::vector<Point> pts;
    for (int k = 0; k < 4; ++k) {
      const double a = (k + 0.5 + jitter(gen) * 0.5) * M_PI / 2.0;
      const double r = radius(gen);
      pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    const Polygon p(pts);
    const Point origin{jitter(gen) * 3, jitter(gen) * 3};
    const Mask m = rasterize_mask(p, origin, 32, 32);
    for (int i = 0; i < 32; ++i) {
      for (int j = 0; j < 32; ++j) {
        const bool inside = oracle::pnpoly(p.exterior(), origin.x + j + 0.5, origin.y + i + 0.5);
        ASSERT_EQ(m.at(j, i), inside ? 255 : 0) << "trial " << trial << " pixel " << i << "," << j;
      }
    }
  }
}

TEST(RasterizeMask, NonConvexAndSelfIntersecting) {
  // Bow tie: even-odd rule still decides pixel by pixel.
  const Polygon bow({{0, 0}, {10, 10}, {10, 0}, {0, 10}});
  const Mask m = rasterize_mask(bow, {0, 0}, 10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      EXPECT_EQ(m.at(j, i), oracle::pnpoly(bow.exterior(), j + 0.5, i + 0.5) ? 255 : 0);
}

TEST(ChipWindow, MarginExamples) {
  const Polygon p = rect(100, 100, 200, 200);
  EXPECT_EQ(chip_window(p, 100), (ChipWindow{0, 0, 300, 300}));
  EXPECT_EQ(chip_window(p, 0), (ChipWindow{100, 100, 100, 100}));
  EXPECT_EQ(chip_window(rect(10.2, 10.7, 49.5, 50), 0), (ChipWindow{10, 10, 40, 40}));
}

ImageRGB gradient_image(int w, int h) {
  ImageRGB img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto* px = img.at(x, y);
      px[0] = static_cast<std::uint8_t>(x % 251 + 1);
      px[1] = static_cast<std::uint8_t>(y % 251 + 1);
      px[2] = 7;
    }
  return img;
}

TEST(ExtractChip, InteriorBuilding) {
  const ImageRGB img = gradient_image(400, 400);
  const Building b{"b", 0, rect(100, 100, 200, 200), 1, true};
  const Chip c = extract_chip(img, b, 100);
  EXPECT_EQ(c.width, 300);
  EXPECT_EQ(c.height, 300);
  EXPECT_EQ(c.margin, 100);
  EXPECT_EQ(c.building_id, "b");
  EXPECT_EQ(c.pixel(0, 0)[0], img.at(0, 0)[0]);
  EXPECT_EQ(c.pixel(299, 299)[1], img.at(299, 299)[1]);
  EXPECT_EQ(c.mask, rasterize_mask(b.polygon, {0, 0}, 300, 300).values);
}

TEST(ExtractChip, ZeroMarginIsTheBBox) {
  const ImageRGB img = gradient_image(400, 400);
  const Chip c = extract_chip(img, {"b", 0, rect(100, 100, 200, 200), 1, true}, 0);
  EXPECT_EQ(c.width, 100);
  EXPECT_EQ(c.height, 100);
  EXPECT_EQ(c.pixel(0, 0)[0], img.at(100, 100)[0]);
  EXPECT_EQ(std::count(c.mask.begin(), c.mask.end(), 255), 100 * 100);
}

TEST(ExtractChip, OutOfImageBandIsZeroFilled) {
  const ImageRGB img = gradient_image(400, 400);
  const Chip c = extract_chip(img, {"edge", 0, rect(10, 10, 50, 50), 1, true}, 100);
  ASSERT_EQ(c.width, 240);
  ASSERT_EQ(c.height, 240);
  // Window starts at (-90, -90): the first 90 rows and columns are outside.
  for (int y = 0; y < c.height; ++y) {
    for (int x = 0; x < c.width; ++x) {
      const bool outside = x < 90 || y < 90;
      const auto* px = c.pixel(x, y);
      if (outside) {
        ASSERT_EQ(px[0] | px[1] | px[2], 0) << x << "," << y;
      } else {
        ASSERT_EQ(px[0], img.at(x - 90, y - 90)[0]);
        ASSERT_EQ(px[1], img.at(x - 90, y - 90)[1]);
      }
    }
  }
  EXPECT_EQ(c.mask, rasterize_mask(Polygon({{10, 10}, {50, 10}, {50, 50}, {10, 50}}), {-90, -90}, 240, 240).values);
}

TEST(ExtractChip, OutsideImageThrowsNamingBuilding) {
  const ImageRGB img = gradient_image(50, 50);
  try {
    extract_chip(img, {"far-away", 0, rect(100, 100, 120, 120), 1, true}, 10);
    FAIL();
  } catch (const ExtractionError& e) {
    EXPECT_NE(std::string(e.what()).find("far-away"), std::string::npos);
  }
}

TEST(ChipPng, RoundTrips) {
  Chip zero(2, 2);
  EXPECT_EQ(decode_chip(encode_chip(zero)), zero);

  Chip full(3, 2);
  std::fill(full.mask.begin(), full.mask.end(), 255);
  const Chip back = decode_chip(encode_chip(full));
  EXPECT_TRUE(std::all_of(back.mask.begin(), back.mask.end(), [](auto v) { return v == 255; }));

  Chip rnd = oracle::random_chip(16, 16, 3, 7);
  rnd.margin = 42;
  rnd.building_id = "m1_b00007";
  EXPECT_EQ(decode_chip(encode_chip(rnd)), rnd);
}

TEST(ChipPng, CorruptStreamThrows) {
  auto bytes = encode_chip(oracle::random_chip(8, 8, 2, 1));
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_chip(bytes), FormatError);
  const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_THROW(decode_chip(junk), FormatError);
}

TEST(ImagePng, RoundTrips) {
  const ImageRGB img = gradient_image(37, 19);
  EXPECT_EQ(decode_png_rgb(encode_png_rgb(img)), img);
}

TEST(Chip, ValidateRejectsNonBinaryMask) {
  Chip c(2, 2);
  c.mask[1] = 7;
  EXPECT_THROW(c.validate(), FormatError);
}

}  // namespace
}  // namespace roofstack
