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

#include "roofstack/geodata.hpp"

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "roofstack/error.hpp"

namespace roofstack {
namespace {

Polygon square(double x0, double y0, double side) {
  return Polygon({{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}});
}

std::string one_feature(const std::string& ring, const std::string& props) {
  return R"({"type":"FeatureCollection","features":[{"type":"Feature","geometry":{"type":"Polygon","coordinates":[)" +
         ring + R"(]},"properties":)" + props + "}]}";
}

TEST(Polygon, RejectsShortOrNonFiniteRings) {
  EXPECT_THROW(Polygon({{0, 0}, {1, 0}}), FeatureError);
  EXPECT_THROW(Polygon({{0, 0}, {1, 0}, {0, 0}}), FeatureError);  // closing vertex leaves 2
  EXPECT_THROW(Polygon({{0, 0}, {1, 0}, {NAN, 1}}), FeatureError);
}

TEST(Polygon, DropsClosingVertex) {
  const Polygon p({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}});
  EXPECT_EQ(p.size(), 4u);
}

TEST(PolygonArea, ClosedForms) {
  EXPECT_DOUBLE_EQ(polygon_area(square(0, 0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(polygon_area(Polygon({{0, 0}, {4, 0}, {0, 3}})), 6.0);
  EXPECT_DOUBLE_EQ(polygon_area(square(0, 0, 1).reversed()), 1.0);
}

TEST(PolygonArea, ReversalIsExactAndTranslationStable) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> coord(-500.0, 500.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point> pts;
    const int n = 3 + trial % 6;
    for (int i = 0; i < n; ++i) pts.push_back({coord(gen), coord(gen)});
    const Polygon p(pts);
    EXPECT_EQ(polygon_area(p), polygon_area(p.reversed()));
    const Point d{coord(gen) * 10, coord(gen) * 10};
    const double a = polygon_area(p);
    EXPECT_NEAR(polygon_area(p.translated(d)), a, 1e-9 * std::max(1.0, a));
  }
}

TEST(PolygonCentroid, ClosedFormsAndFallback) {
  const Point c = polygon_centroid(square(0, 0, 1));
  EXPECT_DOUBLE_EQ(c.x, 0.5);
  EXPECT_DOUBLE_EQ(c.y, 0.5);
  const Point t = polygon_centroid(Polygon({{0, 0}, {3, 0}, {0, 3}}));
  EXPECT_NEAR(t.x, 1.0, 1e-12);
  EXPECT_NEAR(t.y, 1.0, 1e-12);
  const Point d = polygon_centroid(Polygon({{0, 0}, {1, 0}, {2, 0}}));
  EXPECT_DOUBLE_EQ(d.x, 1.0);
  EXPECT_DOUBLE_EQ(d.y, 0.0);
}

TEST(PolygonCentroid, TranslationEquivariant) {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> coord(-100.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Polygon p({{coord(gen), coord(gen)}, {coord(gen), coord(gen)}, {coord(gen), coord(gen)},
                     {coord(gen), coord(gen)}});
    if (polygon_area(p) < 1.0) continue;
    const Point d{coord(gen) * 20, coord(gen) * 20};
    const Point a = polygon_centroid(p);
    const Point b = polygon_centroid(p.translated(d));
    EXPECT_NEAR(b.x, a.x + d.x, 1e-9 * std::max(1.0, std::abs(b.x)));
    EXPECT_NEAR(b.y, a.y + d.y, 1e-9 * std::max(1.0, std::abs(b.y)));
  }
}

TEST(PolygonBBox, Examples) {
  EXPECT_EQ(polygon_bbox(square(0, 0, 1)), (BBox{{0, 0}, {1, 1}}));
  EXPECT_EQ(polygon_bbox(Polygon({{2, 3}, {5, 3}, {2, 7}})), (BBox{{2, 3}, {5, 7}}));
  EXPECT_EQ(polygon_bbox(Polygon({{-1, -2}, {3, 0}, {0, 4}})), (BBox{{-1, -2}, {3, 4}}));
}

TEST(BuildingSet, ValidatesInvariants) {
  EXPECT_THROW(BuildingSet({{"a", 7, square(0, 0, 1), std::nullopt, true}}), Error);
  EXPECT_THROW(BuildingSet({{"a", 0, square(0, 0, 1), 5, true}}), Error);
  EXPECT_THROW(BuildingSet({{"a", 0, square(0, 0, 1), 1, true}, {"a", 0, square(5, 5, 1), 1, true}}), Error);
  // Same id on different maps is fine.
  const BuildingSet ok({{"a", 0, square(0, 0, 1), 1, true}, {"a", 1, square(5, 5, 1), 1, true}});
  EXPECT_EQ(ok.find(1, "a"), std::optional<std::size_t>(1));
  EXPECT_FALSE(ok.find(2, "a"));
}

TEST(Merge, RejectsDuplicates) {
  const BuildingSet a({{"x", 0, square(0, 0, 1), 0, true}});
  const BuildingSet b({{"y", 0, square(3, 3, 1), 2, true}});
  EXPECT_EQ(merge({a, b}).size(), 2u);
  EXPECT_THROW(merge({a, a}), Error);
}

TEST(ParseFeatureCollection, SingleLabeledSquare) {
  const auto text = one_feature("[[0,0],[4,0],[4,4],[0,4],[0,0]]", R"({"id":"b1","roof_material":"healthy_metal"})");
  const BuildingSet set = parse_feature_collection(text, 2);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set[0].id, "b1");
  EXPECT_EQ(set[0].map_id, 2);
  EXPECT_EQ(set[0].label, std::optional<int>(1));
  EXPECT_TRUE(set[0].verified);
  EXPECT_EQ(set[0].polygon.size(), 4u);
}

TEST(ParseFeatureCollection, EmptyCollection) {
  EXPECT_TRUE(parse_feature_collection(R"({"type":"FeatureCollection","features":[]})", 0).empty());
}

TEST(ParseFeatureCollection, AbsentOrNullMaterialMeansUnlabeled) {
  EXPECT_FALSE(parse_feature_collection(one_feature("[[0,0],[1,0],[1,1]]", R"({"id":"a"})"), 0)[0].label);
  EXPECT_FALSE(
      parse_feature_collection(one_feature("[[0,0],[1,0],[1,1]]", R"({"id":"a","roof_material":null})"), 0)[0].label);
}

TEST(ParseFeatureCollection, Errors) {
  try {
    parse_feature_collection(R"({"type":"FeatureCollection",)", 0);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.byte_offset(), 0u);
  }
  const std::string point =
      R"({"type":"FeatureCollection","features":[{"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]},"properties":{"id":"p7"}}]})";
  try {
    parse_feature_collection(point, 0);
    FAIL() << "expected FeatureError";
  } catch (const FeatureError& e) {
    EXPECT_NE(std::string(e.what()).find("p7"), std::string::npos);
  }
  try {
    parse_feature_collection(one_feature("[[0,0],[1,0],[1,1]]", R"({"id":"a","roof_material":"thatch"})"), 0);
    FAIL() << "expected FeatureError";
  } catch (const FeatureError& e) {
    EXPECT_NE(std::string(e.what()).find("thatch"), std::string::npos);
  }
}

TEST(ParseFeatureCollection, HolesWarn) {
  std::vector<std::string> warnings;
  const auto text = one_feature("[[0,0],[10,0],[10,10],[0,10]],[[2,2],[3,2],[3,3]]", R"({"id":"h"})");
  const BuildingSet set = parse_feature_collection(text, 0, &warnings);
  EXPECT_EQ(set.size(), 1u);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(ParseFeatureCollection, RoundTrip) {
  const BuildingSet set({{"a", 3, Polygon({{0.5, 1.25}, {10, 1}, {7.75, 9}}), 4, false},
                         {"b", 3, square(20, 20, 5), std::nullopt, true},
                         {"c,d", 3, square(-4, 7, 0.1), 0, true}});
  EXPECT_EQ(parse_feature_collection(to_feature_collection(set), 3), set);
}

}  // namespace
}  // namespace roofstack
