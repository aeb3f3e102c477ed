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

// Brute-force reference implementations used as test oracles. Each one is
// written directly from the defining formula and shares no code with the
// library routine it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "roofstack/geodata.hpp"
#include "roofstack/raster.hpp"
#include "roofstack/tensorops.hpp"

namespace roofstack::oracle {

/// Classic even-odd crossing test (W. Randolph Franklin).
inline bool pnpoly(const std::vector<Point>& v, double x, double y) {
  bool inside = false;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (((v[i].y > y) != (v[j].y > y)) && (x < (v[j].x - v[i].x) * (y - v[i].y) / (v[j].y - v[i].y) + v[i].x)) {
      inside = !inside;
    }
  }
  return inside;
}

/// Direct summation of out[y,x,o] = b[o] + sum w[u,v,c,o] * img[y+u,x+v,c].
inline std::vector<double> naive_conv(const FeatureImage& img, const Tensor4& w, const std::vector<float>& bias) {
  const std::size_t oh = img.height - w.k1() + 1;
  const std::size_t ow = img.width - w.k2() + 1;
  std::vector<double> out(oh * ow * w.o(), 0.0);
  for (std::size_t o = 0; o < w.o(); ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (std::size_t c = 0; c < w.m(); ++c)
          for (std::size_t u = 0; u < w.k1(); ++u)
            for (std::size_t v = 0; v < w.k2(); ++v)
              acc += static_cast<double>(img.at(y + u, x + v, c)) * static_cast<double>(w.at(u, v, c, o));
        out[(y * ow + x) * w.o() + o] = acc;
      }
    }
  }
  return out;
}

struct BruteNeighbor {
  std::size_t index;
  double distance;
};

/// Every other same-map point, sorted by (distance, id).
inline std::vector<BruteNeighbor> brute_neighbors(const std::vector<Point>& pts, const std::vector<int>& maps,
                                                  const std::vector<std::string>& ids, std::size_t q) {
  std::vector<BruteNeighbor> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i == q || maps[i] != maps[q]) continue;
    const double dx = pts[i].x - pts[q].x, dy = pts[i].y - pts[q].y;
    out.push_back({i, std::sqrt(dx * dx + dy * dy)});
  }
  std::sort(out.begin(), out.end(), [&](const BruteNeighbor& a, const BruteNeighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return ids[a.index] < ids[b.index];
  });
  return out;
}

/// Central differences of f at x with step h.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Random chip with a rectangular mask; std::mt19937 keeps it independent of
/// the library generator.
inline Chip random_chip(int w, int h, int margin, std::uint32_t seed) {
  std::mt19937 gen(seed);
  Chip c(w, h);
  for (auto& v : c.rgb) v = static_cast<std::uint8_t>(gen() & 0xFF);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      c.mask_at(x, y) = (x >= margin && x < w - margin && y >= margin && y < h - margin) ? 255 : 0;
  c.margin = margin;
  c.building_id = "chip" + std::to_string(seed);
  return c;
}

}  // namespace roofstack::oracle
