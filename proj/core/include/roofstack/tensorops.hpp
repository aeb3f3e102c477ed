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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace roofstack {

/// Convolution weights laid out (k1, k2, m, o): kernel rows, kernel columns,
/// input channels, output channels. The last index varies fastest.
class Tensor4 {
 public:
  Tensor4() = default;
  /// Zero-filled tensor. Throws DimensionError on a zero extent or overflow.
  Tensor4(std::size_t k1, std::size_t k2, std::size_t m, std::size_t o);
  Tensor4(std::size_t k1, std::size_t k2, std::size_t m, std::size_t o, std::vector<float> data);

  std::size_t k1() const noexcept { return k1_; }
  std::size_t k2() const noexcept { return k2_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t o() const noexcept { return o_; }

  std::size_t index(std::size_t u, std::size_t v, std::size_t c, std::size_t out) const noexcept {
    return ((u * k2_ + v) * m_ + c) * o_ + out;
  }
  float& at(std::size_t u, std::size_t v, std::size_t c, std::size_t out) {
    return data_[index(u, v, c, out)];
  }
  float at(std::size_t u, std::size_t v, std::size_t c, std::size_t out) const {
    return data_[index(u, v, c, out)];
  }

  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t k1_ = 0, k2_ = 0, m_ = 0, o_ = 0;
  std::vector<float> data_;
};

/// One value per output feature map.
struct Bias {
  std::vector<float> values;
  friend bool operator==(const Bias&, const Bias&) = default;
};

/// Grows the input-channel axis to `m2`, copying the original slices and
/// zeroing the new ones. Throws DimensionError when m2 < w1.m().
Tensor4 adapt_weights_zero(const Tensor4& w1, std::size_t m2);

/// Slice j of the result is (m1 / m2) times slice (j mod m1) of `w1`, so
/// each input channel contributes proportionally. Any m2 >= 1 is accepted.
Tensor4 adapt_weights_proportional(const Tensor4& w1, std::size_t m2);

/// Height x width x channels image of reals, channel fastest.
struct FeatureImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> values;

  FeatureImage() = default;
  FeatureImage(std::size_t h, std::size_t w, std::size_t c)
      : height(h), width(w), channels(c), values(h * w * c, 0.0f) {}

  float& at(std::size_t y, std::size_t x, std::size_t c) { return values[(y * width + x) * channels + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return values[(y * width + x) * channels + c];
  }

  friend bool operator==(const FeatureImage&, const FeatureImage&) = default;
};

/// Stride-1, valid-padding cross-correlation (no kernel flip), accumulated
/// in double: out[y,x,o] = bias[o] + sum_{u,v,c} img[y+u, x+v, c] * w[u,v,c,o].
FeatureImage conv2d_reference(const FeatureImage& img, const Tensor4& w,
                              const std::optional<Bias>& bias = std::nullopt);

struct FeatureStats {
  double mean = 0.0;
  double variance = 0.0;
};

FeatureStats feature_stats(const FeatureImage& img);

struct TensorFile {
  Tensor4 weights;
  std::optional<Bias> bias;
};

/// Little-endian: "RTNS", u32 version = 1, u32 k1, k2, m, o, then float32
/// values in (k1, k2, m, o) order; optionally u32 count + float32 bias.
void write_tensor(std::ostream& out, const Tensor4& t, const std::optional<Bias>& bias = std::nullopt);
std::vector<std::uint8_t> encode_tensor(const Tensor4& t, const std::optional<Bias>& bias = std::nullopt);

/// Throws FormatError on bad magic/version, truncation or oversize dims.
TensorFile read_tensor(std::istream& in);
TensorFile decode_tensor(const std::vector<std::uint8_t>& bytes);

}  // namespace roofstack
