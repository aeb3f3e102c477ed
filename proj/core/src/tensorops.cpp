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

#include "roofstack/tensorops.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "roofstack/error.hpp"

namespace roofstack {

namespace {

constexpr char kMagic[4] = {'R', 'T', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;
// Refuse element counts above this before allocating (1 GiB of float32).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

std::size_t checked_volume(std::size_t k1, std::size_t k2, std::size_t m, std::size_t o) {
  if (k1 == 0 || k2 == 0 || m == 0 || o == 0) {
    throw DimensionError("tensor extents must all be positive");
  }
  std::size_t n = 1;
  for (std::size_t d : {k1, k2, m, o}) {
    if (n > std::numeric_limits<std::size_t>::max() / d) throw DimensionError("tensor volume overflows");
    n *= d;
  }
  return n;
}

}  // namespace

Tensor4::Tensor4(std::size_t k1, std::size_t k2, std::size_t m, std::size_t o)
    : k1_(k1), k2_(k2), m_(m), o_(o), data_(checked_volume(k1, k2, m, o), 0.0f) {}

Tensor4::Tensor4(std::size_t k1, std::size_t k2, std::size_t m, std::size_t o, std::vector<float> data)
    : k1_(k1), k2_(k2), m_(m), o_(o), data_(std::move(data)) {
  if (data_.size() != checked_volume(k1, k2, m, o)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match its extents");
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw DimensionError("tensor contains a non-finite value");
  }
}

Tensor4 adapt_weights_zero(const Tensor4& w1, std::size_t m2) {
  if (m2 < w1.m()) {
    throw DimensionError("zero-fill adaptation cannot shrink channels from " +
                         std::to_string(w1.m()) + " to " + std::to_string(m2));
  }
  Tensor4 w2(w1.k1(), w1.k2(), m2, w1.o());
  for (std::size_t u = 0; u < w1.k1(); ++u)
    for (std::size_t v = 0; v < w1.k2(); ++v)
      for (std::size_t c = 0; c < w1.m(); ++c)
        for (std::size_t out = 0; out < w1.o(); ++out) w2.at(u, v, c, out) = w1.at(u, v, c, out);
  return w2;
}

Tensor4 adapt_weights_proportional(const Tensor4& w1, std::size_t m2) {
  if (m2 == 0) throw DimensionError("target channel count must be at least 1");
  const std::size_t m1 = w1.m();
  Tensor4 w2(w1.k1(), w1.k2(), m2, w1.o());
  for (std::size_t u = 0; u < w1.k1(); ++u)
    for (std::size_t v = 0; v < w1.k2(); ++v)
      for (std::size_t j = 0; j < m2; ++j)
        for (std::size_t out = 0; out < w1.o(); ++out) {
          const double src = w1.at(u, v, j % m1, out);
          w2.at(u, v, j, out) =
              static_cast<float>(static_cast<double>(m1) * src / static_cast<double>(m2));
        }
  return w2;
}

FeatureImage conv2d_reference(const FeatureImage& img, const Tensor4& w,
                              const std::optional<Bias>& bias) {
  if (img.channels != w.m()) {
    throw DimensionError("image has " + std::to_string(img.channels) + " channels, kernel expects " +
                         std::to_string(w.m()));
  }
  if (img.height < w.k1() || img.width < w.k2()) {
    throw DimensionError("image is smaller than the kernel");
  }
  if (bias && bias->values.size() != w.o()) {
    throw DimensionError("bias length does not match output channels");
  }
  FeatureImage out(img.height - w.k1() + 1, img.width - w.k2() + 1, w.o());
  std::vector<double> acc(w.o());
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      for (std::size_t o = 0; o < w.o(); ++o) acc[o] = bias ? bias->values[o] : 0.0;
      for (std::size_t u = 0; u < w.k1(); ++u)
        for (std::size_t v = 0; v < w.k2(); ++v)
          for (std::size_t c = 0; c < w.m(); ++c) {
            const double px = img.at(y + u, x + v, c);
            const float* wrow = &w.data()[w.index(u, v, c, 0)];
            for (std::size_t o = 0; o < w.o(); ++o) acc[o] += px * wrow[o];
          }
      for (std::size_t o = 0; o < w.o(); ++o) out.at(y, x, o) = static_cast<float>(acc[o]);
    }
  }
  return out;
}

FeatureStats feature_stats(const FeatureImage& img) {
  FeatureStats s;
  if (img.values.empty()) return s;
  double sum = 0.0;
  for (float v : img.values) sum += v;
  s.mean = sum / static_cast<double>(img.values.size());
  double sq = 0.0;
  for (float v : img.values) sq += (v - s.mean) * (v - s.mean);
  s.variance = sq / static_cast<double>(img.values.size());
  return s;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

bool get_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

std::uint32_t need_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!get_u32(in, v)) throw FormatError(std::string("tensor stream truncated in ") + what);
  return v;
}

std::uint32_t to_u32(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("tensor extent does not fit in the file format");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor4& t, const std::optional<Bias>& bias) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, to_u32(t.k1()));
  put_u32(out, to_u32(t.k2()));
  put_u32(out, to_u32(t.m()));
  put_u32(out, to_u32(t.o()));
  for (float v : t.data()) put_f32(out, v);
  if (bias) {
    put_u32(out, to_u32(bias->values.size()));
    for (float v : bias->values) put_f32(out, v);
  }
}

std::vector<std::uint8_t> encode_tensor(const Tensor4& t, const std::optional<Bias>& bias) {
  std::ostringstream os(std::ios::binary);
  write_tensor(os, t, bias);
  const std::string s = os.str();
  return {s.begin(), s.end()};
}

TensorFile read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("tensor stream truncated in magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad tensor magic (expected RTNS)");
  const auto version = need_u32(in, "version");
  if (version != kVersion) {
    throw FormatError("unsupported tensor format version " + std::to_string(version));
  }
  std::uint64_t dims[4];
  const char* names[4] = {"k1", "k2", "m", "o"};
  std::uint64_t volume = 1;
  for (int i = 0; i < 4; ++i) {
    dims[i] = need_u32(in, names[i]);
    if (dims[i] == 0) throw FormatError(std::string("tensor extent ") + names[i] + " is zero");
    volume *= dims[i];
    if (volume > kMaxElements) throw FormatError("tensor dimensions overflow the supported size");
  }
  std::vector<float> data(static_cast<std::size_t>(volume));
  for (auto& v : data) v = std::bit_cast<float>(need_u32(in, "weights"));

  TensorFile file{Tensor4(dims[0], dims[1], dims[2], dims[3], std::move(data)), std::nullopt};

  std::uint32_t count = 0;
  if (get_u32(in, count)) {
    if (count != dims[3]) {
      throw FormatError("bias count " + std::to_string(count) + " does not match o = " +
                        std::to_string(dims[3]));
    }
    Bias b;
    b.values.resize(count);
    for (auto& v : b.values) v = std::bit_cast<float>(need_u32(in, "bias"));
    file.bias = std::move(b);
  } else if (in.gcount() != 0) {
    throw FormatError("tensor stream truncated in bias count");
  }
  return file;
}

TensorFile decode_tensor(const std::vector<std::uint8_t>& bytes) {
  std::istringstream is(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  return read_tensor(is);
}

}  // namespace roofstack
