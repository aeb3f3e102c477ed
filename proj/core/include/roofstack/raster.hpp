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
#include <span>
#include <string>
#include <vector>

#include "roofstack/geodata.hpp"

namespace roofstack {

/// Row-major 8-bit RGB image.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  ImageRGB() = default;
  ImageRGB(int w, int h);

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const ImageRGB&, const ImageRGB&) = default;
};

/// Single-channel binary mask, values 0 or 255.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(int w, int h);

  std::uint8_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Per-building crop: RGB plus the roof mask over the same window.
struct Chip {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;   // width * height * 3
  std::vector<std::uint8_t> mask;  // width * height, 0 or 255
  int margin = 0;
  std::string building_id;

  Chip() = default;
  Chip(int w, int h);

  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  std::uint8_t& mask_at(int x, int y) { return mask[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t mask_at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x]; }

  /// Throws DimensionError/FormatError when buffers or mask values are invalid.
  void validate() const;

  friend bool operator==(const Chip&, const Chip&) = default;
};

/// Pixel (row i, col j) is 255 iff its center (origin.x + j + 0.5,
/// origin.y + i + 0.5) lies inside `p` under the even-odd rule.
Mask rasterize_mask(const Polygon& p, Point origin, int width, int height);

/// Integer window covering the polygon bbox grown by `margin` on every side.
struct ChipWindow {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const ChipWindow&, const ChipWindow&) = default;
};

ChipWindow chip_window(const Polygon& p, int margin);

/// Cuts the chip for `b`. The window keeps its full size; parts outside the
/// image are zero-filled. Throws ExtractionError when the polygon bbox lies
/// entirely outside the image.
Chip extract_chip(const ImageRGB& img, const Building& b, int margin);

/// RGBA PNG with alpha = mask; margin and building id travel in text chunks.
std::vector<std::uint8_t> encode_chip(const Chip& c);
Chip decode_chip(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png_rgb(const ImageRGB& img);
/// Accepts 8-bit gray, RGB or RGBA PNGs; alpha is dropped.
ImageRGB decode_png_rgb(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace roofstack
