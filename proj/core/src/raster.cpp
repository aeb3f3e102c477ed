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

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

#include <png.h>

#include "roofstack/error.hpp"

namespace roofstack {

ImageRGB::ImageRGB(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DimensionError("image dimensions must be positive");
  pixels.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

Mask::Mask(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DimensionError("mask dimensions must be positive");
  values.assign(static_cast<std::size_t>(w) * h, 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{255}));
}

Chip::Chip(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DimensionError("chip dimensions must be positive");
  rgb.assign(static_cast<std::size_t>(w) * h * 3, 0);
  mask.assign(static_cast<std::size_t>(w) * h, 0);
}

void Chip::validate() const {
  if (width <= 0 || height <= 0) throw DimensionError("chip dimensions must be positive");
  const auto n = static_cast<std::size_t>(width) * height;
  if (rgb.size() != n * 3 || mask.size() != n) {
    throw DimensionError("chip buffers do not match " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  for (auto v : mask) {
    if (v != 0 && v != 255) throw FormatError("chip mask contains a non-binary value");
  }
}

Mask rasterize_mask(const Polygon& p, Point origin, int width, int height) {
  Mask mask(width, height);
  const auto& v = p.exterior();
  const std::size_t n = v.size();
  std::vector<double> crossings;
  crossings.reserve(n);
  for (int i = 0; i < height; ++i) {
    const double y = origin.y + i + 0.5;
    crossings.clear();
    // Edge (a, b) is crossed when exactly one endpoint is strictly above the
    // scanline; the crossing x uses the same expression as a ray-cast test.
    for (std::size_t k = 0, prev = n - 1; k < n; prev = k++) {
      const Point& a = v[k];
      const Point& b = v[prev];
      if ((a.y > y) != (b.y > y)) {
        crossings.push_back((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    for (int j = 0; j < width; ++j) {
      const double x = origin.x + j + 0.5;
      // Inside iff an odd number of crossings lie strictly right of x.
      const auto right = crossings.end() - std::upper_bound(crossings.begin(), crossings.end(), x);
      if (right % 2 == 1) mask.at(j, i) = 255;
    }
  }
  return mask;
}

ChipWindow chip_window(const Polygon& p, int margin) {
  if (margin < 0) throw ParameterError("chip margin must be non-negative");
  const BBox box = polygon_bbox(p);
  const int x0 = static_cast<int>(std::floor(box.min.x));
  const int y0 = static_cast<int>(std::floor(box.min.y));
  const int x1 = std::max(static_cast<int>(std::ceil(box.max.x)), x0 + 1);
  const int y1 = std::max(static_cast<int>(std::ceil(box.max.y)), y0 + 1);
  return {x0 - margin, y0 - margin, x1 - x0 + 2 * margin, y1 - y0 + 2 * margin};
}

Chip extract_chip(const ImageRGB& img, const Building& b, int margin) {
  const ChipWindow win = chip_window(b.polygon, margin);
  const BBox box = polygon_bbox(b.polygon);
  if (box.max.x <= 0.0 || box.max.y <= 0.0 || box.min.x >= img.width || box.min.y >= img.height) {
    throw ExtractionError("building '" + b.id + "' lies entirely outside the " +
                          std::to_string(img.width) + "x" + std::to_string(img.height) + " image");
  }
  Chip chip(win.width, win.height);
  chip.margin = margin;
  chip.building_id = b.id;
  const int sx0 = std::max(win.x0, 0);
  const int sy0 = std::max(win.y0, 0);
  const int sx1 = std::min(win.x0 + win.width, img.width);
  const int sy1 = std::min(win.y0 + win.height, img.height);
  for (int y = sy0; y < sy1; ++y) {
    const std::uint8_t* src = img.at(sx0, y);
    std::uint8_t* dst = chip.pixel(sx0 - win.x0, y - win.y0);
    std::memcpy(dst, src, static_cast<std::size_t>(sx1 - sx0) * 3);
  }
  chip.mask = rasterize_mask(b.polygon, {static_cast<double>(win.x0), static_cast<double>(win.y0)},
                             win.width, win.height)
                  .values;
  return chip;
}

// ---------------------------------------------------------------------------
// PNG codec. libpng reports errors with longjmp, so the functions holding
// setjmp keep only trivially destructible locals.

namespace {

constexpr const char* kMarginKey = "roofstack:margin";
constexpr const char* kBuildingKey = "roofstack:building_id";

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_read_mem(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->data + cur->pos, len);
  cur->pos += len;
}

void png_silent_warning(png_structp, png_const_charp) {}

// Keeps libpng off stderr; the message surfaces in the thrown FormatError.
[[noreturn]] void png_record_error(png_structp png, png_const_charp msg) {
  if (auto* buf = static_cast<char*>(png_get_error_ptr(png))) {
    std::strncpy(buf, msg, 127);
    buf[127] = '\0';
  }
  png_longjmp(png, 1);
}

struct WriteJob {
  const std::uint8_t* rows;  // interleaved, row-major
  int width;
  int height;
  int channels;  // 3 or 4
  png_text* texts;
  int num_texts;
  std::vector<std::uint8_t>* out;
  char error[128];
};

bool run_png_write(WriteJob& job) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, job.error, png_record_error,
                                            png_silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, job.out, png_append, png_flush_noop);
  // Stored deflate blocks: noisy imagery only shrinks by about a third and
  // compressing costs ten times the encode time.
  png_set_compression_level(png, 0);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(job.width),
               static_cast<png_uint_32>(job.height), 8,
               job.channels == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (job.num_texts > 0) png_set_text(png, info, job.texts, job.num_texts);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(job.width) * job.channels;
  for (int y = 0; y < job.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(job.rows + stride * y));
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct ReadJob {
  ReadCursor cursor;
  // Filled after the header is read.
  png_uint_32 width;
  png_uint_32 height;
  int channels;
  // Provided by the caller through the size callback.
  std::vector<std::uint8_t>* pixels;
  std::vector<std::pair<std::string, std::string>>* texts;
  char error[128];
};

bool run_png_read(ReadJob& job) {
  if (job.cursor.size < 8 || png_sig_cmp(job.cursor.data, 0, 8) != 0) {
    std::strcpy(job.error, "missing PNG signature");
    return false;
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, job.error, png_record_error, png_silent_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &job.cursor, png_read_mem);
  png_read_info(png, info);
  int bit_depth = 0;
  int color_type = 0;
  png_get_IHDR(png, info, &job.width, &job.height, &bit_depth, &color_type, nullptr, nullptr,
               nullptr);
  if (job.width == 0 || job.height == 0 || job.width > (1u << 15) || job.height > (1u << 15)) {
    png_error(png, "unsupported PNG dimensions");
  }
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);
  job.channels = png_get_channels(png, info);
  if (job.channels != 3 && job.channels != 4) png_error(png, "unsupported PNG channel layout");
  job.pixels->resize(static_cast<std::size_t>(job.width) * job.height * job.channels);
  const std::size_t stride = static_cast<std::size_t>(job.width) * job.channels;
  for (png_uint_32 y = 0; y < job.height; ++y) {
    png_read_row(png, job.pixels->data() + stride * y, nullptr);
  }
  png_read_end(png, info);
  png_textp text = nullptr;
  int num_text = 0;
  png_get_text(png, info, &text, &num_text);
  for (int i = 0; i < num_text; ++i) {
    job.texts->emplace_back(text[i].key, text[i].text ? text[i].text : "");
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

std::vector<std::uint8_t> write_png(const std::uint8_t* rows, int width, int height, int channels,
                                    const std::vector<std::pair<std::string, std::string>>& kv) {
  std::vector<std::uint8_t> out;
  std::vector<png_text> texts(kv.size());
  for (std::size_t i = 0; i < kv.size(); ++i) {
    std::memset(&texts[i], 0, sizeof(png_text));
    texts[i].compression = PNG_TEXT_COMPRESSION_NONE;
    texts[i].key = const_cast<char*>(kv[i].first.c_str());
    texts[i].text = const_cast<char*>(kv[i].second.c_str());
    texts[i].text_length = kv[i].second.size();
  }
  WriteJob job{rows, width, height, channels, texts.data(), static_cast<int>(texts.size()), &out, {}};
  if (!run_png_write(job)) throw FormatError(std::string("PNG encoding failed: ") + job.error);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_chip(const Chip& c) {
  c.validate();
  std::vector<std::uint8_t> rgba(static_cast<std::size_t>(c.width) * c.height * 4);
  for (std::size_t i = 0, n = c.mask.size(); i < n; ++i) {
    rgba[i * 4 + 0] = c.rgb[i * 3 + 0];
    rgba[i * 4 + 1] = c.rgb[i * 3 + 1];
    rgba[i * 4 + 2] = c.rgb[i * 3 + 2];
    rgba[i * 4 + 3] = c.mask[i];
  }
  return write_png(rgba.data(), c.width, c.height, 4,
                   {{kMarginKey, std::to_string(c.margin)}, {kBuildingKey, c.building_id}});
}

Chip decode_chip(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> pixels;
  std::vector<std::pair<std::string, std::string>> texts;
  ReadJob job{{bytes.data(), bytes.size(), 0}, 0, 0, 0, &pixels, &texts, {}};
  if (!run_png_read(job)) throw FormatError(std::string("corrupt chip PNG stream: ") + job.error);
  if (job.channels != 4) throw FormatError("chip PNG has no alpha (mask) channel");
  Chip c(static_cast<int>(job.width), static_cast<int>(job.height));
  for (std::size_t i = 0, n = c.mask.size(); i < n; ++i) {
    c.rgb[i * 3 + 0] = pixels[i * 4 + 0];
    c.rgb[i * 3 + 1] = pixels[i * 4 + 1];
    c.rgb[i * 3 + 2] = pixels[i * 4 + 2];
    c.mask[i] = pixels[i * 4 + 3];
  }
  for (const auto& [key, value] : texts) {
    if (key == kMarginKey) {
      try {
        c.margin = std::stoi(value);
      } catch (const std::exception&) {
        throw FormatError("chip PNG margin text is not an integer");
      }
    } else if (key == kBuildingKey) {
      c.building_id = value;
    }
  }
  c.validate();
  return c;
}

std::vector<std::uint8_t> encode_png_rgb(const ImageRGB& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3 || img.width <= 0) {
    throw DimensionError("image buffer does not match its dimensions");
  }
  return write_png(img.pixels.data(), img.width, img.height, 3, {});
}

ImageRGB decode_png_rgb(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> pixels;
  std::vector<std::pair<std::string, std::string>> texts;
  ReadJob job{{bytes.data(), bytes.size(), 0}, 0, 0, 0, &pixels, &texts, {}};
  if (!run_png_read(job)) throw FormatError(std::string("corrupt PNG stream: ") + job.error);
  ImageRGB img(static_cast<int>(job.width), static_cast<int>(job.height));
  if (job.channels == 3) {
    img.pixels = std::move(pixels);
  } else {
    for (std::size_t i = 0, n = img.pixels.size() / 3; i < n; ++i) {
      std::memcpy(&img.pixels[i * 3], &pixels[i * 4], 3);
    }
  }
  return img;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace roofstack
