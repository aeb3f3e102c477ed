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
#include <numbers>

#include <nlohmann/json.hpp>

#include "roofstack/error.hpp"
#include "roofstack/rng.hpp"

namespace roofstack {

std::string_view to_string(BlurMode mode) {
  switch (mode) {
    case BlurMode::kMedian: return "median";
    case BlurMode::kBox: return "box";
    case BlurMode::kGaussian: return "gaussian";
  }
  return "?";
}

BlurMode blur_mode_from_string(std::string_view name) {
  if (name == "median") return BlurMode::kMedian;
  if (name == "box") return BlurMode::kBox;
  if (name == "gaussian") return BlurMode::kGaussian;
  throw ParameterError("unknown blur mode '" + std::string(name) + "'");
}

void AugmentConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(std::string(name) + " must be in [0,1]");
  };
  prob(p_dihedral, "p_dihedral");
  prob(p_rgb_shift, "p_rgb_shift");
  prob(p_blur, "p_blur");
  prob(p_noise, "p_noise");
  prob(p_elastic, "p_elastic");
  prob(p_grid, "p_grid");
  prob(p_optical, "p_optical");
  prob(p_mask_jitter, "p_mask_jitter");
  if (rgb_shift_limit < 0 || rgb_shift_limit > 255) throw ParameterError("rgb_shift_limit out of range");
  if (blur_modes.empty() && p_blur > 0.0) throw ParameterError("blur enabled with no blur modes");
  if (blur_kernel.lo < 3 || blur_kernel.hi < blur_kernel.lo) throw ParameterError("blur_kernel range invalid");
  if (!(blur_sigma.lo > 0.0) || blur_sigma.hi < blur_sigma.lo) throw ParameterError("blur_sigma range invalid");
  if (noise_sigma.lo < 0.0 || noise_sigma.hi < noise_sigma.lo) throw ParameterError("noise_sigma range invalid");
  if (elastic_alpha < 0.0 || !(elastic_sigma > 0.0)) throw ParameterError("elastic parameters invalid");
  if (grid_num_steps < 2 || grid_distort_limit < 0.0 || grid_distort_limit >= 1.0) {
    throw ParameterError("grid distortion parameters invalid");
  }
  if (optical_distort_limit < 0.0 || optical_distort_limit >= 1.0) {
    throw ParameterError("optical_distort_limit must be in [0,1)");
  }
  if (crop_margin.lo < 0 || crop_margin.hi < crop_margin.lo) throw ParameterError("crop_margin range invalid");
  if (mask_max_shift_px < 0 || mask_max_angle_deg < 0.0) throw ParameterError("mask jitter bounds invalid");
  if (output_size <= 0) throw ParameterError("output_size must be positive");
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
  std::vector<std::string> modes;
  for (auto m : c.blur_modes) modes.emplace_back(to_string(m));
  j = nlohmann::json{
      {"rgb_shift_limit", c.rgb_shift_limit},
      {"blur_modes", modes},
      {"blur_kernel", {c.blur_kernel.lo, c.blur_kernel.hi}},
      {"blur_sigma", {c.blur_sigma.lo, c.blur_sigma.hi}},
      {"noise_sigma", {c.noise_sigma.lo, c.noise_sigma.hi}},
      {"elastic", {{"alpha", c.elastic_alpha}, {"sigma", c.elastic_sigma}}},
      {"grid", {{"num_steps", c.grid_num_steps}, {"distort_limit", c.grid_distort_limit}}},
      {"optical", {{"distort_limit", c.optical_distort_limit}}},
      {"crop_margin", {c.crop_margin.lo, c.crop_margin.hi}},
      {"mask_jitter", {{"max_shift_px", c.mask_max_shift_px}, {"max_angle_deg", c.mask_max_angle_deg}}},
      {"output_size", c.output_size},
      {"probabilities",
       {{"dihedral", c.p_dihedral},
        {"rgb_shift", c.p_rgb_shift},
        {"blur", c.p_blur},
        {"noise", c.p_noise},
        {"elastic", c.p_elastic},
        {"grid", c.p_grid},
        {"optical", c.p_optical},
        {"mask_jitter", c.p_mask_jitter}}}};
}

namespace {

template <typename T>
void read_range(const nlohmann::json& j, const char* key, Range<T>& r) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ParameterError(std::string(key) + " must be [lo, hi]");
  r = {v[0].get<T>(), v[1].get<T>()};
}

template <typename T>
void read_value(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  c = AugmentConfig{};
  try {
    read_value(j, "rgb_shift_limit", c.rgb_shift_limit);
    if (j.contains("blur_modes")) {
      c.blur_modes.clear();
      for (const auto& m : j.at("blur_modes")) c.blur_modes.push_back(blur_mode_from_string(m.get<std::string>()));
    }
    read_range(j, "blur_kernel", c.blur_kernel);
    read_range(j, "blur_sigma", c.blur_sigma);
    read_range(j, "noise_sigma", c.noise_sigma);
    if (j.contains("elastic")) {
      read_value(j.at("elastic"), "alpha", c.elastic_alpha);
      read_value(j.at("elastic"), "sigma", c.elastic_sigma);
    }
    if (j.contains("grid")) {
      read_value(j.at("grid"), "num_steps", c.grid_num_steps);
      read_value(j.at("grid"), "distort_limit", c.grid_distort_limit);
    }
    if (j.contains("optical")) read_value(j.at("optical"), "distort_limit", c.optical_distort_limit);
    read_range(j, "crop_margin", c.crop_margin);
    if (j.contains("mask_jitter")) {
      read_value(j.at("mask_jitter"), "max_shift_px", c.mask_max_shift_px);
      read_value(j.at("mask_jitter"), "max_angle_deg", c.mask_max_angle_deg);
    }
    read_value(j, "output_size", c.output_size);
    if (j.contains("probabilities")) {
      const auto& p = j.at("probabilities");
      read_value(p, "dihedral", c.p_dihedral);
      read_value(p, "rgb_shift", c.p_rgb_shift);
      read_value(p, "blur", c.p_blur);
      read_value(p, "noise", c.p_noise);
      read_value(p, "elastic", c.p_elastic);
      read_value(p, "grid", c.p_grid);
      read_value(p, "optical", c.p_optical);
      read_value(p, "mask_jitter", c.p_mask_jitter);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("augment config: ") + e.what());
  }
  c.validate();
}

std::uint64_t SeedPolicy::item_seed(std::string_view building_id, std::uint64_t epoch,
                                    std::uint64_t variant_index) const {
  std::uint64_t s = combine_seed(global_seed, fnv1a64(building_id));
  s = combine_seed(s, epoch);
  return combine_seed(s, variant_index);
}

// ---------------------------------------------------------------------------
// Dihedral group

namespace {

Chip like(const Chip& c, int w, int h) {
  Chip out(w, h);
  out.margin = c.margin;
  out.building_id = c.building_id;
  return out;
}

Chip rotate90_ccw(const Chip& c) {
  Chip out = like(c, c.height, c.width);
  // out(x', y') = in(W - 1 - y', x')
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const int sx = c.width - 1 - y;
      const int sy = x;
      std::copy_n(c.pixel(sx, sy), 3, out.pixel(x, y));
      out.mask_at(x, y) = c.mask_at(sx, sy);
    }
  }
  return out;
}

Chip flip_horizontal(const Chip& c) {
  Chip out = like(c, c.width, c.height);
  for (int y = 0; y < c.height; ++y) {
    for (int x = 0; x < c.width; ++x) {
      std::copy_n(c.pixel(c.width - 1 - x, y), 3, out.pixel(x, y));
      out.mask_at(x, y) = c.mask_at(c.width - 1 - x, y);
    }
  }
  return out;
}

}  // namespace

Chip dihedral(const Chip& c, int k) {
  if (k < 0 || k > 7) throw ParameterError("dihedral index must be in [0,8), got " + std::to_string(k));
  Chip out = c;
  for (int r = 0; r < k % 4; ++r) out = rotate90_ccw(out);
  if (k >= 4) out = flip_horizontal(out);
  return out;
}

int dihedral_compose(int second, int first) {
  // g = F^f R^r. Since R F = F R^-1: F^fb R^rb F^fa R^ra = F^(fa^fb) R^(ra + (fa ? -rb : rb)).
  const int ra = first % 4, fa = first / 4;
  const int rb = second % 4, fb = second / 4;
  const int r = ((fa ? ra - rb : ra + rb) % 4 + 4) % 4;
  return ((fa ^ fb) ? 4 : 0) + r;
}

int dihedral_inverse(int k) {
  if (k >= 4) return k;  // reflections are involutions
  return (4 - k) % 4;
}

// ---------------------------------------------------------------------------
// Color transforms

namespace {

std::uint8_t clamp_u8(double v) {
  const long r = std::lround(v);
  return static_cast<std::uint8_t>(std::clamp<long>(r, 0, 255));
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable filter with replicated borders over a width x height x channels
// double buffer.
std::vector<double> separable_filter(const std::vector<double>& src, int width, int height,
                                     int channels, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(src.size(), 0.0);
  std::vector<double> out(src.size(), 0.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int ch = 0; ch < channels; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sx = std::clamp(x + i, 0, width - 1);
          acc += kernel[i + radius] * src[(static_cast<std::size_t>(y) * width + sx) * channels + ch];
        }
        tmp[(static_cast<std::size_t>(y) * width + x) * channels + ch] = acc;
      }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int ch = 0; ch < channels; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int sy = std::clamp(y + i, 0, height - 1);
          acc += kernel[i + radius] * tmp[(static_cast<std::size_t>(sy) * width + x) * channels + ch];
        }
        out[(static_cast<std::size_t>(y) * width + x) * channels + ch] = acc;
      }
  return out;
}

}  // namespace

Chip rgb_shift(const Chip& c, std::array<int, 3> delta, int limit) {
  for (int d : delta) {
    if (std::abs(d) > limit) {
      throw ParameterError("rgb shift " + std::to_string(d) + " exceeds limit " + std::to_string(limit));
    }
  }
  Chip out = c;
  for (std::size_t i = 0; i < out.rgb.size(); ++i) {
    out.rgb[i] = static_cast<std::uint8_t>(std::clamp(static_cast<int>(c.rgb[i]) + delta[i % 3], 0, 255));
  }
  return out;
}

Chip blur(const Chip& c, BlurMode mode, double param) {
  Chip out = c;
  const int w = c.width, h = c.height;
  if (mode == BlurMode::kGaussian) {
    if (!(param > 0.0)) throw ParameterError("gaussian blur sigma must be positive");
    std::vector<double> src(c.rgb.begin(), c.rgb.end());
    const auto filtered = separable_filter(src, w, h, 3, gaussian_kernel(param));
    for (std::size_t i = 0; i < filtered.size(); ++i) out.rgb[i] = clamp_u8(filtered[i]);
    return out;
  }
  const int size = static_cast<int>(param);
  if (size != param || size < 3 || size % 2 == 0) {
    throw ParameterError("blur kernel size must be an odd integer >= 3");
  }
  const int r = size / 2;
  std::vector<std::uint8_t> window(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        std::size_t n = 0;
        int sum = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = std::clamp(x + dx, 0, w - 1);
            const int sy = std::clamp(y + dy, 0, h - 1);
            const std::uint8_t v = c.pixel(sx, sy)[ch];
            window[n++] = v;
            sum += v;
          }
        if (mode == BlurMode::kBox) {
          out.pixel(x, y)[ch] = clamp_u8(static_cast<double>(sum) / static_cast<double>(n));
        } else {
          std::nth_element(window.begin(), window.begin() + n / 2, window.begin() + n);
          out.pixel(x, y)[ch] = window[n / 2];
        }
      }
  return out;
}

Chip gauss_noise(const Chip& c, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ParameterError("noise sigma must be non-negative");
  Chip out = c;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (auto& v : out.rgb) v = clamp_u8(static_cast<double>(v) + rng.normal(0.0, sigma));
  return out;
}

// ---------------------------------------------------------------------------
// Geometric remaps

namespace {

enum class Border { kClamp, kZero };

double sample(const std::uint8_t* base, int width, int height, int stride, int channel, double sx,
              double sy, Border border) {
  auto fetch = [&](int x, int y) -> double {
    if (border == Border::kZero && (x < 0 || y < 0 || x >= width || y >= height)) return 0.0;
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return base[(static_cast<std::size_t>(y) * width + x) * stride + channel];
  };
  if (border == Border::kClamp) {
    sx = std::clamp(sx, 0.0, static_cast<double>(width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(height - 1));
  }
  const double fx = std::floor(sx), fy = std::floor(sy);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double tx = sx - fx, ty = sy - fy;
  const double top = fetch(x0, y0) * (1.0 - tx) + (tx > 0.0 ? fetch(x0 + 1, y0) * tx : 0.0);
  const double bot = ty > 0.0 ? fetch(x0, y0 + 1) * (1.0 - tx) + (tx > 0.0 ? fetch(x0 + 1, y0 + 1) * tx : 0.0)
                              : 0.0;
  return top * (1.0 - ty) + bot * ty;
}

std::uint8_t threshold(double v) { return v >= 128.0 ? 255 : 0; }

// Backward remap of RGB and mask: output pixel (x, y) reads the input at
// map(x, y). Both channels share one coordinate field.
template <typename MapFn>
Chip remap(const Chip& c, MapFn&& map, Border border) {
  Chip out = c;
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      const auto [sx, sy] = map(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        out.pixel(x, y)[ch] = clamp_u8(sample(c.rgb.data(), c.width, c.height, 3, ch, sx, sy, border));
      }
      out.mask_at(x, y) = threshold(sample(c.mask.data(), c.width, c.height, 1, 0, sx, sy, border));
    }
  return out;
}

}  // namespace

Chip elastic_transform(const Chip& c, double alpha, double sigma, std::uint64_t seed) {
  if (alpha < 0.0 || !(sigma > 0.0)) throw ParameterError("elastic transform needs alpha >= 0, sigma > 0");
  if (alpha == 0.0) return c;
  const int w = c.width, h = c.height;
  const auto n = static_cast<std::size_t>(w) * h;
  Rng rng(seed);
  std::vector<double> field(n * 2);
  for (auto& v : field) v = rng.uniform(-1.0, 1.0);
  field = separable_filter(field, w, h, 2, gaussian_kernel(sigma));
  return remap(
      c,
      [&](int x, int y) {
        const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 2;
        return std::pair{x + alpha * field[i], y + alpha * field[i + 1]};
      },
      Border::kClamp);
}

namespace {

// Source coordinate for each output coordinate along one axis.
std::vector<double> grid_axis(int length, int steps, double limit, Rng& rng) {
  std::vector<double> src(length);
  for (int i = 0; i < length; ++i) src[i] = i;
  std::vector<double> factors(steps);
  for (auto& f : factors) f = rng.uniform(1.0 - limit, 1.0 + limit);
  if (length < 2) return src;
  const double span = length - 1;
  std::vector<double> knots(steps + 1, 0.0);
  for (int i = 0; i < steps; ++i) knots[i + 1] = knots[i] + factors[i];
  const double total = knots[steps];
  for (auto& k : knots) k = k / total * span;
  knots[steps] = span;
  const double step = span / steps;
  for (int x = 0; x < length; ++x) {
    const int cell = std::min(steps - 1, static_cast<int>(x / step));
    const double t = (x - cell * step) / step;
    src[x] = knots[cell] + t * (knots[cell + 1] - knots[cell]);
  }
  src[0] = 0.0;
  src[length - 1] = span;
  return src;
}

}  // namespace

Chip grid_distortion(const Chip& c, int num_steps, double distort_limit, std::uint64_t seed) {
  if (num_steps < 2) throw ParameterError("grid distortion needs num_steps >= 2");
  if (distort_limit < 0.0 || distort_limit >= 1.0) throw ParameterError("grid distort_limit must be in [0,1)");
  if (distort_limit == 0.0) return c;
  Rng rng(seed);
  const auto xs = grid_axis(c.width, num_steps, distort_limit, rng);
  const auto ys = grid_axis(c.height, num_steps, distort_limit, rng);
  return remap(c, [&](int x, int y) { return std::pair{xs[x], ys[y]}; }, Border::kClamp);
}

Chip optical_distortion(const Chip& c, double k) {
  if (!(std::abs(k) < 1.0)) throw ParameterError("optical distortion needs |k| < 1");
  if (k == 0.0) return c;
  const double cx = (c.width - 1) / 2.0;
  const double cy = (c.height - 1) / 2.0;
  const double r2max = cx * cx + cy * cy;
  if (r2max == 0.0) return c;
  return remap(
      c,
      [&](int x, int y) {
        const double dx = x - cx, dy = y - cy;
        const double f = 1.0 + k * (dx * dx + dy * dy) / r2max;
        return std::pair{cx + dx * f, cy + dy * f};
      },
      Border::kClamp);
}

Chip resize_chip(const Chip& c, int width, int height) {
  if (width <= 0 || height <= 0) throw ParameterError("resize target must be positive");
  if (width == c.width && height == c.height) return c;
  Chip out = like(c, width, height);
  const double scale_x = static_cast<double>(c.width) / width;
  const double scale_y = static_cast<double>(c.height) / height;
  for (int y = 0; y < height; ++y) {
    const double sy = (y + 0.5) * scale_y - 0.5;
    for (int x = 0; x < width; ++x) {
      const double sx = (x + 0.5) * scale_x - 0.5;
      for (int ch = 0; ch < 3; ++ch) {
        out.pixel(x, y)[ch] = clamp_u8(sample(c.rgb.data(), c.width, c.height, 3, ch, sx, sy, Border::kClamp));
      }
      out.mask_at(x, y) = threshold(sample(c.mask.data(), c.width, c.height, 1, 0, sx, sy, Border::kClamp));
    }
  }
  return out;
}

Chip random_crop_margin(const Chip& c, CropMargins m, int output_size) {
  for (int v : {m.left, m.right, m.top, m.bottom}) {
    if (v < 0 || v > c.margin) {
      throw ParameterError("crop margin " + std::to_string(v) + " outside [0, " + std::to_string(c.margin) +
                           "] for chip '" + c.building_id + "'");
    }
  }
  const int w = c.width - m.left - m.right;
  const int h = c.height - m.top - m.bottom;
  if (w <= 0 || h <= 0) throw ParameterError("crop margins leave an empty window");
  Chip cropped = like(c, w, h);
  std::size_t mask_pixels = 0;
  for (int y = 0; y < h; ++y) {
    std::copy_n(c.pixel(m.left, y + m.top), static_cast<std::size_t>(w) * 3, cropped.pixel(0, y));
    for (int x = 0; x < w; ++x) {
      cropped.mask_at(x, y) = c.mask_at(x + m.left, y + m.top);
      mask_pixels += cropped.mask_at(x, y) != 0;
    }
  }
  if (mask_pixels == 0 && std::find(c.mask.begin(), c.mask.end(), 255) != c.mask.end()) {
    throw ParameterError("crop margins remove every mask pixel");
  }
  cropped.margin = c.margin - std::max({m.left, m.right, m.top, m.bottom});
  return resize_chip(cropped, output_size, output_size);
}

Chip mask_jitter(const Chip& c, double dx, double dy, double angle_deg) {
  if (dx == 0.0 && dy == 0.0 && angle_deg == 0.0) return c;
  double mx = 0.0, my = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x)
      if (c.mask_at(x, y)) {
        mx += x;
        my += y;
        ++n;
      }
  if (n == 0) return c;
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  Chip out = c;
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      // Invert: p = R q + centroid + shift  =>  q = R^T (p - centroid - shift).
      const double px = x - mx - dx, py = y - my - dy;
      const double sx = cs * px + sn * py + mx;
      const double sy = -sn * px + cs * py + my;
      out.mask_at(x, y) = threshold(sample(c.mask.data(), c.width, c.height, 1, 0, sx, sy, Border::kZero));
    }
  return out;
}

// ---------------------------------------------------------------------------

Chip augment_pipeline(const Chip& c, const AugmentConfig& cfg, std::uint64_t seed, AugmentTrace* trace) {
  cfg.validate();
  Rng rng(seed);
  AugmentTrace t;

  t.dihedral = rng.bernoulli(cfg.p_dihedral) ? static_cast<int>(rng.uniform_int(0, 7)) : 0;
  Chip out = dihedral(c, t.dihedral);

  if ((t.rgb_shift = rng.bernoulli(cfg.p_rgb_shift))) {
    std::array<int, 3> d{};
    for (auto& v : d) v = static_cast<int>(rng.uniform_int(-cfg.rgb_shift_limit, cfg.rgb_shift_limit));
    out = rgb_shift(out, d, cfg.rgb_shift_limit);
  }
  if ((t.blur = rng.bernoulli(cfg.p_blur))) {
    const auto mode = cfg.blur_modes[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(cfg.blur_modes.size()) - 1))];
    double param;
    if (mode == BlurMode::kGaussian) {
      param = rng.uniform(cfg.blur_sigma.lo, cfg.blur_sigma.hi);
    } else {
      const int lo = cfg.blur_kernel.lo / 2, hi = std::max(lo, cfg.blur_kernel.hi / 2);
      param = 2 * static_cast<int>(rng.uniform_int(lo, hi)) + 1;
    }
    out = blur(out, mode, param);
  }
  if ((t.noise = rng.bernoulli(cfg.p_noise))) {
    const double sigma = rng.uniform(cfg.noise_sigma.lo, cfg.noise_sigma.hi);
    out = gauss_noise(out, sigma, rng.next());
  }
  if ((t.elastic = rng.bernoulli(cfg.p_elastic))) {
    out = elastic_transform(out, cfg.elastic_alpha, cfg.elastic_sigma, rng.next());
  }
  if ((t.grid = rng.bernoulli(cfg.p_grid))) {
    out = grid_distortion(out, cfg.grid_num_steps, cfg.grid_distort_limit, rng.next());
  }
  if ((t.optical = rng.bernoulli(cfg.p_optical))) {
    out = optical_distortion(out, rng.uniform(-cfg.optical_distort_limit, cfg.optical_distort_limit));
  }
  if ((t.mask_jitter = rng.bernoulli(cfg.p_mask_jitter))) {
    const double dx = static_cast<double>(rng.uniform_int(-cfg.mask_max_shift_px, cfg.mask_max_shift_px));
    const double dy = static_cast<double>(rng.uniform_int(-cfg.mask_max_shift_px, cfg.mask_max_shift_px));
    const double angle = rng.uniform(-cfg.mask_max_angle_deg, cfg.mask_max_angle_deg);
    out = mask_jitter(out, dx, dy, angle);
  }

  const int lo = std::min(cfg.crop_margin.lo, out.margin);
  const int hi = std::min(cfg.crop_margin.hi, out.margin);
  auto draw = [&] { return static_cast<int>(rng.uniform_int(lo, hi)); };
  t.crop.left = draw();
  t.crop.right = draw();
  t.crop.top = draw();
  t.crop.bottom = draw();
  out = random_crop_margin(out, t.crop, cfg.output_size);

  if (trace) *trace = t;
  return out;
}

ImageRGB contact_sheet(const Chip& c, const AugmentConfig& cfg, std::uint64_t seed, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ParameterError("contact sheet needs positive rows and cols");
  const int tile = cfg.output_size;
  const int gap = 2;
  ImageRGB sheet(cols * tile + (cols + 1) * gap, rows * tile + (rows + 1) * gap);
  std::fill(sheet.pixels.begin(), sheet.pixels.end(), std::uint8_t{255});
  for (int r = 0; r < rows; ++r)
    for (int q = 0; q < cols; ++q) {
      const auto variant = static_cast<std::uint64_t>(r * cols + q);
      const Chip a = augment_pipeline(c, cfg, combine_seed(seed, variant));
      const int ox = gap + q * (tile + gap), oy = gap + r * (tile + gap);
      for (int y = 0; y < tile; ++y)
        for (int x = 0; x < tile; ++x) {
          const std::uint8_t* src = a.pixel(x, y);
          std::uint8_t* dst = sheet.at(ox + x, oy + y);
          const bool roof = a.mask_at(x, y) != 0;
          dst[0] = roof ? static_cast<std::uint8_t>((src[0] * 65 + 255 * 35) / 100) : src[0];
          dst[1] = roof ? static_cast<std::uint8_t>(src[1] * 65 / 100) : src[1];
          dst[2] = roof ? static_cast<std::uint8_t>(src[2] * 65 / 100) : src[2];
        }
    }
  return sheet;
}

}  // namespace roofstack
