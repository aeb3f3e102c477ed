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

#include "manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "roofstack/csv.hpp"
#include "roofstack/error.hpp"
#include "roofstack/raster.hpp"
#include "roofstack/rng.hpp"

namespace roofstack::cli {
namespace fs = std::filesystem;

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string same_file_key(const std::string& path) {
  std::error_code ec;
  const fs::path p = fs::weakly_canonical(path, ec);
  return ec ? path : p.string();
}

}  // namespace

std::string checksum_path(const std::string& path) {
  if (!fs::is_directory(path)) return hex(fnv1a64(std::span<const std::uint8_t>(read_file_bytes(path))));
  std::vector<std::string> names;
  for (const auto& e : fs::recursive_directory_iterator(path))
    if (e.is_regular_file()) names.push_back(fs::relative(e.path(), path).generic_string());
  std::sort(names.begin(), names.end());
  std::string listing;
  for (const auto& n : names) listing += n + '\t' + checksum_path((fs::path(path) / n).string()) + '\n';
  return hex(fnv1a64(std::string_view(listing)));
}

RunManifest::RunManifest(std::string command)
    : command_(std::move(command)), start_(Clock::now()), last_(start_) {}

void RunManifest::set_config(nlohmann::ordered_json config) { config_ = std::move(config); }

void RunManifest::add_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

void RunManifest::add_input(const std::string& path) { inputs_.emplace_back(path, checksum_path(path)); }

void RunManifest::add_output(const std::string& path) {
  const std::string key = same_file_key(path);
  for (const auto& [in, sum] : inputs_)
    if (same_file_key(in) == key) throw ParameterError("output '" + path + "' would overwrite an input");
  outputs_.push_back(path);
}

void RunManifest::mark(const std::string& phase) {
  const auto now = Clock::now();
  phases_.emplace_back(phase, std::chrono::duration<double, std::milli>(now - last_).count());
  last_ = now;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["config"] = config_;
  j["config_hash"] = hex(fnv1a64(std::string_view(config_.dump())));
  j["seeds"] = seeds_;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [p, sum] : inputs_) j["inputs"].push_back({{"path", p}, {"fnv1a64", sum}});
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& p : outputs_) j["outputs"].push_back({{"path", p}, {"fnv1a64", checksum_path(p)}});
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [name, ms] : phases_) t[name + "_ms"] = ms;
  t["total_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
  j["timings"] = t;
  write_text_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace roofstack::cli
