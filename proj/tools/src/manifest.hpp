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

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace roofstack::cli {

/// Hex fnv1a64 of a file, or of a directory's sorted (name, file hash) list.
std::string checksum_path(const std::string& path);

/// Record of one command run. Inputs are hashed when added, outputs when the
/// manifest is written, so a command that overwrites an input is caught.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_config(nlohmann::ordered_json config);
  void add_seed(const std::string& name, std::uint64_t value);
  void add_input(const std::string& path);
  /// Throws ParameterError when `path` names one of the inputs.
  void add_output(const std::string& path);
  void mark(const std::string& phase);

  const std::vector<std::string>& outputs() const { return outputs_; }

  /// Atomic JSON write.
  void write(const std::string& path) const;

 private:
  using Clock = std::chrono::steady_clock;

  std::string command_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds_ = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, std::string>> inputs_;  // path, checksum
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, double>> phases_;
  Clock::time_point start_;
  Clock::time_point last_;
};

}  // namespace roofstack::cli
