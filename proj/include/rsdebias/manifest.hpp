/* Copyright 2026 The rsdebias Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef RSDEBIAS_MANIFEST_HPP_
#define RSDEBIAS_MANIFEST_HPP_

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsdebias/util.hpp"
#include "rsdebias/version.hpp"

namespace rsdebias {

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm_utc.tm_year + 1900, tm_utc.tm_mon + 1, tm_utc.tm_mday,
                tm_utc.tm_hour, tm_utc.tm_min, tm_utc.tm_sec);
  return buf;
}

// Every run directory carries exactly one manifest: the command, the echoed
// config, seeds, input checksums, and checksums for each artifact the run
// wrote. Artifacts are re-hashed on verification.
struct RunManifest {
  std::string command;
  nlohmann::json config_echo;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> input_checksums;  // absolute path keyed
  std::map<std::string, std::string> artifacts;        // run-dir relative
  std::string tool_version = kVersion;
  std::string timestamp;

  void add_input(const std::filesystem::path& path) {
    input_checksums[path.string()] = file_checksum(path);
  }

  void add_artifact(const std::filesystem::path& run_dir,
                    const std::string& rel) {
    artifacts[rel] = file_checksum(run_dir / rel);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "rsdebias.run";
    j["version"] = 1;
    j["command"] = command;
    j["config"] = config_echo;
    j["seeds"] = seeds;
    j["inputs"] = input_checksums;
    j["artifacts"] = artifacts;
    j["tool_version"] = tool_version;
    j["timestamp"] = timestamp;
    return j;
  }
};

inline void write_run_manifest(const std::filesystem::path& run_dir,
                               RunManifest manifest) {
  if (manifest.timestamp.empty()) manifest.timestamp = utc_timestamp();
  write_text_file(run_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

// Re-hashes every artifact named in the manifest; true iff all match.
inline bool verify_run_manifest(const std::filesystem::path& run_dir) {
  const nlohmann::json j =
      nlohmann::json::parse(read_text_file(run_dir / "manifest.json"));
  for (const auto& [rel, hex] : j.at("artifacts").items()) {
    const std::filesystem::path p = run_dir / rel;
    if (!std::filesystem::exists(p)) return false;
    if (file_checksum(p) != hex.get<std::string>()) return false;
  }
  return true;
}

}  // namespace rsdebias

#endif  // RSDEBIAS_MANIFEST_HPP_
