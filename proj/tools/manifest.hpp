#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace kstrip::cli {

// Record of one command invocation, stored as manifest.json next to the
// artifacts it describes.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  // Writes <dir>/manifest.json through a temporary file and a rename.
  void write(const std::string& dir) const;
};

std::string version_string();

}  // namespace kstrip::cli
