#include "manifest.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>

#include "kstrip/binio.hpp"

#ifndef KSTRIP_VERSION
#define KSTRIP_VERSION "unknown"
#endif

namespace kstrip::cli {

namespace fs = std::filesystem;

namespace {

std::string iso_utc(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

}  // namespace

std::string version_string() { return KSTRIP_VERSION; }

void RunManifest::write(const std::string& dir) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["version"] = version_string();
  j["started"] = iso_utc(started);
  j["finished"] = iso_utc(std::chrono::system_clock::now());
  j["artifacts"] = artifacts;
  j["results"] = results;

  const std::string text = j.dump(2) + "\n";
  const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
  write_file_atomic((fs::path(dir.empty() ? "." : dir) / "manifest.json").string(), {p, text.size()});
}

}  // namespace kstrip::cli
