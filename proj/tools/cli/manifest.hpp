#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace asap::cli {

struct ConfigEntry {
  std::string option;
  std::vector<std::string> values;
};

// Reproducibility record written next to every output as
// `<output>.manifest.json`.
struct RunManifest {
  std::vector<std::string> command;
  std::string subcommand;
  std::vector<ConfigEntry> config;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::uint64_t seed = 0;
  std::chrono::system_clock::time_point started;
  double elapsed_s = 0.0;
};

// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string manifest_json(const RunManifest& m);

// One manifest per output path.
void write_manifests(const RunManifest& m);

std::filesystem::path manifest_path(const std::filesystem::path& output);

}  // namespace asap::cli
