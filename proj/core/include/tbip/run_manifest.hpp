#pragma once

// Per-run provenance record written by every command-line invocation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tbip {

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

// Hex FNV-1a of the compact JSON dump of `config`. nlohmann::json orders
// object keys, so equal configurations hash equally.
std::string config_hash(const nlohmann::json& config);

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::string output_dir;
  double wall_seconds = 0.0;
  std::optional<double> final_elbo;

  nlohmann::json to_json() const;
};

inline constexpr const char* kRunManifestFile = "run_manifest.json";

// Writes <dir>/run_manifest.json through a temporary file and a rename.
void write_run_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace tbip
