#include "tbip/run_manifest.hpp"

#include <cstdio>
#include <fstream>

#include "tbip/error.hpp"

namespace tbip {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j{{"command", command},
                   {"config", config},
                   {"config_hash", config_hash(config)},
                   {"seed", seed},
                   {"inputs", inputs},
                   {"output_dir", output_dir},
                   {"wall_seconds", wall_seconds}};
  j["final_elbo"] = final_elbo ? nlohmann::json(*final_elbo) : nlohmann::json(nullptr);
  return j;
}

void write_run_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto target = dir / kRunManifestFile;
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << manifest.to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move manifest into place: " + target.string());
}

}  // namespace tbip
