#pragma once

// Fit directories: manifest.json (model kind, dimensions, configuration,
// names, array shapes), one flat row-major little-endian float64 file per
// array (<name>.bin) and elbo.csv with "step,elbo" rows.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tbip/grad_engine.hpp"
#include "tbip/model.hpp"

namespace tbip::io {

struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

struct FitBundle {
  nlohmann::json manifest;
  std::vector<NamedArray> arrays;
  std::vector<vi::TracePoint> elbo_trace;

  const NamedArray* find(const std::string& name) const;
  const NamedArray& at(const std::string& name) const;
  // Names stored under manifest["authors"].
  std::vector<std::string> author_names() const;
};

void write_array(const std::filesystem::path& path, const std::vector<double>& data);
std::vector<double> read_array(const std::filesystem::path& path, std::size_t expected_size);

void write_trace(const std::filesystem::path& path, const std::vector<vi::TracePoint>& trace);
std::vector<vi::TracePoint> read_trace(const std::filesystem::path& path);

void write_bundle(const std::filesystem::path& dir, const FitBundle& bundle);
FitBundle read_bundle(const std::filesystem::path& dir);

FitBundle to_bundle(const model::FitResult& fit);
model::FitResult from_bundle(const FitBundle& bundle);

inline void save_fit(const std::filesystem::path& dir, const model::FitResult& fit) {
  write_bundle(dir, to_bundle(fit));
}
inline model::FitResult load_fit(const std::filesystem::path& dir) {
  return from_bundle(read_bundle(dir));
}

}  // namespace tbip::io
