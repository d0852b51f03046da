#include "tbip/fit_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tbip/csv.hpp"
#include "tbip/error.hpp"

namespace tbip::io {

namespace fs = std::filesystem;

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
  return v;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

NamedArray matrix_array(const std::string& name, const Matrix& m) {
  return {name, {m.rows(), m.cols()}, m.data()};
}

Matrix array_matrix(const NamedArray& a) {
  if (a.shape.size() != 2) throw IoError("array " + a.name + " is not two-dimensional");
  return Matrix(a.shape[0], a.shape[1], a.data);
}

}  // namespace

const NamedArray* FitBundle::find(const std::string& name) const {
  auto it = std::find_if(arrays.begin(), arrays.end(),
                         [&](const NamedArray& a) { return a.name == name; });
  return it == arrays.end() ? nullptr : &*it;
}

const NamedArray& FitBundle::at(const std::string& name) const {
  if (const auto* a = find(name)) return *a;
  throw IoError("fit has no array named " + name);
}

std::vector<std::string> FitBundle::author_names() const {
  if (!manifest.contains("authors")) return {};
  return manifest.at("authors").get<std::vector<std::string>>();
}

void write_array(const fs::path& path, const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (double v : data) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> read_array(const fs::path& path, std::size_t expected_size) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected_size * sizeof(double)) {
    throw IoError(path.string() + ": expected " + std::to_string(expected_size) + " doubles");
  }
  in.seekg(0);
  std::vector<double> out(expected_size);
  for (auto& v : out) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    v = std::bit_cast<double>(to_little(bits));
  }
  return out;
}

void write_trace(const fs::path& path, const std::vector<vi::TracePoint>& trace) {
  std::vector<csv::Row> rows;
  for (const auto& p : trace) rows.push_back({std::to_string(p.step), csv::format_double(p.elbo)});
  csv::write_file(path, {"step", "elbo"}, rows);
}

std::vector<vi::TracePoint> read_trace(const fs::path& path) {
  std::vector<vi::TracePoint> out;
  for (const auto& row : csv::read_file(path, 0)) {
    if (row.size() < 2) throw IoError("expected step,elbo rows in " + path.string());
    out.push_back({static_cast<std::size_t>(std::stoull(row[0])), std::stod(row[1])});
  }
  return out;
}

void write_bundle(const fs::path& dir, const FitBundle& bundle) {
  fs::create_directories(dir);
  nlohmann::json manifest = bundle.manifest;
  nlohmann::json shapes = nlohmann::json::object();
  for (const auto& a : bundle.arrays) {
    if (element_count(a.shape) != a.data.size()) {
      throw ValidationError("array " + a.name + " does not match its shape");
    }
    shapes[a.name] = a.shape;
    write_array(dir / (a.name + ".bin"), a.data);
  }
  manifest["arrays"] = shapes;
  write_trace(dir / "elbo.csv", bundle.elbo_trace);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

FitBundle read_bundle(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no fit manifest in " + dir.string());
  FitBundle bundle;
  try {
    bundle.manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError((dir / "manifest.json").string() + ": " + e.what());
  }
  for (const auto& [name, shape_json] : bundle.manifest.at("arrays").items()) {
    NamedArray a;
    a.name = name;
    a.shape = shape_json.get<std::vector<std::size_t>>();
    a.data = read_array(dir / (name + ".bin"), element_count(a.shape));
    bundle.arrays.push_back(std::move(a));
  }
  if (fs::exists(dir / "elbo.csv")) bundle.elbo_trace = read_trace(dir / "elbo.csv");
  return bundle;
}

FitBundle to_bundle(const model::FitResult& fit) {
  FitBundle b;
  b.manifest = {{"model", "tbip"},
                {"dims",
                 {{"D", fit.theta.rows()},
                  {"K", fit.theta.cols()},
                  {"V", fit.beta.cols()},
                  {"S", fit.x.size()}}},
                {"config", fit.config},
                {"authors", fit.author_names}};
  if (fit.config.contains("train")) b.manifest["seed"] = fit.config["train"].value("seed", 0);
  b.arrays.push_back(matrix_array("theta", fit.theta));
  b.arrays.push_back(matrix_array("beta", fit.beta));
  b.arrays.push_back(matrix_array("eta", fit.eta));
  b.arrays.push_back({"x", {fit.x.size()}, fit.x});
  if (!fit.eta_sigma.empty()) b.arrays.push_back(matrix_array("eta_sigma", fit.eta_sigma));
  if (!fit.weights.empty()) b.arrays.push_back({"weights", {fit.weights.size()}, fit.weights});
  b.elbo_trace = fit.elbo_trace;
  return b;
}

model::FitResult from_bundle(const FitBundle& b) {
  if (b.manifest.value("model", "") != "tbip") {
    throw ValidationError("fit directory does not hold a tbip model");
  }
  model::FitResult fit;
  fit.theta = array_matrix(b.at("theta"));
  fit.beta = array_matrix(b.at("beta"));
  fit.eta = array_matrix(b.at("eta"));
  fit.x = b.at("x").data;
  if (const auto* a = b.find("eta_sigma")) fit.eta_sigma = array_matrix(*a);
  if (const auto* a = b.find("weights")) fit.weights = a->data;
  fit.author_names = b.author_names();
  fit.elbo_trace = b.elbo_trace;
  fit.config = b.manifest.value("config", nlohmann::json::object());
  return fit;
}

}  // namespace tbip::io
