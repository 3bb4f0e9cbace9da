#include "hqlab/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <span>
#include <vector>

#include "hqlab/errors.hpp"

namespace hqlab {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

void write_doubles(const std::filesystem::path& path, std::span<const double> data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (double v : data) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
    os.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> read_doubles(const std::filesystem::path& path, std::size_t count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open " + path.string());
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw ArgumentError("truncated field file " + path.string());
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
    out[i] = std::bit_cast<double>(bits);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ArgumentError("trailing data in " + path.string());
  return out;
}

void write_meta(const std::filesystem::path& stem, const TorusGrid& grid, const char* kind, const char* layout) {
  nlohmann::ordered_json meta;
  meta["n"] = grid.n();
  meta["N"] = grid.points();
  meta["L"] = grid.period();
  meta["kind"] = kind;
  meta["component_layout"] = layout;
  meta["sites"] = grid.size();
  meta["site_order"] = "row-major over (x1, y1, ..., xn, yn), x1 slowest";
  meta["dtype"] = "float64 little-endian";
  std::ofstream os(with_suffix(stem, ".meta.json"));
  if (!os) throw std::runtime_error("cannot write metadata for " + stem.string());
  os << meta.dump(2) << '\n';
}

TorusGrid read_meta(const std::filesystem::path& stem, const char* kind) {
  std::ifstream is(with_suffix(stem, ".meta.json"));
  if (!is) throw ArgumentError("missing metadata for " + stem.string());
  const auto meta = nlohmann::json::parse(is);
  if (meta.at("kind").get<std::string>() != kind) throw ArgumentError("field kind mismatch in " + stem.string());
  return TorusGrid(meta.at("n").get<int>(), meta.at("N").get<int>(), meta.at("L").get<double>());
}

}  // namespace

void write_field(const std::filesystem::path& stem, const ScalarField& u) {
  write_doubles(with_suffix(stem, ".f64"), u.values());
  write_meta(stem, u.grid(), "scalar", "one value per site");
}

void write_field(const std::filesystem::path& stem, const HermitianField& a) {
  const auto raw = a.raw();
  std::vector<double> flat;
  flat.reserve(raw.size() * 2);
  for (const cplx& z : raw) {
    flat.push_back(z.real());
    flat.push_back(z.imag());
  }
  write_doubles(with_suffix(stem, ".f64"), flat);
  write_meta(stem, a.grid(), "hermitian", "n*n entries per site, row-major, each as (re, im)");
}

ScalarField read_scalar_field(const std::filesystem::path& stem) {
  const TorusGrid grid = read_meta(stem, "scalar");
  return ScalarField(grid, read_doubles(with_suffix(stem, ".f64"), grid.size()));
}

HermitianField read_hermitian_field(const std::filesystem::path& stem) {
  const TorusGrid grid = read_meta(stem, "hermitian");
  HermitianField out(grid);
  auto raw = out.raw();
  const auto flat = read_doubles(with_suffix(stem, ".f64"), raw.size() * 2);
  for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = cplx(flat[2 * k], flat[2 * k + 1]);
  return out;
}

}  // namespace hqlab
