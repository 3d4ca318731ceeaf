// SPDX-License-Identifier: Apache-2.0
#include "ufdt/io.hpp"

#include "ufdt/geometry.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace ufdt::io {
namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffU) << 24) | ((v & 0xff00U) << 8) | ((v >> 8) & 0xff00U) | (v >> 24);
  }
}

}  // namespace

void write_f32(const std::string& path, const std::vector<double>& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  std::vector<std::uint32_t> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    buf[i] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(std::uint32_t)));
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<double> read_f32(const std::string& path, std::size_t expected_count) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<std::uint32_t> buf(expected_count);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(is.gcount()) != expected_count * sizeof(std::uint32_t))
    throw std::runtime_error("short read: " + path);
  std::vector<double> out(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i)
    out[i] = std::bit_cast<float>(to_little(buf[i]));
  return out;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
}

void write_volume(const std::string& path, const Volume<double>& vol, const nlohmann::json& extra) {
  write_f32(path, vol.data());
  nlohmann::json meta = extra;
  const auto& g = vol.grid();
  meta["dims"] = {g.dims[0], g.dims[1], g.dims[2]};
  meta["spacing_mm"] = {g.spacing[0], g.spacing[1], g.spacing[2]};
  meta["origin_mm"] = {g.origin[0], g.origin[1], g.origin[2]};
  if (!meta.contains("frame")) meta["frame"] = "world";
  write_json(sidecar(path), meta);
}

Volume<double> read_volume(const std::string& path) {
  const auto meta = read_json(sidecar(path));
  GridSpec g;
  try {
    g = meta.get<GridSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad volume sidecar " + sidecar(path) + ": " + e.what());
  }
  return Volume<double>(g, read_f32(path, g.size()));
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

}  // namespace ufdt::io
