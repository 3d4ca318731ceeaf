// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/grid.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ufdt::io {

/// Raw little-endian float32 arrays. Values are narrowed from double.
void write_f32(const std::string& path, const std::vector<double>& values);
std::vector<double> read_f32(const std::string& path, std::size_t expected_count);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

/// Sidecar path for a raw data file.
inline std::string sidecar(const std::string& path) { return path + ".json"; }

/// Volume file: raw float32 C-order (z fastest) plus sidecar
/// {dims, spacing_mm, origin_mm, frame: "world"} and optional extra keys.
void write_volume(const std::string& path, const Volume<double>& vol,
                  const nlohmann::json& extra = nlohmann::json::object());
Volume<double> read_volume(const std::string& path);

bool file_exists(const std::string& path);

}  // namespace ufdt::io
