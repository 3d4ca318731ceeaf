// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/beamform.hpp"
#include "ufdt/clutter_filter.hpp"
#include "ufdt/dceus.hpp"
#include "ufdt/phantom.hpp"
#include "ufdt/tomo_fusion.hpp"
#include "ufdt/vessel_quant.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace ufdt::pipeline {

enum class Stage { phantom, scan, reconstruct, quantify, dceus, report, all };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int phantom = 10;
inline constexpr int scan = 11;
inline constexpr int reconstruct = 12;
inline constexpr int quantify = 13;
inline constexpr int dceus = 14;
inline constexpr int report = 15;
}  // namespace exit_code

int stage_exit_code(Stage s);
Stage parse_stage(const std::string& name);
std::string stage_name(Stage s);

/// Failure carrying the process exit code of the stage it belongs to.
class StageError : public std::runtime_error {
 public:
  StageError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct SliceGridConfig {
  double x_half_width = 1.2;  // mm
  double z_min = 4.3;
  double z_max = 5.7;
  double spacing = 0.05;
};

struct PipelineConfig {
  nlohmann::json source;  // config as read, for hashing and provenance
  std::string output_dir = "ufdt_out";
  std::string cache_dir;  // empty: <output_dir>/cache
  std::uint64_t rng_seed = 1;

  ProbeModel probe;
  int n_thetas = 3;
  double theta_step_deg = 10.0;
  int n_y = 12;
  double y_step = 0.2;
  SliceGridConfig slice;
  AcquisitionParams acquisition;

  TreeParams tree;
  std::uint64_t tree_seed = 7;
  PhantomSpec phantom;  // tree filled in by the phantom stage

  ClutterParams clutter;
  GridSpec volume_grid;
  bool register_volumes = true;
  int reference_index = 0;
  int max_shift_voxels = 2;
  Vec3 psf_point = Vec3(0.0, 0.0, 5.0);
  std::array<int, 3> psf_dims = {25, 25, 21};
  WienerSpec wiener;
  bool estimate_noise = true;
  Box noise_region;

  double z_threshold = 3.0;
  int prune_spur_voxels = 2;
  int min_component_voxels = 0;  // 0 keeps every thresholded component
  DiameterEstimator estimator = DiameterEstimator::equivalent_cylinder;
  double bin_width = 0.04;

  GridSpec dceus_plane;
  double frame_interval = 0.1;
  double duration = 60.0;
  double lowpass_cutoff = 0.5;
  bool toa_filtered = false;

  ScanGeometry scan_geometry() const;
  GridSpec kernel_grid() const;
};

/// Parses a config document; optional keys take defaults. Throws
/// StageError(exit_code::config) on malformed input.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);

struct RunOptions {
  int workers = 1;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed_override;
};

/// Runs one stage (or all). Throws StageError on failure.
void run(Stage stage, PipelineConfig config, const RunOptions& options, std::ostream& log);

/// CLI-style entry: returns the process exit code and reports errors to `err`.
int run_main(Stage stage, const std::string& config_path, const RunOptions& options,
             std::ostream& log, std::ostream& err);

}  // namespace ufdt::pipeline
