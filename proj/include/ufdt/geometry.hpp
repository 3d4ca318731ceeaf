// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/grid.hpp"

#include <nlohmann/json.hpp>

#include <numbers>
#include <vector>

namespace ufdt {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Linear array transducer. Lengths in mm, frequencies in MHz.
struct ProbeModel {
  int element_count = 128;
  double pitch = 0.08;
  double center_freq = 15.0;
  double fractional_bandwidth = 0.85;
  double elevation_width = 1.1;
  double elevation_focus = 5.0;
  double f_number = 1.0;

  void validate() const;
  double aperture() const { return element_count * pitch; }
  /// Lateral position of element e, array centered on x' = 0.
  double element_x(int e) const { return (e - 0.5 * (element_count - 1)) * pitch; }
};

/// Probe placement: rotation theta (degrees) about the fixed z axis, which
/// passes through the world origin, and a translation along the probe's y'.
struct Pose {
  double theta_deg = 0.0;
  double y_offset = 0.0;
};

/// Maps an in-plane point (x', z') of the slice at `pose` into the world frame.
Vec3 slice_to_world(const Pose& pose, double x_prime, double z_prime);

/// Full probe-frame point (x', y', z') into the world frame; y' is measured
/// from the probe's current slice plane.
Vec3 probe_to_world(const Pose& pose, const Vec3& probe_point);

/// Inverse of probe_to_world: returns (x', elevation offset from the slice plane, z').
Vec3 world_to_probe(const Pose& pose, const Vec3& world_point);

/// Rotation/translation schedule of the mechanical scan. Poses are ordered
/// theta-major: all y offsets for thetas[0], then thetas[1], ...
struct ScanGeometry {
  std::vector<double> thetas_deg;
  std::vector<double> y_steps;
  /// In-plane slice lattice: x' on axis 0, z' on axis 2, dims[1] == 1.
  GridSpec slice_grid;

  std::size_t pose_count() const { return thetas_deg.size() * y_steps.size(); }
  Pose pose(std::size_t theta_index, std::size_t y_index) const {
    return {thetas_deg.at(theta_index), y_steps.at(y_index)};
  }
  std::vector<Pose> poses() const;
  /// Spacing between consecutive y offsets (0 for a single step).
  double y_step() const { return y_steps.size() > 1 ? y_steps[1] - y_steps[0] : 0.0; }
};

/// Default in-plane slice lattice covering the aperture width, 0.05 mm pixels.
GridSpec default_slice_grid(const ProbeModel& probe, double z_min = 3.0, double z_max = 7.0,
                            double spacing = 0.05);

/// Builds a scan plan of n_thetas rotations (starting at 0) times n_y
/// translations centered on y' = 0. Throws if the y extent exceeds the
/// aperture by more than one step.
ScanGeometry plan_scan(const ProbeModel& probe, int n_thetas, double theta_step_deg, int n_y,
                       double y_step, const GridSpec& slice_grid);
ScanGeometry plan_scan(const ProbeModel& probe, int n_thetas, double theta_step_deg, int n_y,
                       double y_step);

void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);
void to_json(nlohmann::json& j, const ProbeModel& p);
void from_json(const nlohmann::json& j, ProbeModel& p);
void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);
void to_json(nlohmann::json& j, const ScanGeometry& s);
void from_json(const nlohmann::json& j, ScanGeometry& s);

}  // namespace ufdt
