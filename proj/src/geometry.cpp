// SPDX-License-Identifier: Apache-2.0
#include "ufdt/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace ufdt {

void ProbeModel::validate() const {
  if (element_count < 2) throw std::invalid_argument("ProbeModel: element_count must be >= 2");
  if (!(pitch > 0.0)) throw std::invalid_argument("ProbeModel: pitch must be positive");
  if (!(fractional_bandwidth > 0.0 && fractional_bandwidth < 2.0))
    throw std::invalid_argument("ProbeModel: fractional_bandwidth must be in (0, 2)");
  if (!(f_number > 0.0)) throw std::invalid_argument("ProbeModel: f_number must be positive");
  if (!(center_freq > 0.0)) throw std::invalid_argument("ProbeModel: center_freq must be positive");
  if (!(elevation_width > 0.0 && elevation_focus > 0.0))
    throw std::invalid_argument("ProbeModel: elevation geometry must be positive");
}

Vec3 probe_to_world(const Pose& pose, const Vec3& p) {
  const double t = deg_to_rad(pose.theta_deg);
  const double c = std::cos(t), s = std::sin(t);
  const double yp = p[1] + pose.y_offset;
  return {c * p[0] - s * yp, s * p[0] + c * yp, p[2]};
}

Vec3 slice_to_world(const Pose& pose, double x_prime, double z_prime) {
  return probe_to_world(pose, Vec3(x_prime, 0.0, z_prime));
}

Vec3 world_to_probe(const Pose& pose, const Vec3& w) {
  const double t = deg_to_rad(pose.theta_deg);
  const double c = std::cos(t), s = std::sin(t);
  return {c * w[0] + s * w[1], -s * w[0] + c * w[1] - pose.y_offset, w[2]};
}

std::vector<Pose> ScanGeometry::poses() const {
  std::vector<Pose> out;
  out.reserve(pose_count());
  for (double th : thetas_deg)
    for (double y : y_steps) out.push_back({th, y});
  return out;
}

GridSpec default_slice_grid(const ProbeModel& probe, double z_min, double z_max, double spacing) {
  const int nx = static_cast<int>(std::floor(probe.aperture() / spacing)) + 1;
  const int nz = static_cast<int>(std::floor((z_max - z_min) / spacing + 1e-9)) + 1;
  GridSpec g = GridSpec::centered(Vec3(0.0, 0.0, 0.5 * (z_min + z_max)),
                                  Vec3(spacing, spacing, spacing), {nx, 1, nz});
  g.origin[2] = z_min;
  return g;
}

ScanGeometry plan_scan(const ProbeModel& probe, int n_thetas, double theta_step_deg, int n_y,
                       double y_step, const GridSpec& slice_grid) {
  probe.validate();
  slice_grid.validate();
  if (n_thetas < 1 || n_y < 1) throw std::invalid_argument("plan_scan: counts must be >= 1");
  if (!(theta_step_deg > 0.0) || !(y_step > 0.0))
    throw std::invalid_argument("plan_scan: steps must be positive");
  if (slice_grid.dims[1] != 1) throw std::invalid_argument("plan_scan: slice grid must be planar");
  const double extent = n_y * y_step;
  const double limit = probe.aperture() + y_step;
  if (extent > limit + 1e-9) {
    throw std::invalid_argument("plan_scan: y extent " + std::to_string(extent) +
                                " mm exceeds aperture overlap limit " + std::to_string(limit) +
                                " mm");
  }
  ScanGeometry geom;
  geom.slice_grid = slice_grid;
  for (int t = 0; t < n_thetas; ++t) geom.thetas_deg.push_back(t * theta_step_deg);
  for (int k = 0; k < n_y; ++k) geom.y_steps.push_back((k - 0.5 * (n_y - 1)) * y_step);
  return geom;
}

ScanGeometry plan_scan(const ProbeModel& probe, int n_thetas, double theta_step_deg, int n_y,
                       double y_step) {
  return plan_scan(probe, n_thetas, theta_step_deg, n_y, y_step, default_slice_grid(probe));
}

namespace {
nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }
Vec3 json_vec(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
}  // namespace

void to_json(nlohmann::json& j, const GridSpec& g) {
  j = {{"origin_mm", vec_json(g.origin)},
       {"spacing_mm", vec_json(g.spacing)},
       {"dims", {g.dims[0], g.dims[1], g.dims[2]}}};
}

void from_json(const nlohmann::json& j, GridSpec& g) {
  g.origin = json_vec(j.at("origin_mm"));
  g.spacing = json_vec(j.at("spacing_mm"));
  const auto& d = j.at("dims");
  g.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
  g.validate();
}

void to_json(nlohmann::json& j, const ProbeModel& p) {
  j = {{"element_count", p.element_count},
       {"pitch_mm", p.pitch},
       {"center_freq_mhz", p.center_freq},
       {"fractional_bandwidth", p.fractional_bandwidth},
       {"elevation_width_mm", p.elevation_width},
       {"elevation_focus_mm", p.elevation_focus},
       {"f_number", p.f_number}};
}

void from_json(const nlohmann::json& j, ProbeModel& p) {
  ProbeModel d;
  p.element_count = j.value("element_count", d.element_count);
  p.pitch = j.value("pitch_mm", d.pitch);
  p.center_freq = j.value("center_freq_mhz", d.center_freq);
  p.fractional_bandwidth = j.value("fractional_bandwidth", d.fractional_bandwidth);
  p.elevation_width = j.value("elevation_width_mm", d.elevation_width);
  p.elevation_focus = j.value("elevation_focus_mm", d.elevation_focus);
  p.f_number = j.value("f_number", d.f_number);
  p.validate();
}

void to_json(nlohmann::json& j, const Pose& p) {
  j = {{"theta_deg", p.theta_deg}, {"y_offset_mm", p.y_offset}};
}

void from_json(const nlohmann::json& j, Pose& p) {
  p.theta_deg = j.at("theta_deg").get<double>();
  p.y_offset = j.at("y_offset_mm").get<double>();
}

void to_json(nlohmann::json& j, const ScanGeometry& s) {
  j = {{"thetas_deg", s.thetas_deg}, {"y_steps_mm", s.y_steps}, {"grid", s.slice_grid}};
}

void from_json(const nlohmann::json& j, ScanGeometry& s) {
  s.thetas_deg = j.at("thetas_deg").get<std::vector<double>>();
  s.y_steps = j.at("y_steps_mm").get<std::vector<double>>();
  s.slice_grid = j.at("grid").get<GridSpec>();
  if (s.slice_grid.dims[1] != 1) throw std::invalid_argument("ScanGeometry: slice grid must be planar");
}

}  // namespace ufdt
