// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/grid.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ufdt {

/// One vessel segment: a polyline centerline with a single diameter.
struct VesselSegment {
  std::vector<Vec3> centerline;  // mm, >= 2 points
  double length = 0.0;           // mm
  double mean_diameter = 0.0;    // mm
  double flow_speed = 0.0;       // mm/s along the centerline
  int parent = -1;
};

struct VesselGraph {
  std::vector<VesselSegment> segments;
  /// Pairs of segment indices sharing an endpoint or junction.
  std::vector<std::pair<int, int>> connections;

  double total_length() const;
};

double polyline_length(const std::vector<Vec3>& polyline);

/// Point at arc length s along a polyline (clamped to its ends); optionally
/// returns the unit tangent of the containing piece.
Vec3 point_at_arc(const std::vector<Vec3>& polyline, double s, Vec3* tangent = nullptr);

/// Shortest distance from p to the polyline; optionally returns the arc
/// length of the closest point.
double distance_to_polyline(const std::vector<Vec3>& polyline, const Vec3& p,
                            double* arc = nullptr);

/// Branching law of the synthetic tree: every segment ends in a bifurcation
/// whose children shrink by `decay`; growth stops below `min_diameter`.
struct TreeParams {
  int root_count = 1;
  Vec3 root_origin = Vec3(-3.0, 0.0, 5.0);
  Vec3 root_direction = Vec3(1.0, 0.0, 0.0);
  double root_spread = 1.5;  // mm, radius of the circle holding multiple roots
  double root_diameter = 0.42;
  double root_flow_speed = 10.0;  // mm/s
  double decay = 0.8;
  double decay_jitter = 0.0;  // log-normal sigma on child diameters
  int fanout_min = 2;
  int fanout_max = 2;
  double length_ratio = 8.0;  // root length / root diameter
  double length_exponent = 1.0;
  double length_jitter = 0.1;  // log-normal sigma on lengths
  double branch_angle_deg = 40.0;
  double branch_angle_jitter_deg = 6.0;
  double min_diameter = 0.12;
  int max_segments = 20000;

  void validate() const;

  /// Small-vessel-dominated preset tuned so that roughly half of the total
  /// length lies in 0.08-0.16 mm vessels and about 3/4 below 0.2 mm.
  static TreeParams calibrated_small_vessel();
};

VesselGraph generate_tree(std::uint64_t seed, const TreeParams& params);

/// Scales every centerline about `center` by `factor`; diameters unchanged.
VesselGraph scale_tree_lengths(const VesselGraph& graph, const Vec3& center, double factor);

struct Ellipsoid {
  Vec3 center = Vec3(0.0, 0.0, 5.0);
  Vec3 semi_axes = Vec3(2.0, 2.0, 2.0);
  bool contains(const Vec3& p) const {
    return (p - center).cwiseQuotient(semi_axes).squaredNorm() <= 1.0;
  }
  double volume() const;
};

/// Gamma-variate bolus: peak_intensity * (tau/peak_time)^alpha * exp(alpha*(1 - tau/peak_time)).
struct BolusParams {
  double alpha = 3.0;
  double peak_time = 6.0;  // s after arrival
  double peak_intensity = 100.0;
  double noise_sd = 1.0;

  double curve(double tau) const;
};

struct PhantomSpec {
  Ellipsoid tumor;
  VesselGraph tree;
  Box tissue_region{Vec3(-1.5, -1.5, 4.0), Vec3(1.5, 1.5, 6.0)};
  double tissue_density = 200.0;  // scatterers / mm^3
  double blood_density = 2000.0;  // scatterers / mm^3
  double tissue_to_blood_db = 40.0;
  double blood_amplitude = 1.0;
  std::uint64_t rng_seed = 1;
  BolusParams bolus;

  void validate() const;
};

enum class ScattererLabel : std::uint8_t { tissue = 0, blood = 1 };

/// Position of a blood scatterer within its vessel: arc length plus an
/// offset in the local normal plane.
struct VesselTrack {
  int segment = -1;
  double arc = 0.0;
  double u = 0.0;
  double v = 0.0;
};

struct ScattererCloud {
  std::vector<Vec3> positions;
  std::vector<double> amplitudes;
  std::vector<Vec3> velocities;
  std::vector<ScattererLabel> labels;
  std::vector<VesselTrack> tracks;  // segment == -1 for static scatterers
  std::shared_ptr<const VesselGraph> tree;

  std::size_t size() const { return positions.size(); }
  std::size_t count(ScattererLabel label) const;
  void push_static(const Vec3& p, double amplitude, ScattererLabel label = ScattererLabel::tissue);
};

/// World position of a track point, and the local flow direction.
Vec3 track_position(const VesselGraph& tree, const VesselTrack& track, Vec3* tangent = nullptr);

ScattererCloud seed_scatterers(const PhantomSpec& spec);

/// Moves blood scatterers flow_speed * dt along their vessel, wrapping to
/// the segment start on exit. Static scatterers are untouched.
ScattererCloud advance(const ScattererCloud& cloud, double dt);

/// Splits a cloud into (static, moving) parts.
std::pair<ScattererCloud, ScattererCloud> split_static(const ScattererCloud& cloud);

/// Bolus arrival delay along every segment: delay at arc s of segment i is
/// start_delay[i] + s / flow_speed.
std::vector<double> segment_start_delays(const VesselGraph& tree);

/// Precomputed per-voxel vessel membership and arrival delay on a grid.
class BolusField {
 public:
  BolusField(const PhantomSpec& spec, const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  /// Arrival delay per voxel, negative for non-vessel voxels.
  const std::vector<double>& delays() const { return delay_; }
  Volume<double> intensity(double t) const;
  /// Same as intensity(t) for frame index `frame` (noise keyed by frame).
  Volume<double> intensity_frame(double t, std::uint64_t frame) const;

 private:
  GridSpec grid_;
  BolusParams bolus_;
  std::uint64_t seed_;
  std::vector<double> delay_;
};

/// Bolus intensity field at time t on the given grid.
Volume<double> bolus_intensity(const PhantomSpec& spec, double t, const GridSpec& grid);

/// Voxels whose centers lie inside any vessel tube.
BinaryMask rasterize_tree(const VesselGraph& graph, const GridSpec& grid);

/// Grid with the given spacing covering the tree's bounding box plus margin.
GridSpec grid_around_tree(const VesselGraph& graph, double spacing, double margin);

/// Line-delimited graph export: "id<TAB>length_mm<TAB>mean_diameter_mm<TAB>x,y,z;x,y,z;..."
void write_vessel_graph(std::ostream& os, const VesselGraph& graph);
VesselGraph read_vessel_graph(std::istream& is);

void to_json(nlohmann::json& j, const TreeParams& p);
void from_json(const nlohmann::json& j, TreeParams& p);
void to_json(nlohmann::json& j, const Ellipsoid& e);
void from_json(const nlohmann::json& j, Ellipsoid& e);
void to_json(nlohmann::json& j, const BolusParams& b);
void from_json(const nlohmann::json& j, BolusParams& b);

/// Counter-based standard normal draw keyed on (seed, a, b).
double hashed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace ufdt
