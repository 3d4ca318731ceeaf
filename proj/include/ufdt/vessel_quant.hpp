// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/phantom.hpp"

#include <iosfwd>
#include <vector>

namespace ufdt {

/// Voxels whose z-score against the noise region exceeds `z_threshold`
/// (strict). Throws if the region has zero variance.
BinaryMask threshold_volume(const PowerVolume& vol, const Box& noise_region,
                            double z_threshold = 3.0);

enum class DiameterEstimator {
  /// 2 * sqrt(V / (pi L)) over the mask voxels nearest to each segment,
  /// leaving out the stretch inside a junction.
  equivalent_cylinder,
  /// 2 * mean distance-transform value along the centerline.
  centerline_edt,
};

struct SegmentOptions {
  DiameterEstimator estimator = DiameterEstimator::equivalent_cylinder;
  int smoothing_half_window = 3;  // moving average over centerline voxels
};

/// Splits a skeleton at junction voxels and measures each branch. Lengths
/// include the step to an adjacent junction voxel at either end.
VesselGraph extract_segments(const BinaryMask& skeleton, const BinaryMask& mask,
                             const SegmentOptions& options = {});

/// Cumulative segment length per diameter bin [k w, (k + 1) w).
struct DiameterHistogram {
  double bin_width = 0.04;
  std::vector<double> zeta;  // bins 0 .. last occupied
  double total = 0.0;

  double center(std::size_t k) const { return (static_cast<double>(k) + 0.5) * bin_width; }
  double lower(std::size_t k) const { return static_cast<double>(k) * bin_width; }
};

/// Bin index of a diameter; exact edges go to the upper bin.
std::size_t diameter_bin(double diameter, double bin_width);

DiameterHistogram diameter_histogram(const VesselGraph& graph, double bin_width = 0.04);

/// zeta / zeta0 per bin. Throws for an empty histogram.
std::vector<double> normalized_distribution(const DiameterHistogram& h);

struct TumorRegion {
  BinaryMask mask;
  double volume = 0.0;  // mm^3
  double radius = 0.0;  // mm, cube root of the volume

  static TumorRegion from_ellipsoid(const Ellipsoid& e, const GridSpec& grid);
  static TumorRegion from_volume(double volume);
};

struct ScaleNormalized {
  std::vector<double> zeta_over_volume;  // mm / mm^3
  std::vector<double> zeta_over_radius;  // mm / mm
  double total_over_volume = 0.0;
  double total_over_radius = 0.0;
  double small_vessel_share = 0.0;  // share of zeta below 0.2 mm
};

ScaleNormalized scale_normalizations(const DiameterHistogram& h, const TumorRegion& region);

/// Share of zeta in bins lying entirely within [lo, hi).
double length_share(const DiameterHistogram& h, double lo, double hi);

struct ExponentialFit {
  double rate = 0.0;       // zeta ~ amplitude * exp(-rate * phi)
  double amplitude = 0.0;
  double r_squared = 0.0;
  bool degenerate = false;  // all nonempty bins equal
};

/// Least squares of log zeta against bin center over nonempty bins.
ExponentialFit fit_exponential(const DiameterHistogram& h);

/// CSV with columns phi_center_mm, zeta_mm, zeta_over_zeta0,
/// zeta_over_volume, zeta_over_radius.
void write_histogram_csv(std::ostream& os, const DiameterHistogram& h, const TumorRegion& region);

}  // namespace ufdt
