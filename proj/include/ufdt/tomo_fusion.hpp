// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/clutter_filter.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ufdt {

/// Resamples the slices of one rotation into the world grid. Each world
/// voxel is mapped back to (x', elevation, z') and interpolated trilinearly
/// in the (x', y step, z') slice stack; voxels outside the stack are zero.
/// `slices` must follow geom.y_steps order and share geom's slice grid.
PowerVolume assemble_volume(const std::vector<PowerSlice>& slices, const ScanGeometry& geom,
                            double theta_deg, const GridSpec& world_grid);

/// Offsets (voxel units) that align each volume to volumes[reference]:
/// aligned(x) = v(x - offset). Exhaustive cross-correlation search within
/// +-max_shift voxels per axis, refined by a per-axis parabola.
std::vector<Vec3> register_volumes(const std::vector<PowerVolume>& volumes, int reference,
                                   int max_shift = 8);

/// out(x) = v(x - offset), trilinear, zero outside.
PowerVolume shift_volume(const PowerVolume& v, const Vec3& offset);

/// Shift-and-sum; all volumes must share a grid.
PowerVolume sum_volumes(const std::vector<PowerVolume>& volumes, const std::vector<Vec3>& offsets);

/// Point response of the scan-and-fuse chain, normalized to unit sum.
/// `center` is the simulated point location in world coordinates.
struct PSFKernel {
  PowerVolume kernel;
  Vec3 center = Vec3::Zero();
};

/// Unfiltered power |compounded IQ|^2 of a motionless cloud at one pose.
PowerSlice static_power_slice(const SliceAcquisition& acq, const ScattererCloud& cloud,
                              const Pose& pose, int workers = 1);

/// Runs a unit point scatterer through every (theta, y) pose of `geom`,
/// assembles and sums the per-rotation volumes on `kernel_grid`.
PSFKernel simulate_psf(const ProbeModel& probe, const Pulse& pulse, const ScanGeometry& geom,
                       const AcquisitionParams& params, const GridSpec& kernel_grid,
                       const Vec3& point, int workers = 1);

struct WienerSpec {
  double noise_variance = 0.0;   // per-voxel noise variance in volume units
  double epsilon_floor = 1e-3;   // relative floor on |PSF spectrum|
  bool smooth_spectrum = false;  // 3x3x3 circular box average of the energy spectrum
  bool clamp_nonnegative = true;

  void validate() const;
};

/// Wiener deconvolution with gain max(S - noise, 0) / S / PSF, where S is
/// the energy spectrum |V|^2 / N. The kernel spacing must match the volume.
PowerVolume wiener_deconvolve(const PowerVolume& vol, const PSFKernel& psf, const WienerSpec& spec);

/// Kernel circularly embedded on a lattice of `dims` with its center at index 0.
std::vector<double> embed_kernel(const PSFKernel& psf, const std::array<int, 3>& dims);

/// Sample variance of the voxels whose centers lie inside `region`.
double estimate_noise_variance(const PowerVolume& vol, const Box& region);

/// Mean and standard deviation over a region (for z-scores).
std::pair<double, double> region_mean_sd(const PowerVolume& vol, const Box& region);

/// Stable 64-bit FNV-1a hash rendered as 16 hex digits.
std::string stable_hash(const std::string& text);

/// Loads the kernel from `cache_dir` when a file for `key_text` exists,
/// otherwise simulates and stores it. An empty cache_dir disables caching.
PSFKernel cached_psf(const std::string& cache_dir, const ProbeModel& probe, const Pulse& pulse,
                     const ScanGeometry& geom, const AcquisitionParams& params,
                     const GridSpec& kernel_grid, const Vec3& point, int workers = 1);

}  // namespace ufdt
