// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/phantom.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <vector>

namespace ufdt {

/// Intensity frames on an x-y pixel lattice. data(i + j * nx, t).
struct IntensityMovie {
  int nx = 0;
  int ny = 0;
  Eigen::MatrixXd data;
  double frame_interval = 0.1;  // s

  int frame_count() const { return static_cast<int>(data.cols()); }
  double duration() const { return frame_count() * frame_interval; }
  double& at(int i, int j, int t) { return data(i + j * nx, t); }
  double at(int i, int j, int t) const { return data(i + j * nx, t); }
};

/// Second-order Butterworth low-pass coefficients (b, a) with a[0] = 1, as
/// a bilinear-transform design with cutoff `normalized` = fc / (fs / 2).
struct BiquadCoefficients {
  std::array<double, 3> b{};
  std::array<double, 3> a{};
};
BiquadCoefficients butterworth_lowpass(double normalized_cutoff);

/// Zero-phase forward-backward filtering with odd-reflection padding of
/// 3 * max(len(a), len(b)) samples and steady-state initial conditions.
std::vector<double> filtfilt(const BiquadCoefficients& f, const std::vector<double>& x);

/// Average of y over its sample times by the trapezoidal rule.
double trapezoid_mean(const std::vector<double>& y);

enum class MapKind { toa, moi };

/// Per 3x3 region values; regions are (rx, ry) with trailing partial
/// blocks dropped. Non-perfused regions hold NaN.
struct ParamMap {
  MapKind kind = MapKind::toa;
  int rx = 0;
  int ry = 0;
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> nonperfused;
};

inline constexpr int kRegionSize = 3;

/// Mean trace over the 3x3 block of region (r, s).
std::vector<double> region_trace(const IntensityMovie& movie, int r, int s);

struct ToaOptions {
  bool use_filtered = false;  // threshold the low-pass trace instead of the raw mean
  double lowpass_cutoff = 0.5;  // Hz
};

/// First time a region's mean trace reaches 90% of its maximum. Regions
/// whose maximum stays below 3 * noise_sd are flagged non-perfused.
ParamMap toa_map(const IntensityMovie& movie, double noise_sd, const ToaOptions& options = {});

/// Temporal mean of the zero-phase low-pass filtered trace. With noise_sd
/// > 0, non-perfused regions are flagged as in toa_map.
ParamMap moi_map(const IntensityMovie& movie, double lowpass_cutoff = 0.5, double noise_sd = 0.0);

struct SpatialSummary {
  double mean = 0.0;
  double sd = 0.0;  // population
  int regions = 0;
};

SpatialSummary spatial_summary(const ParamMap& map);

/// Bolus movie on an x-y plane at height z, 60 s at 0.1 s by default.
IntensityMovie movie_from_phantom(const PhantomSpec& spec, const GridSpec& plane,
                                  double frame_interval = 0.1, double duration = 60.0);

/// Region values as a CSV grid (rows are ry, columns rx, "nan" when non-perfused).
void write_param_map_csv(std::ostream& os, const ParamMap& map);

}  // namespace ufdt
