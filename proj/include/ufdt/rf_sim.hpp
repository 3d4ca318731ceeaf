// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/geometry.hpp"
#include "ufdt/phantom.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace ufdt {

inline constexpr double kSoundSpeed = 1.54;  // mm/us

/// Gaussian-modulated cosine. Times in microseconds, frequencies in MHz.
struct Pulse {
  double center_freq = 15.0;
  double fractional_bandwidth = 0.85;

  static Pulse from_probe(const ProbeModel& probe) {
    return {probe.center_freq, probe.fractional_bandwidth};
  }
  void validate() const;
  /// Envelope standard deviation giving a -6 dB spectral width of bandwidth * f0.
  double sigma() const;
  double envelope(double t) const;
  double operator()(double t) const;
  /// Envelope support used by the simulator: |t| <= support().
  double support() const { return 5.0 * sigma(); }
};

struct PlaneWaveTx {
  double angle_deg = 0.0;
  void validate() const;
  double angle_rad() const { return deg_to_rad(angle_deg); }
};

/// Receive time window: t0 (us) and sample count at sample_rate (MHz).
struct RxWindow {
  double t0 = 0.0;
  int n_samples = 0;
  double sample_rate = 60.0;
  double sound_speed = kSoundSpeed;

  /// Window covering echoes from every pixel of `slice_grid` for the given
  /// transmit angles, padded by the pulse support.
  static RxWindow covering(const GridSpec& slice_grid, const ProbeModel& probe, const Pulse& pulse,
                           double max_angle_deg, double sample_rate = 60.0,
                           double sound_speed = kSoundSpeed);
};

/// Channel data, one row per element. t0 in microseconds.
struct RFChannelData {
  Eigen::MatrixXd samples;  // element x time sample
  double sample_rate = 60.0;
  double t0 = 0.0;
  double sound_speed = kSoundSpeed;

  int element_count() const { return static_cast<int>(samples.rows()); }
  int sample_count() const { return static_cast<int>(samples.cols()); }
  double time(int n) const { return t0 + n / sample_rate; }
};

/// Two-way amplitude weight of a scatterer at probe-frame position p seen by
/// element e: element directivity times the elevation beam profile.
double element_weight(const ProbeModel& probe, const Pulse& pulse, double sound_speed, int element,
                      const Vec3& probe_point);

/// Elevation beam two-way weight at elevation offset y and depth z.
double elevation_weight(const ProbeModel& probe, double y, double z);

/// Plane-wave transmit delay plus element receive delay, in us.
double round_trip_delay(const ProbeModel& probe, const PlaneWaveTx& tx, double sound_speed,
                        int element, const Vec3& probe_point);

/// Superposes pulse echoes of every scatterer on every element. Rows are
/// computed independently, so the result does not depend on `workers`.
RFChannelData simulate_rx(const ScattererCloud& cloud, const PlaneWaveTx& tx,
                          const ProbeModel& probe, const Pulse& pulse, const Pose& pose,
                          const RxWindow& window, int workers = 1);

/// Adds white Gaussian noise keyed on (seed, emission), reproducible per sample.
void add_channel_noise(RFChannelData& rf, double sd, std::uint64_t seed, std::uint64_t emission);

/// Raw little-endian float32 dump plus "<path>.json" sidecar.
void write_rf(const std::string& path, const RFChannelData& rf);
RFChannelData read_rf(const std::string& path);

}  // namespace ufdt
