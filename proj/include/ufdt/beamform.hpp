// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/rf_sim.hpp"

#include <Eigen/Core>

#include <complex>
#include <string>
#include <vector>

namespace ufdt {

/// Complex baseband image on a planar slice grid. pixels(i, j) is x' index i,
/// z' index j.
struct IQImage {
  GridSpec grid;
  Eigen::MatrixXcd pixels;
  double tx_angle_deg = 0.0;

  int nx() const { return grid.dims[0]; }
  int nz() const { return grid.dims[2]; }
};

/// Frame stack stored one column per frame; row i + j * nx holds pixel (i, j).
struct IQFrameStack {
  GridSpec grid;
  Eigen::MatrixXcd frames;
  double frame_rate = 500.0;  // Hz
  int angles_per_frame = 8;
  Pose pose;

  int frame_count() const { return static_cast<int>(frames.cols()); }
  double prf() const { return frame_rate * angles_per_frame; }
  IQImage frame(int k) const;
};

/// The default compounding set: -7 to 7 degrees in 2 degree steps.
std::vector<double> default_tx_angles();

/// Delay-and-sum beamformer for one transmit angle and one slice grid.
/// Per-pixel aperture, sample positions and remodulation phasors are
/// precomputed so repeated frames only pay for the summation.
class DasBeamformer {
 public:
  DasBeamformer(const GridSpec& slice_grid, const ProbeModel& probe, const PlaneWaveTx& tx,
                const RxWindow& window, double center_freq);

  IQImage operator()(const RFChannelData& rf) const;

  const GridSpec& grid() const { return grid_; }

 private:
  struct Tap {
    int element;
    int sample;
    float frac;
    std::complex<float> phasor;
  };

  GridSpec grid_;
  PlaneWaveTx tx_;
  RxWindow window_;
  double center_freq_;
  int element_count_;
  std::vector<std::size_t> offsets_;  // taps_[offsets_[p] .. offsets_[p + 1]) belong to pixel p
  std::vector<Tap> taps_;
};

/// Baseband channel data: analytic signal mixed down by exp(-i 2 pi f0 t).
Eigen::MatrixXcd baseband_channels(const RFChannelData& rf, double center_freq);

/// One-shot beamforming; the receive window is taken from `rf`.
IQImage das_beamform(const RFChannelData& rf, const PlaneWaveTx& tx, const GridSpec& grid,
                     const ProbeModel& probe, double center_freq);

/// Complex mean of images sharing a grid.
IQImage compound(const std::vector<IQImage>& images);

struct AcquisitionParams {
  int n_frames = 400;
  double frame_rate = 500.0;  // Hz
  std::vector<double> tx_angles_deg = default_tx_angles();
  double sample_rate = 60.0;  // MHz
  double sound_speed = kSoundSpeed;
  double noise_sd = 0.0;  // per channel sample
  std::uint64_t noise_seed = 0;

  void validate() const;
};

/// Beamformer bank and receive window for every transmit angle of a slice.
class SliceAcquisition {
 public:
  SliceAcquisition(const GridSpec& slice_grid, const ProbeModel& probe, const Pulse& pulse,
                   const AcquisitionParams& params);

  /// Simulates the 400-frame (by default) stack for `pose`. Static
  /// scatterers are simulated once per angle; moving ones are advanced to
  /// each emission time (emission index / PRF). Frames run in parallel.
  IQFrameStack acquire(const ScattererCloud& cloud, const Pose& pose, int workers = 1,
                       std::uint64_t noise_stream = 0) const;

  /// Single compounded frame of a motionless cloud, without channel noise.
  IQImage compounded_frame(const ScattererCloud& cloud, const Pose& pose, int workers = 1) const;

  const RxWindow& window() const { return window_; }

 private:
  GridSpec grid_;
  ProbeModel probe_;
  Pulse pulse_;
  AcquisitionParams params_;
  RxWindow window_;
  std::vector<DasBeamformer> beamformers_;
};

IQFrameStack acquire_slice(const PhantomSpec& spec, const Pose& pose, const ProbeModel& probe,
                           const Pulse& pulse, const GridSpec& slice_grid,
                           const AcquisitionParams& params = {}, int workers = 1);

/// Raw interleaved complex64 (re, im) little-endian, frame-major, plus sidecar.
void write_iq_stack(const std::string& path, const IQFrameStack& stack);
IQFrameStack read_iq_stack(const std::string& path);

}  // namespace ufdt
