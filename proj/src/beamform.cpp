// SPDX-License-Identifier: Apache-2.0
#include "ufdt/beamform.hpp"

#include "ufdt/fft.hpp"
#include "ufdt/io.hpp"
#include "ufdt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ufdt {

IQImage IQFrameStack::frame(int k) const {
  IQImage img;
  img.grid = grid;
  img.pixels.resize(grid.dims[0], grid.dims[2]);
  for (int j = 0; j < grid.dims[2]; ++j)
    for (int i = 0; i < grid.dims[0]; ++i) img.pixels(i, j) = frames(i + j * grid.dims[0], k);
  return img;
}

std::vector<double> default_tx_angles() {
  std::vector<double> a;
  for (int k = 0; k < 8; ++k) a.push_back(-7.0 + 2.0 * k);
  return a;
}

DasBeamformer::DasBeamformer(const GridSpec& grid, const ProbeModel& probe, const PlaneWaveTx& tx,
                             const RxWindow& window, double center_freq)
    : grid_(grid), tx_(tx), window_(window), center_freq_(center_freq),
      element_count_(probe.element_count) {
  grid_.validate();
  probe.validate();
  tx_.validate();
  if (grid_.dims[1] != 1) throw std::invalid_argument("DasBeamformer: slice grid must be planar");
  if (window_.n_samples < 2) throw std::invalid_argument("DasBeamformer: receive window too short");
  const int nx = grid_.dims[0], nz = grid_.dims[2];
  const double omega = 2.0 * std::numbers::pi * center_freq_;
  offsets_.assign(static_cast<std::size_t>(nx) * nz + 1, 0);
  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec3 p = grid_.position(i, 0, j);
      const Vec3 pixel(p[0], 0.0, p[2]);
      const double half = p[2] / (2.0 * probe.f_number);
      for (int e = 0; e < probe.element_count; ++e) {
        if (p[2] <= 0.0 || std::abs(p[0] - probe.element_x(e)) > half) continue;
        const double tau = round_trip_delay(probe, tx_, window_.sound_speed, e, pixel);
        const double s = (tau - window_.t0) * window_.sample_rate;
        if (s < 0.0 || s > window_.n_samples - 1) continue;
        const int n0 = std::min(static_cast<int>(std::floor(s)), window_.n_samples - 2);
        const double ph = omega * (tau - 2.0 * p[2] / window_.sound_speed);
        taps_.push_back({e, n0, static_cast<float>(s - n0),
                         std::complex<float>(static_cast<float>(std::cos(ph)),
                                             static_cast<float>(std::sin(ph)))});
      }
      offsets_[static_cast<std::size_t>(i + j * nx) + 1] = taps_.size();
    }
  }
}

Eigen::MatrixXcd baseband_channels(const RFChannelData& rf, double center_freq) {
  const int ne = rf.element_count(), ns = rf.sample_count();
  Eigen::MatrixXcd bb(ns, ne);  // column per element for contiguous access
  const double omega = 2.0 * std::numbers::pi * center_freq;
  std::vector<double> row(ns);
  for (int e = 0; e < ne; ++e) {
    for (int n = 0; n < ns; ++n) row[n] = rf.samples(e, n);
    const auto a = fft::analytic_signal(row);
    for (int n = 0; n < ns; ++n) bb(n, e) = a[n] * std::polar(1.0, -omega * rf.time(n));
  }
  return bb;
}

IQImage DasBeamformer::operator()(const RFChannelData& rf) const {
  if (rf.element_count() != element_count_ || rf.sample_count() != window_.n_samples ||
      std::abs(rf.t0 - window_.t0) > 1e-12 || std::abs(rf.sample_rate - window_.sample_rate) > 1e-12)
    throw std::invalid_argument("DasBeamformer: channel data does not match the receive window");
  IQImage img;
  img.grid = grid_;
  img.tx_angle_deg = tx_.angle_deg;
  const int nx = grid_.dims[0], nz = grid_.dims[2];
  img.pixels = Eigen::MatrixXcd::Zero(nx, nz);
  if (rf.samples.isZero(0.0)) return img;

  const Eigen::MatrixXcd bb = baseband_channels(rf, center_freq_);
  for (int j = 0; j < nz; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = static_cast<std::size_t>(i + j * nx);
      cdouble acc = 0.0;
      for (std::size_t t = offsets_[p]; t < offsets_[p + 1]; ++t) {
        const Tap& tap = taps_[t];
        const cdouble* col = bb.col(tap.element).data();
        const double f = tap.frac;
        const cdouble v = (1.0 - f) * col[tap.sample] + f * col[tap.sample + 1];
        acc += v * cdouble(tap.phasor);
      }
      img.pixels(i, j) = acc;
    }
  }
  return img;
}

IQImage das_beamform(const RFChannelData& rf, const PlaneWaveTx& tx, const GridSpec& grid,
                     const ProbeModel& probe, double center_freq) {
  RxWindow w;
  w.t0 = rf.t0;
  w.n_samples = rf.sample_count();
  w.sample_rate = rf.sample_rate;
  w.sound_speed = rf.sound_speed;
  return DasBeamformer(grid, probe, tx, w, center_freq)(rf);
}

IQImage compound(const std::vector<IQImage>& images) {
  if (images.empty()) throw std::invalid_argument("compound: no images");
  IQImage out;
  out.grid = images.front().grid;
  out.tx_angle_deg = 0.0;
  out.pixels = Eigen::MatrixXcd::Zero(images.front().pixels.rows(), images.front().pixels.cols());
  for (const auto& img : images) {
    if (!img.grid.same_lattice(out.grid) || img.pixels.rows() != out.pixels.rows() ||
        img.pixels.cols() != out.pixels.cols())
      throw std::invalid_argument("compound: grid mismatch");
    out.pixels += img.pixels;
  }
  out.pixels /= static_cast<double>(images.size());
  return out;
}

void AcquisitionParams::validate() const {
  if (n_frames < 1) throw std::invalid_argument("AcquisitionParams: n_frames must be >= 1");
  if (!(frame_rate > 0.0)) throw std::invalid_argument("AcquisitionParams: frame_rate must be positive");
  if (tx_angles_deg.empty()) throw std::invalid_argument("AcquisitionParams: no transmit angles");
  for (double a : tx_angles_deg) PlaneWaveTx{a}.validate();
  if (noise_sd < 0.0) throw std::invalid_argument("AcquisitionParams: noise_sd must be >= 0");
}

SliceAcquisition::SliceAcquisition(const GridSpec& slice_grid, const ProbeModel& probe,
                                   const Pulse& pulse, const AcquisitionParams& params)
    : grid_(slice_grid), probe_(probe), pulse_(pulse), params_(params) {
  params_.validate();
  double max_angle = 0.0;
  for (double a : params_.tx_angles_deg) max_angle = std::max(max_angle, std::abs(a));
  window_ = RxWindow::covering(grid_, probe_, pulse_, max_angle, params_.sample_rate,
                               params_.sound_speed);
  for (double a : params_.tx_angles_deg)
    beamformers_.emplace_back(grid_, probe_, PlaneWaveTx{a}, window_, pulse_.center_freq);
}

namespace {

void to_column(const IQImage& img, Eigen::MatrixXcd& frames, int k) {
  const int nx = img.nx();
  for (int j = 0; j < img.nz(); ++j)
    for (int i = 0; i < nx; ++i) frames(i + j * nx, k) = img.pixels(i, j);
}

}  // namespace

IQImage SliceAcquisition::compounded_frame(const ScattererCloud& cloud, const Pose& pose,
                                           int workers) const {
  std::vector<IQImage> images;
  for (std::size_t a = 0; a < beamformers_.size(); ++a) {
    const PlaneWaveTx tx{params_.tx_angles_deg[a]};
    images.push_back(beamformers_[a](simulate_rx(cloud, tx, probe_, pulse_, pose, window_, workers)));
  }
  return compound(images);
}

IQFrameStack SliceAcquisition::acquire(const ScattererCloud& cloud, const Pose& pose, int workers,
                                       std::uint64_t noise_stream) const {
  const auto [fixed, moving] = split_static(cloud);
  const std::size_t n_angles = beamformers_.size();

  std::vector<RFChannelData> static_rf;
  for (std::size_t a = 0; a < n_angles; ++a)
    static_rf.push_back(simulate_rx(fixed, PlaneWaveTx{params_.tx_angles_deg[a]}, probe_, pulse_,
                                    pose, window_, workers));

  IQFrameStack stack;
  stack.grid = grid_;
  stack.frame_rate = params_.frame_rate;
  stack.angles_per_frame = static_cast<int>(n_angles);
  stack.pose = pose;
  stack.frames.resize(static_cast<Eigen::Index>(grid_.size()), params_.n_frames);

  const bool dynamic = moving.size() > 0 || params_.noise_sd > 0.0;
  if (!dynamic) {
    std::vector<IQImage> images;
    for (std::size_t a = 0; a < n_angles; ++a) images.push_back(beamformers_[a](static_rf[a]));
    const IQImage img = compound(images);
    for (int k = 0; k < params_.n_frames; ++k) to_column(img, stack.frames, k);
    return stack;
  }

  const double prf = stack.prf();
  const std::uint64_t seed = params_.noise_seed ^ (noise_stream * 0x9e3779b97f4a7c15ULL);
  parallel_for(static_cast<std::size_t>(params_.n_frames), workers, [&](std::size_t k) {
    std::vector<IQImage> images;
    for (std::size_t a = 0; a < n_angles; ++a) {
      const std::uint64_t emission = k * n_angles + a;
      RFChannelData rf = static_rf[a];
      if (moving.size() > 0) {
        const ScattererCloud now = advance(moving, static_cast<double>(emission) / prf);
        rf.samples += simulate_rx(now, PlaneWaveTx{params_.tx_angles_deg[a]}, probe_, pulse_, pose,
                                  window_, 1)
                          .samples;
      }
      add_channel_noise(rf, params_.noise_sd, seed, emission);
      images.push_back(beamformers_[a](rf));
    }
    to_column(compound(images), stack.frames, static_cast<int>(k));
  });
  return stack;
}

IQFrameStack acquire_slice(const PhantomSpec& spec, const Pose& pose, const ProbeModel& probe,
                           const Pulse& pulse, const GridSpec& slice_grid,
                           const AcquisitionParams& params, int workers) {
  return SliceAcquisition(slice_grid, probe, pulse, params)
      .acquire(seed_scatterers(spec), pose, workers);
}

void write_iq_stack(const std::string& path, const IQFrameStack& stack) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(stack.frames.size()) * 2);
  for (Eigen::Index k = 0; k < stack.frames.cols(); ++k)
    for (Eigen::Index p = 0; p < stack.frames.rows(); ++p) {
      flat.push_back(stack.frames(p, k).real());
      flat.push_back(stack.frames(p, k).imag());
    }
  io::write_f32(path, flat);
  io::write_json(io::sidecar(path), {{"grid", stack.grid},
                                     {"n_frames", stack.frame_count()},
                                     {"frame_rate_hz", stack.frame_rate},
                                     {"angles_per_frame", stack.angles_per_frame},
                                     {"pose", stack.pose},
                                     {"layout", "complex64 interleaved, frame-major, pixel i + j*nx"}});
}

IQFrameStack read_iq_stack(const std::string& path) {
  const auto meta = io::read_json(io::sidecar(path));
  IQFrameStack s;
  s.grid = meta.at("grid").get<GridSpec>();
  const int n_frames = meta.at("n_frames").get<int>();
  s.frame_rate = meta.at("frame_rate_hz").get<double>();
  s.angles_per_frame = meta.at("angles_per_frame").get<int>();
  s.pose = meta.at("pose").get<Pose>();
  const auto np = static_cast<Eigen::Index>(s.grid.size());
  const auto flat = io::read_f32(path, static_cast<std::size_t>(np * n_frames * 2));
  s.frames.resize(np, n_frames);
  std::size_t n = 0;
  for (Eigen::Index k = 0; k < n_frames; ++k)
    for (Eigen::Index p = 0; p < np; ++p, n += 2) s.frames(p, k) = {flat[n], flat[n + 1]};
  return s;
}

}  // namespace ufdt
