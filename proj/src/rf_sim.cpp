// SPDX-License-Identifier: Apache-2.0
#include "ufdt/rf_sim.hpp"

#include "ufdt/io.hpp"
#include "ufdt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ufdt {

void Pulse::validate() const {
  if (!(center_freq > 0.0)) throw std::invalid_argument("Pulse: center_freq must be positive");
  if (!(fractional_bandwidth > 0.0 && fractional_bandwidth < 2.0))
    throw std::invalid_argument("Pulse: fractional_bandwidth must be in (0, 2)");
}

double Pulse::sigma() const {
  return std::sqrt(2.0 * std::numbers::ln2) /
         (std::numbers::pi * fractional_bandwidth * center_freq);
}

double Pulse::envelope(double t) const {
  const double s = sigma();
  return std::exp(-0.5 * t * t / (s * s));
}

double Pulse::operator()(double t) const {
  return envelope(t) * std::cos(2.0 * std::numbers::pi * center_freq * t);
}

void PlaneWaveTx::validate() const {
  if (!(std::abs(angle_deg) <= 30.0))
    throw std::invalid_argument("PlaneWaveTx: |angle| must be <= 30 degrees");
}

RxWindow RxWindow::covering(const GridSpec& g, const ProbeModel& probe, const Pulse& pulse,
                            double max_angle_deg, double sample_rate, double sound_speed) {
  if (sample_rate < 4.0 * pulse.center_freq)
    throw std::invalid_argument("RxWindow: sample_rate must be >= 4x center frequency");
  const double a = deg_to_rad(std::abs(max_angle_deg));
  const double x_lo = g.origin[0], x_hi = g.extent_max()[0];
  const double z_lo = g.origin[2], z_hi = g.extent_max()[2];
  const double x_reach = std::max({std::abs(x_lo), std::abs(x_hi), 0.5 * probe.aperture()});
  const double t_min = (z_lo * std::cos(a) - x_reach * std::sin(a) + z_lo) / sound_speed;
  const double far = std::hypot(x_reach + 0.5 * probe.aperture(), z_hi);
  const double t_max = (z_hi + x_reach * std::sin(a) + far) / sound_speed;
  RxWindow w;
  w.sample_rate = sample_rate;
  w.sound_speed = sound_speed;
  w.t0 = std::max(0.0, t_min - 2.0 * pulse.support());
  w.n_samples = static_cast<int>(std::ceil((t_max + 2.0 * pulse.support() - w.t0) * sample_rate)) + 1;
  return w;
}

double elevation_weight(const ProbeModel& probe, double y, double z) {
  const double zf = probe.elevation_focus;
  const double u = (z - zf) / zf;
  const double w = probe.elevation_width * std::sqrt(1.0 + u * u);
  return std::exp(-4.0 * std::numbers::ln2 * y * y / (w * w));
}

double element_weight(const ProbeModel& probe, const Pulse& pulse, double sound_speed, int element,
                      const Vec3& p) {
  const double dx = p[0] - probe.element_x(element);
  const double r = std::hypot(dx, p[2]);
  if (r == 0.0) return 0.0;
  const double sin_t = dx / r, cos_t = p[2] / r;
  const double lambda = sound_speed / pulse.center_freq;
  const double u = std::numbers::pi * probe.pitch * sin_t / lambda;
  const double sinc = u == 0.0 ? 1.0 : std::sin(u) / u;
  return cos_t * sinc * elevation_weight(probe, p[1], p[2]);
}

double round_trip_delay(const ProbeModel& probe, const PlaneWaveTx& tx, double c, int element,
                        const Vec3& p) {
  const double a = tx.angle_rad();
  const double tx_path = p[0] * std::sin(a) + p[2] * std::cos(a);
  const double rx_path = std::hypot(p[0] - probe.element_x(element), p[2]);
  return (tx_path + rx_path) / c;
}

namespace {

constexpr double kWeightCutoff = 1e-9;

struct ProbeScatterer {
  Vec3 p;
  double amplitude;
};

}  // namespace

RFChannelData simulate_rx(const ScattererCloud& cloud, const PlaneWaveTx& tx,
                          const ProbeModel& probe, const Pulse& pulse, const Pose& pose,
                          const RxWindow& window, int workers) {
  tx.validate();
  probe.validate();
  pulse.validate();
  if (window.n_samples < 1) throw std::invalid_argument("simulate_rx: empty receive window");
  if (window.sample_rate < 4.0 * pulse.center_freq)
    throw std::invalid_argument("simulate_rx: sample_rate must be >= 4x center frequency");

  std::vector<ProbeScatterer> visible;
  visible.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 p = world_to_probe(pose, cloud.positions[i]);
    if (p[2] <= 0.0) {
      std::ostringstream msg;
      msg << "simulate_rx: scatterer " << i << " lies behind the array (z' = " << p[2] << " mm)";
      throw std::invalid_argument(msg.str());
    }
    if (cloud.amplitudes[i] == 0.0) continue;
    if (elevation_weight(probe, p[1], p[2]) < kWeightCutoff) continue;
    visible.push_back({p, cloud.amplitudes[i]});
  }

  RFChannelData rf;
  rf.sample_rate = window.sample_rate;
  rf.t0 = window.t0;
  rf.sound_speed = window.sound_speed;
  rf.samples = Eigen::MatrixXd::Zero(probe.element_count, window.n_samples);
  if (visible.empty()) return rf;

  const double dt = 1.0 / window.sample_rate;
  const double sigma = pulse.sigma();
  const double support = pulse.support();
  const double omega = 2.0 * std::numbers::pi * pulse.center_freq;
  const double inv2s2 = 0.5 / (sigma * sigma);
  // env(t + dt) = env(t) * grow(t), grow(t + dt) = grow(t) * h.
  const double h = std::exp(-2.0 * inv2s2 * dt * dt);
  const std::complex<double> rot = std::polar(1.0, omega * dt);

  parallel_for(static_cast<std::size_t>(probe.element_count), workers, [&](std::size_t e) {
    std::vector<double> row(window.n_samples, 0.0);
    for (const auto& s : visible) {
      const double w = s.amplitude * element_weight(probe, pulse, window.sound_speed,
                                                    static_cast<int>(e), s.p);
      if (std::abs(w) < kWeightCutoff * s.amplitude) continue;
      const double tau = round_trip_delay(probe, tx, window.sound_speed, static_cast<int>(e), s.p);
      const int n0 = std::max(0, static_cast<int>(std::ceil((tau - support - window.t0) / dt)));
      const int n1 = std::min(window.n_samples - 1,
                              static_cast<int>(std::floor((tau + support - window.t0) / dt)));
      if (n0 > n1) continue;
      const double t = window.t0 + n0 * dt - tau;
      double env = std::exp(-inv2s2 * t * t);
      double grow = std::exp(-inv2s2 * (2.0 * t * dt + dt * dt));
      std::complex<double> ph = std::polar(w, omega * t);
      for (int n = n0; n <= n1; ++n) {
        row[n] += env * ph.real();
        env *= grow;
        grow *= h;
        ph *= rot;
      }
    }
    for (int n = 0; n < window.n_samples; ++n) rf.samples(static_cast<Eigen::Index>(e), n) = row[n];
  });
  return rf;
}

void add_channel_noise(RFChannelData& rf, double sd, std::uint64_t seed, std::uint64_t emission) {
  if (sd < 0.0) throw std::invalid_argument("add_channel_noise: sd must be >= 0");
  if (sd == 0.0) return;
  const auto ns = static_cast<std::uint64_t>(rf.sample_count());
  for (Eigen::Index e = 0; e < rf.samples.rows(); ++e)
    for (Eigen::Index n = 0; n < rf.samples.cols(); ++n)
      rf.samples(e, n) += sd * hashed_normal(seed, emission,
                                             static_cast<std::uint64_t>(e) * ns +
                                                 static_cast<std::uint64_t>(n));
}

void write_rf(const std::string& path, const RFChannelData& rf) {
  std::vector<double> flat(static_cast<std::size_t>(rf.samples.size()));
  for (Eigen::Index e = 0; e < rf.samples.rows(); ++e)
    for (Eigen::Index n = 0; n < rf.samples.cols(); ++n)
      flat[static_cast<std::size_t>(e * rf.samples.cols() + n)] = rf.samples(e, n);
  io::write_f32(path, flat);
  io::write_json(io::sidecar(path), {{"dims", {rf.samples.rows(), rf.samples.cols()}},
                                     {"sample_rate_mhz", rf.sample_rate},
                                     {"t0_us", rf.t0},
                                     {"sound_speed_mm_per_us", rf.sound_speed}});
}

RFChannelData read_rf(const std::string& path) {
  const auto meta = io::read_json(io::sidecar(path));
  const auto rows = meta.at("dims").at(0).get<Eigen::Index>();
  const auto cols = meta.at("dims").at(1).get<Eigen::Index>();
  const auto flat = io::read_f32(path, static_cast<std::size_t>(rows * cols));
  RFChannelData rf;
  rf.sample_rate = meta.at("sample_rate_mhz").get<double>();
  rf.t0 = meta.at("t0_us").get<double>();
  rf.sound_speed = meta.value("sound_speed_mm_per_us", kSoundSpeed);
  rf.samples.resize(rows, cols);
  for (Eigen::Index e = 0; e < rows; ++e)
    for (Eigen::Index n = 0; n < cols; ++n)
      rf.samples(e, n) = flat[static_cast<std::size_t>(e * cols + n)];
  return rf;
}

}  // namespace ufdt
