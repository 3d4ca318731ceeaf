// SPDX-License-Identifier: Apache-2.0
#include "ufdt/rf_sim.hpp"

#include "ufdt/fft.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>

using namespace ufdt;

namespace {

ProbeModel odd_probe() {
  ProbeModel p;
  p.element_count = 65;  // element 32 sits on x' = 0
  return p;
}

ScattererCloud points(const std::vector<Vec3>& pos, const std::vector<double>& amp) {
  ScattererCloud c;
  for (std::size_t i = 0; i < pos.size(); ++i) c.push_static(pos[i], amp[i]);
  return c;
}

RxWindow window_from_zero(double t_max) {
  RxWindow w;
  w.t0 = 0.0;
  w.sample_rate = 60.0;
  w.n_samples = static_cast<int>(t_max * 60.0);
  return w;
}

// Independent superposition: every sample, every scatterer, direct formulas.
Eigen::MatrixXd brute_force(const ScattererCloud& cloud, double angle_deg, const ProbeModel& probe,
                            const Pulse& pulse, const RxWindow& w) {
  const double c = 1.54;
  const double sigma = std::sqrt(2.0 * std::log(2.0)) / (M_PI * pulse.fractional_bandwidth * pulse.center_freq);
  const double a = angle_deg * M_PI / 180.0;
  const double lambda = c / pulse.center_freq;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(probe.element_count, w.n_samples);
  for (int e = 0; e < probe.element_count; ++e) {
    const double xe = (e - 0.5 * (probe.element_count - 1)) * probe.pitch;
    for (std::size_t s = 0; s < cloud.size(); ++s) {
      const Vec3& p = cloud.positions[s];
      const double r = std::hypot(p[0] - xe, p[2]);
      const double tau = (p[0] * std::sin(a) + p[2] * std::cos(a) + r) / c;
      const double st = (p[0] - xe) / r;
      const double u = M_PI * probe.pitch * st / lambda;
      const double zf = probe.elevation_focus;
      const double wy = probe.elevation_width * std::sqrt(1.0 + std::pow((p[2] - zf) / zf, 2));
      const double weight = (p[2] / r) * (u == 0.0 ? 1.0 : std::sin(u) / u) *
                            std::exp(-4.0 * std::log(2.0) * p[1] * p[1] / (wy * wy));
      for (int n = 0; n < w.n_samples; ++n) {
        const double t = w.t0 + n / w.sample_rate - tau;
        if (std::abs(t) > 5.0 * sigma) continue;
        out(e, n) += cloud.amplitudes[s] * weight * std::exp(-0.5 * t * t / (sigma * sigma)) *
                     std::cos(2.0 * M_PI * pulse.center_freq * t);
      }
    }
  }
  return out;
}

int peak_sample(const Eigen::MatrixXd& rf, int row) {
  Eigen::Index k;
  rf.row(row).cwiseAbs().maxCoeff(&k);
  return static_cast<int>(k);
}

}  // namespace

TEST(Pulse, SpectralWidthMatchesBandwidth) {
  const Pulse pulse;
  const int n = 8192;
  const double fs = 1000.0;  // MHz, fine sampling
  std::vector<std::complex<double>> x(n);
  for (int i = 0; i < n; ++i) x[i] = pulse((i - n / 2) / fs);
  fft::forward_1d(x);
  std::vector<double> mag(n / 2);
  for (int i = 0; i < n / 2; ++i) mag[i] = std::abs(x[i]);
  const double peak = *std::max_element(mag.begin(), mag.end());
  double lo = 0.0, hi = 0.0;
  for (int i = 1; i < n / 2; ++i) {
    const double f0 = (i - 1) * fs / n, f1 = i * fs / n;
    const double m0 = mag[i - 1] / peak - 0.5, m1 = mag[i] / peak - 0.5;
    if (m0 < 0 && m1 >= 0) lo = f0 + (f1 - f0) * (-m0) / (m1 - m0);
    if (m0 >= 0 && m1 < 0) hi = f0 + (f1 - f0) * m0 / (m0 - m1);
  }
  EXPECT_NEAR((hi - lo) / pulse.center_freq / pulse.fractional_bandwidth, 1.0, 0.05);
}

TEST(SimulateRx, ZeroAmplitudeGivesZeroRf) {
  const auto cloud = points({Vec3(0, 0, 5), Vec3(1, 0, 4)}, {0.0, 0.0});
  const auto rf = simulate_rx(cloud, {}, odd_probe(), Pulse{}, Pose{}, window_from_zero(10.0));
  EXPECT_EQ(rf.samples.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SimulateRx, OnAxisArrivalTime) {
  const double z = 5.0;
  const auto rf = simulate_rx(points({Vec3(0, 0, z)}, {1.0}), {}, odd_probe(), Pulse{}, Pose{},
                              window_from_zero(10.0));
  const double t = rf.time(peak_sample(rf.samples, 32));
  EXPECT_LE(std::abs(t - 2.0 * z / 1.54), 0.5 / 60.0);
}

TEST(SimulateRx, DoublingDepthDoublesArrival) {
  const auto probe = odd_probe();
  const auto w = window_from_zero(12.0);
  const auto a = simulate_rx(points({Vec3(0, 0, 2.5)}, {1.0}), {}, probe, Pulse{}, Pose{}, w);
  const auto b = simulate_rx(points({Vec3(0, 0, 5.0)}, {1.0}), {}, probe, Pulse{}, Pose{}, w);
  const double ta = a.time(peak_sample(a.samples, 32)), tb = b.time(peak_sample(b.samples, 32));
  EXPECT_LE(std::abs(tb - 2.0 * ta), 1.0 / 60.0);
}

TEST(SimulateRx, MatchesBruteForceSuperposition) {
  ProbeModel probe;
  probe.element_count = 24;
  const Pulse pulse;
  const auto cloud = points({Vec3(-0.3, 0.1, 4.6), Vec3(0.2, -0.2, 5.1), Vec3(0.45, 0.0, 5.4)},
                            {1.0, -0.7, 2.5});
  RxWindow w;
  w.t0 = 5.0;
  w.n_samples = 300;
  const auto rf = simulate_rx(cloud, PlaneWaveTx{5.0}, probe, pulse, Pose{}, w);
  const auto ref = brute_force(cloud, 5.0, probe, pulse, w);
  EXPECT_LE((rf.samples - ref).norm() / ref.norm(), 1e-9);
}

TEST(SimulateRx, Linearity) {
  const auto probe = odd_probe();
  const auto w = window_from_zero(9.0);
  const PlaneWaveTx tx{-3.0};
  const auto a = points({Vec3(0.1, 0, 4.8), Vec3(-0.5, 0.2, 5.2)}, {1.0, 0.5});
  const auto b = points({Vec3(0.6, -0.1, 5.5)}, {2.0});
  auto ab = a;
  ab.push_static(b.positions[0], b.amplitudes[0]);
  const auto ra = simulate_rx(a, tx, probe, Pulse{}, Pose{}, w);
  const auto rb = simulate_rx(b, tx, probe, Pulse{}, Pose{}, w);
  const auto rab = simulate_rx(ab, tx, probe, Pulse{}, Pose{}, w);
  EXPECT_LE((rab.samples - ra.samples - rb.samples).norm() / rab.samples.norm(), 1e-9);
}

TEST(SimulateRx, OutOfPlaneFalloff) {
  const ProbeModel probe = odd_probe();
  const auto w = window_from_zero(9.0);
  const auto in = simulate_rx(points({Vec3(0, 0, 5)}, {1.0}), {}, probe, Pulse{}, Pose{}, w);
  const auto off = simulate_rx(points({Vec3(0, probe.elevation_width, 5)}, {1.0}), {}, probe,
                               Pulse{}, Pose{}, w);
  const double db = 20.0 * std::log10(in.samples.cwiseAbs().maxCoeff() / off.samples.cwiseAbs().maxCoeff());
  EXPECT_GE(db, 8.0);
}

TEST(SimulateRx, RejectsScattererBehindArray) {
  EXPECT_THROW(simulate_rx(points({Vec3(0, 0, -0.5)}, {1.0}), {}, odd_probe(), Pulse{}, Pose{},
                           window_from_zero(5.0)),
               std::invalid_argument);
  EXPECT_THROW(PlaneWaveTx{31.0}.validate(), std::invalid_argument);
}

TEST(SimulateRx, IndependentOfWorkerCount) {
  const auto cloud = points({Vec3(0.1, 0, 4.8), Vec3(-0.5, 0.2, 5.2), Vec3(0.3, 0.3, 5.0)}, {1.0, 0.5, 0.3});
  const auto w = window_from_zero(9.0);
  const auto a = simulate_rx(cloud, PlaneWaveTx{7.0}, ProbeModel{}, Pulse{}, Pose{30.0, 0.2}, w, 1);
  const auto b = simulate_rx(cloud, PlaneWaveTx{7.0}, ProbeModel{}, Pulse{}, Pose{30.0, 0.2}, w, 3);
  EXPECT_TRUE(a.samples == b.samples);
}

TEST(SimulateRx, PoseMapsWorldIntoProbeFrame) {
  // The same probe-frame point reached through a rotated pose gives identical RF.
  const Pose pose{40.0, 0.3};
  const Vec3 local(0.2, 0.0, 5.0);
  const auto w = window_from_zero(9.0);
  const auto a = simulate_rx(points({local}, {1.0}), {}, odd_probe(), Pulse{}, Pose{}, w);
  const auto b = simulate_rx(points({probe_to_world(pose, local)}, {1.0}), {}, odd_probe(), Pulse{}, pose, w);
  EXPECT_LE((a.samples - b.samples).norm() / a.samples.norm(), 1e-12);
}

TEST(RxWindow, CoversEveryPixelEcho) {
  const ProbeModel probe;
  const Pulse pulse;
  const auto g = default_slice_grid(probe, 4.0, 6.0);
  const auto w = RxWindow::covering(g, probe, pulse, 7.0);
  for (double a : {-7.0, 7.0})
    for (int e : {0, probe.element_count - 1})
      for (const Vec3& p : {g.origin, g.extent_max(), Vec3(g.origin[0], 0, g.extent_max()[2])}) {
        const double tau = round_trip_delay(probe, PlaneWaveTx{a}, kSoundSpeed, e, p);
        EXPECT_GE(tau - pulse.support(), w.t0);
        EXPECT_LE(tau + pulse.support(), w.t0 + (w.n_samples - 1) / w.sample_rate);
      }
  EXPECT_THROW(RxWindow::covering(g, probe, pulse, 7.0, 40.0), std::invalid_argument);
}

TEST(ChannelNoise, ReproducibleWithRequestedSd) {
  RFChannelData rf;
  rf.samples = Eigen::MatrixXd::Zero(32, 2000);
  auto a = rf, b = rf, c = rf;
  add_channel_noise(a, 2.0, 5, 1);
  add_channel_noise(b, 2.0, 5, 1);
  add_channel_noise(c, 2.0, 5, 2);
  EXPECT_TRUE(a.samples == b.samples);
  EXPECT_FALSE(a.samples == c.samples);
  const double sd = std::sqrt(a.samples.squaredNorm() / a.samples.size());
  EXPECT_NEAR(sd, 2.0, 0.03);
}

TEST(RfIo, RoundTrip) {
  const auto rf = simulate_rx(points({Vec3(0, 0, 5)}, {1.0}), {}, odd_probe(), Pulse{}, Pose{},
                              window_from_zero(8.0));
  const auto path = (std::filesystem::temp_directory_path() / "ufdt_rf_roundtrip.f32").string();
  write_rf(path, rf);
  const auto back = read_rf(path);
  EXPECT_EQ(back.samples.rows(), rf.samples.rows());
  EXPECT_EQ(back.samples.cols(), rf.samples.cols());
  EXPECT_EQ(back.t0, rf.t0);
  EXPECT_EQ(back.sample_rate, rf.sample_rate);
  EXPECT_LE((back.samples - rf.samples).cwiseAbs().maxCoeff(), 1e-6 * rf.samples.cwiseAbs().maxCoeff());
}
