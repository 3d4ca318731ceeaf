// SPDX-License-Identifier: Apache-2.0
#include "ufdt/phantom.hpp"
#include "ufdt/vessel_quant.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace ufdt;

namespace {

VesselGraph straight_vessel(double length, double diameter, double speed) {
  VesselGraph g;
  VesselSegment s;
  s.centerline = {Vec3(0, 0, 5), Vec3(length, 0, 5)};
  s.length = length;
  s.mean_diameter = diameter;
  s.flow_speed = speed;
  g.segments.push_back(s);
  return g;
}

PhantomSpec blood_only(const VesselGraph& tree, double density) {
  PhantomSpec spec;
  spec.tree = tree;
  spec.tissue_region = Box{};  // zero volume, no tissue
  spec.blood_density = density;
  return spec;
}

// Point at arc length s by walking the polyline independently.
Vec3 walk(const std::vector<Vec3>& pts, double s) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double l = (pts[i] - pts[i - 1]).norm();
    if (s <= l) return pts[i - 1] + (s / l) * (pts[i] - pts[i - 1]);
    s -= l;
  }
  return pts.back();
}

}  // namespace

TEST(GenerateTree, SingleSegmentWhenChildrenTooThin) {
  TreeParams p;
  p.root_diameter = 0.2;
  p.min_diameter = 0.19;
  p.length_jitter = 0.0;
  const auto g = generate_tree(1, p);
  ASSERT_EQ(g.segments.size(), 1u);
  EXPECT_NEAR(g.total_length(), p.length_ratio * p.root_diameter, 1e-12);
  EXPECT_TRUE(g.connections.empty());
}

TEST(GenerateTree, RejectsNonTerminatingDecay) {
  TreeParams p;
  p.decay = 1.0;
  EXPECT_THROW(generate_tree(1, p), std::invalid_argument);
  p.decay = 1.3;
  EXPECT_THROW(generate_tree(1, p), std::invalid_argument);
}

TEST(GenerateTree, DeterministicPerSeed) {
  const TreeParams p;
  const auto a = generate_tree(7, p), b = generate_tree(7, p), c = generate_tree(8, p);
  ASSERT_EQ(a.segments.size(), b.segments.size());
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    EXPECT_EQ(a.segments[i].centerline, b.segments[i].centerline);
    EXPECT_EQ(a.segments[i].mean_diameter, b.segments[i].mean_diameter);
  }
  EXPECT_NE(a.total_length(), c.total_length());
}

TEST(GenerateTree, HistogramMatchesSegmentWalker) {
  const auto g = generate_tree(7, TreeParams{});
  std::map<long, double> bins;
  for (const auto& s : g.segments) {
    double len = 0.0;
    for (std::size_t i = 1; i < s.centerline.size(); ++i) len += (s.centerline[i] - s.centerline[i - 1]).norm();
    bins[static_cast<long>(std::floor(s.mean_diameter / 0.04 + 1e-9))] += len;
  }
  const auto h = diameter_histogram(g, 0.04);
  double total = 0.0;
  for (std::size_t k = 0; k < h.zeta.size(); ++k) {
    const double expect = bins.count(static_cast<long>(k)) ? bins[static_cast<long>(k)] : 0.0;
    EXPECT_NEAR(h.zeta[k], expect, 1e-9) << "bin " << k;
    total += h.zeta[k];
  }
  EXPECT_NEAR(total / g.total_length(), 1.0, 1e-9);
}

TEST(GenerateTree, DefaultParamsExponentialFit) {
  const auto fit = fit_exponential(diameter_histogram(generate_tree(7, TreeParams{}), 0.04));
  EXPECT_GE(fit.r_squared, 0.93);
  EXPECT_GT(fit.rate, 0.0);
}

TEST(GenerateTree, ChildrenStartAtParentEnd) {
  const auto g = generate_tree(3, TreeParams{});
  for (const auto& [p, c] : g.connections) {
    EXPECT_EQ(g.segments[c].parent, p);
    EXPECT_NEAR((g.segments[c].centerline.front() - g.segments[p].centerline.back()).norm(), 0.0, 1e-12);
    EXPECT_LT(g.segments[c].mean_diameter, g.segments[p].mean_diameter * 1.5);
  }
}

TEST(SeedScatterers, NoBloodWithoutVessels) {
  PhantomSpec spec;
  const auto cloud = seed_scatterers(spec);
  EXPECT_GT(cloud.count(ScattererLabel::tissue), 0u);
  EXPECT_EQ(cloud.count(ScattererLabel::blood), 0u);
  for (const auto& v : cloud.velocities) EXPECT_EQ(v.norm(), 0.0);
}

TEST(SeedScatterers, PoissonBloodCount) {
  const auto spec = blood_only(straight_vessel(10.0, 0.2, 1.0), 1000.0);
  const double mean = 1000.0 * M_PI * 0.01 * 10.0;
  const auto cloud = seed_scatterers(spec);
  EXPECT_NEAR(static_cast<double>(cloud.count(ScattererLabel::blood)), mean, 4.0 * std::sqrt(mean));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    EXPECT_LE(std::hypot(p[1], p[2] - 5.0), 0.1 + 1e-12);
  }
}

TEST(SeedScatterers, TissueToBloodRatioAndDeterminism) {
  PhantomSpec spec;
  spec.tree = straight_vessel(2.0, 0.2, 1.0);
  spec.tree.segments[0].centerline = {Vec3(-1, 0, 5), Vec3(1, 0, 5)};
  const auto a = seed_scatterers(spec), b = seed_scatterers(spec);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.positions, b.positions);
  double tissue = 0.0, blood = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    (a.labels[i] == ScattererLabel::tissue ? tissue : blood) = a.amplitudes[i];
  EXPECT_NEAR(20.0 * std::log10(tissue / blood), 40.0, 1e-9);
}

TEST(Advance, ZeroStepIsIdentity) {
  const auto cloud = seed_scatterers(blood_only(straight_vessel(5.0, 0.2, 1.0), 500.0));
  const auto moved = advance(cloud, 0.0);
  EXPECT_EQ(moved.positions, cloud.positions);
}

TEST(Advance, StraightVesselShift) {
  const auto cloud = seed_scatterers(blood_only(straight_vessel(5.0, 0.2, 1.0), 500.0));
  const auto moved = advance(cloud, 0.25);
  ASSERT_EQ(moved.size(), cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.positions[i][0] + 0.25 >= 5.0) continue;  // wrapped
    EXPECT_NEAR(moved.positions[i][0] - cloud.positions[i][0], 0.25, 1e-12);
    EXPECT_NEAR(moved.positions[i][1], cloud.positions[i][1], 1e-12);
  }
  EXPECT_EQ(moved.count(ScattererLabel::blood), cloud.count(ScattererLabel::blood));
}

TEST(Advance, CurvedVesselFollowsArcLength) {
  VesselGraph g;
  VesselSegment s;
  for (int k = 0; k <= 40; ++k) {
    const double a = 0.5 * M_PI * k / 40.0;
    s.centerline.push_back(Vec3(2.0 * std::cos(a), 2.0 * std::sin(a), 5.0));
  }
  s.length = polyline_length(s.centerline);
  s.mean_diameter = 0.1;
  s.flow_speed = 3.0;
  g.segments.push_back(s);

  ScattererCloud cloud;
  cloud.tree = std::make_shared<const VesselGraph>(g);
  for (double arc : {0.0, 0.4, 1.1, 2.0}) {
    VesselTrack tr{0, arc, 0.0, 0.0};
    cloud.positions.push_back(track_position(g, tr));
    cloud.amplitudes.push_back(1.0);
    cloud.velocities.push_back(Vec3::Zero());
    cloud.labels.push_back(ScattererLabel::blood);
    cloud.tracks.push_back(tr);
  }
  const auto moved = advance(cloud, 0.1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 expect = walk(s.centerline, cloud.tracks[i].arc + 0.3);
    EXPECT_NEAR((moved.positions[i] - expect).norm(), 0.0, 1e-12);
  }
}

TEST(Advance, TissueStaysFixed) {
  PhantomSpec spec;
  spec.tree = straight_vessel(2.0, 0.2, 1.0);
  const auto cloud = seed_scatterers(spec);
  const auto moved = advance(cloud, 0.5);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (cloud.labels[i] == ScattererLabel::tissue) EXPECT_EQ(moved.positions[i], cloud.positions[i]);
  EXPECT_THROW(advance(cloud, -1.0), std::invalid_argument);
}

TEST(BolusIntensity, BaselineAtTimeZero) {
  PhantomSpec spec = blood_only(straight_vessel(2.0, 0.3, 1.0), 100.0);
  spec.bolus.noise_sd = 0.0;
  const auto grid = GridSpec::centered(Vec3(1, 0, 5), Vec3::Constant(0.1), {25, 5, 5});
  const auto v = bolus_intensity(spec, 0.0, grid);
  for (double x : v.data()) EXPECT_EQ(x, 0.0);
}

TEST(BolusIntensity, PeakAtConfiguredTime) {
  PhantomSpec spec = blood_only(straight_vessel(2.0, 0.3, 100.0), 100.0);
  spec.bolus.noise_sd = 0.0;
  const auto grid = GridSpec::centered(Vec3(0, 0, 5), Vec3::Constant(0.1), {1, 1, 1});
  const BolusField field(spec, grid);
  ASSERT_NEAR(field.delays()[0], 0.0, 1e-12);
  double best_t = -1.0, best = -1.0;
  for (int n = 0; n <= 2000; ++n) {
    const double t = 0.01 * n;
    const double v = field.intensity_frame(t, n)[0];
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  EXPECT_NEAR(best_t, spec.bolus.peak_time, 1e-9);
  EXPECT_NEAR(best, spec.bolus.peak_intensity, 1e-9);
}

TEST(BolusIntensity, SeriesDelayEqualsPathLengthSum) {
  VesselGraph g = straight_vessel(2.0, 0.3, 4.0);
  VesselSegment child;
  child.centerline = {Vec3(2, 0, 5), Vec3(2, 2, 5)};
  child.length = 2.0;
  child.mean_diameter = 0.3;
  child.flow_speed = 1.0;
  child.parent = 0;
  g.segments.push_back(child);
  g.connections.emplace_back(0, 1);
  PhantomSpec spec = blood_only(g, 100.0);
  const auto grid = GridSpec::centered(Vec3(2, 1.2, 5), Vec3::Constant(0.1), {1, 1, 1});
  const BolusField field(spec, grid);
  EXPECT_NEAR(field.delays()[0], 2.0 / 4.0 + 1.2 / 1.0, 1e-9);
  const auto start = segment_start_delays(g);
  EXPECT_NEAR(start[1], 0.5, 1e-12);
}

TEST(BolusIntensity, UpstreamBrighterBeforePeak) {
  PhantomSpec spec = blood_only(straight_vessel(4.0, 0.3, 1.0), 100.0);
  spec.bolus.noise_sd = 0.0;
  const auto grid = GridSpec::centered(Vec3(2, 0, 5), Vec3(0.1, 0.1, 0.1), {41, 1, 1});
  const auto v = bolus_intensity(spec, 3.0, grid);
  for (int i = 1; i < 41; ++i) EXPECT_GE(v(i - 1, 0, 0), v(i, 0, 0));
}

TEST(Rasterize, TubeVolume) {
  const auto g = straight_vessel(4.0, 0.5, 1.0);
  const auto grid = GridSpec::centered(Vec3(2, 0, 5), Vec3::Constant(0.025), {161, 25, 25});
  const auto m = rasterize_tree(g, grid);
  double n = 0;
  for (auto b : m.data()) n += b;
  const double vol = n * std::pow(0.025, 3);
  EXPECT_NEAR(vol / (M_PI * 0.0625 * 4.0), 1.0, 0.03);
}

TEST(VesselGraphIO, RoundTrip) {
  const auto g = generate_tree(2, TreeParams{});
  std::stringstream ss;
  write_vessel_graph(ss, g);
  const auto back = read_vessel_graph(ss);
  ASSERT_EQ(back.segments.size(), g.segments.size());
  for (std::size_t i = 0; i < g.segments.size(); ++i) {
    EXPECT_EQ(back.segments[i].centerline, g.segments[i].centerline);
    EXPECT_EQ(back.segments[i].length, g.segments[i].length);
  }
}

TEST(HashedNormal, MomentsAndDeterminism) {
  double m = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = hashed_normal(9, 1, i);
    m += x;
    s2 += x * x;
  }
  m /= n;
  s2 = s2 / n - m * m;
  EXPECT_NEAR(m, 0.0, 0.03);
  EXPECT_NEAR(s2, 1.0, 0.04);
  EXPECT_EQ(hashed_normal(9, 1, 5), hashed_normal(9, 1, 5));
}
