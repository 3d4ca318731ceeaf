// SPDX-License-Identifier: Apache-2.0
#include "ufdt/vessel_quant.hpp"

#include "ufdt/skeleton.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ufdt;

namespace {

VesselSegment segment(std::vector<Vec3> line, double d) {
  VesselSegment s;
  s.centerline = std::move(line);
  s.length = polyline_length(s.centerline);
  s.mean_diameter = d;
  return s;
}

GridSpec bounding_grid(const VesselGraph& graph, double spacing, double margin) {
  Vec3 lo = Vec3::Constant(1e9), hi = Vec3::Constant(-1e9);
  for (const auto& s : graph.segments)
    for (const auto& p : s.centerline) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  GridSpec g;
  g.spacing = Vec3::Constant(spacing);
  g.origin = lo - Vec3::Constant(margin);
  for (int a = 0; a < 3; ++a) g.dims[a] = static_cast<int>((hi[a] - lo[a] + 2 * margin) / spacing) + 1;
  return g;
}

VesselGraph measure(const VesselGraph& truth, const SegmentOptions& options = {}) {
  const auto mask = rasterize_tree(truth, bounding_grid(truth, 0.05, 0.4));
  return extract_segments(prune_spurs(skeletonize(mask), 2), mask, options);
}

DiameterHistogram histogram_of(std::initializer_list<std::pair<double, double>> bins) {
  DiameterHistogram h;
  for (const auto& [phi, zeta] : bins) {
    const std::size_t k = diameter_bin(phi, h.bin_width);
    if (k >= h.zeta.size()) h.zeta.resize(k + 1, 0.0);
    h.zeta[k] += zeta;
    h.total += zeta;
  }
  return h;
}

}  // namespace

TEST(Threshold, StrictZScoreAgainstNoiseRegion) {
  PowerVolume v(GridSpec::centered(Vec3(0, 0, 0), Vec3::Constant(1.0), {5, 1, 1}), 0.0);
  v(0, 0, 0) = 1.0;
  v(1, 0, 0) = -1.0;
  v(2, 0, 0) = 0.0;  // noise voxels: mean 0, sample sd 1
  v(3, 0, 0) = 3.0;
  v(4, 0, 0) = 3.0 + 1e-9;
  const Box noise{Vec3(-2.5, -1, -1), Vec3(0.5, 1, 1)};
  const auto m = threshold_volume(v, noise);
  EXPECT_EQ(m(3, 0, 0), 0);
  EXPECT_EQ(m(4, 0, 0), 1);
  EXPECT_EQ(m(0, 0, 0), 0);
  EXPECT_EQ(threshold_volume(v, noise, 0.5)(0, 0, 0), 1);
}

TEST(Threshold, HigherThresholdGivesSubset) {
  PowerVolume v(GridSpec::centered(Vec3(0, 0, 0), Vec3::Constant(1.0), {6, 6, 6}), 0.0);
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = std::sin(0.7 * n) * 5.0 + 0.01 * n;
  const Box noise{Vec3(-3, -3, -3), Vec3(3, 3, 0)};
  const auto a = threshold_volume(v, noise, 1.0), b = threshold_volume(v, noise, 2.0);
  std::size_t na = 0, nb = 0;
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (b[n]) EXPECT_EQ(a[n], 1);
    na += a[n];
    nb += b[n];
  }
  EXPECT_GT(na, nb);
}

TEST(Threshold, FlatNoiseRegionRejected) {
  const PowerVolume v(GridSpec::centered(Vec3(0, 0, 0), Vec3::Constant(1.0), {4, 4, 4}), 2.0);
  EXPECT_THROW(threshold_volume(v, Box{Vec3(-2, -2, -2), Vec3(2, 2, 2)}), std::invalid_argument);
}

TEST(ExtractSegments, StraightCylinder) {
  VesselGraph truth;
  truth.segments.push_back(segment({Vec3(0, 0, 5), Vec3(5, 0, 5)}, 0.2));
  const auto g = measure(truth);
  ASSERT_EQ(g.segments.size(), 1u);
  EXPECT_NEAR(g.segments[0].length, 5.0, 0.1);
  EXPECT_NEAR(g.segments[0].mean_diameter, 0.2, 0.05);
}

TEST(ExtractSegments, ObliqueCylinderBothEstimators) {
  VesselGraph truth;
  const Vec3 dir = Vec3(1.0, 0.55, 0.3).normalized();
  truth.segments.push_back(segment({Vec3(0, 0, 5), Vec3(0, 0, 5) + 4.0 * dir}, 0.24));
  const auto g = measure(truth);
  ASSERT_EQ(g.segments.size(), 1u);
  EXPECT_GE(g.segments[0].length, 3.92);
  EXPECT_LE(g.segments[0].length, 4.0 + 0.24);  // rounded caps add up to one radius per end
  EXPECT_NEAR(g.segments[0].mean_diameter, 0.24, 0.02);
  SegmentOptions edt;
  edt.estimator = DiameterEstimator::centerline_edt;
  const auto e = measure(truth, edt);
  ASSERT_EQ(e.segments.size(), 1u);
  EXPECT_NEAR(e.segments[0].mean_diameter, 0.24, 0.05);
}

TEST(ExtractSegments, BifurcationGivesThreeConnectedSegments) {
  VesselGraph truth;
  const Vec3 hub(2, 0, 5);
  truth.segments.push_back(segment({Vec3(0, 0, 5), hub}, 0.3));
  truth.segments.push_back(segment({hub, Vec3(4, 1.2, 5)}, 0.2));
  truth.segments.push_back(segment({hub, Vec3(4, -1.2, 5.3)}, 0.2));
  const auto g = measure(truth);
  ASSERT_EQ(g.segments.size(), 3u);
  EXPECT_EQ(g.connections.size(), 3u);
  double total = 0.0;
  for (const auto& s : g.segments) total += s.length;
  EXPECT_NEAR(total, truth.total_length(), 0.05 * truth.total_length());
}

TEST(ExtractSegments, SubResolutionVesselOverestimated) {
  VesselGraph truth;
  truth.segments.push_back(segment({Vec3(0, 0, 5), Vec3(3, 0.4, 5.2)}, 0.06));
  const auto g = measure(truth);
  ASSERT_GE(g.segments.size(), 1u);
  for (const auto& s : g.segments) EXPECT_GT(s.mean_diameter, 0.06);
}

TEST(ExtractSegments, GridMismatchThrows) {
  const BinaryMask a(GridSpec::centered(Vec3(0, 0, 0), Vec3::Constant(0.05), {4, 4, 4}), 0);
  const BinaryMask b(GridSpec::centered(Vec3(0, 0, 0), Vec3::Constant(0.05), {5, 4, 4}), 0);
  EXPECT_THROW(extract_segments(a, b), std::invalid_argument);
  EXPECT_TRUE(extract_segments(a, a).segments.empty());
}

TEST(ExtractSegments, PhantomTreeLengthAndBins) {
  const auto truth = generate_tree(1, TreeParams{});
  const auto est = measure(truth);
  const auto ht = diameter_histogram(truth), he = diameter_histogram(est);
  EXPECT_NEAR(he.total, ht.total, 0.10 * ht.total);
  double sum = 0.0;
  for (double z : he.zeta) sum += z;
  EXPECT_NEAR(sum, he.total, 1e-9 * he.total);
  int checked = 0;
  for (std::size_t k = 0; k < ht.zeta.size(); ++k) {
    if (ht.zeta[k] < 0.05 * ht.total) continue;
    const double z = k < he.zeta.size() ? he.zeta[k] : 0.0;
    EXPECT_NEAR(z, ht.zeta[k], 0.15 * ht.zeta[k]) << "bin " << k;
    ++checked;
  }
  EXPECT_GE(checked, 4);
}

TEST(DiameterHistogram, TwoSegments) {
  VesselGraph g;
  g.segments.push_back(segment({Vec3(0, 0, 0), Vec3(5, 0, 0)}, 0.10));
  g.segments.push_back(segment({Vec3(0, 1, 0), Vec3(0, 3, 0)}, 0.30));
  const auto h = diameter_histogram(g);
  ASSERT_EQ(h.zeta.size(), 8u);
  EXPECT_DOUBLE_EQ(h.zeta[2], 5.0);
  EXPECT_DOUBLE_EQ(h.zeta[7], 2.0);
  EXPECT_DOUBLE_EQ(h.total, 7.0);
  EXPECT_NEAR(h.center(2), 0.10, 1e-15);
}

TEST(DiameterHistogram, HalfOpenBins) {
  EXPECT_EQ(diameter_bin(0.08, 0.04), 2u);
  EXPECT_EQ(diameter_bin(0.0799, 0.04), 1u);
  EXPECT_EQ(diameter_bin(0.0, 0.04), 0u);
  EXPECT_THROW(diameter_bin(-0.01, 0.04), std::invalid_argument);
  EXPECT_THROW(diameter_bin(0.1, 0.0), std::invalid_argument);
}

TEST(NormalizedDistribution, SingleBinAndSum) {
  const auto one = normalized_distribution(histogram_of({{0.13, 4.0}}));
  EXPECT_DOUBLE_EQ(one[3], 1.0);
  const auto many = normalized_distribution(histogram_of({{0.05, 1.0}, {0.13, 3.0}, {0.3, 4.0}}));
  double s = 0.0;
  for (double v : many) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(many[7], 0.5);
  EXPECT_THROW(normalized_distribution(DiameterHistogram{}), std::invalid_argument);
}

TEST(ScaleNormalizations, Arithmetic) {
  const auto h = histogram_of({{0.1, 6.0}, {0.25, 4.0}});
  const auto r = scale_normalizations(h, TumorRegion::from_volume(8.0));
  EXPECT_DOUBLE_EQ(r.total_over_volume, 1.25);
  EXPECT_DOUBLE_EQ(r.total_over_radius, 5.0);
  EXPECT_DOUBLE_EQ(r.zeta_over_volume[2], 0.75);
  EXPECT_DOUBLE_EQ(r.zeta_over_radius[6], 2.0);
  EXPECT_DOUBLE_EQ(r.small_vessel_share, 0.6);
  EXPECT_THROW(TumorRegion::from_volume(0.0), std::invalid_argument);
}

TEST(ScaleNormalizations, EllipsoidRegion) {
  const Ellipsoid e{Vec3(0, 0, 0), Vec3(1.0, 2.0, 0.5)};
  const auto r = TumorRegion::from_ellipsoid(e, GridSpec::centered(Vec3(0, 0, 0), Vec3::Constant(0.05), {45, 85, 25}));
  EXPECT_NEAR(r.volume, 4.0 / 3.0 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(r.radius, std::cbrt(r.volume), 1e-12);
  std::size_t n = 0;
  for (auto v : r.mask.data()) n += v;
  EXPECT_NEAR(n * 0.05 * 0.05 * 0.05, r.volume, 0.03 * r.volume);
}

TEST(ScaleNormalizations, SelfSimilarFamily) {
  TreeParams p;
  p.min_diameter = 0.2;
  const auto base = generate_tree(2, p);
  const Vec3 center = base.segments.front().centerline.front();
  const double base_volume = 30.0;
  std::vector<ScaleNormalized> out;
  std::vector<DiameterHistogram> hist;
  for (double f : {1.0, 1.5, 2.0}) {
    const auto h = diameter_histogram(measure(scale_tree_lengths(base, center, f)));
    out.push_back(scale_normalizations(h, TumorRegion::from_volume(base_volume * f * f * f)));
    hist.push_back(h);
  }
  for (std::size_t s = 1; s < out.size(); ++s) {
    EXPECT_LT(out[s].total_over_volume, out[s - 1].total_over_volume);
    EXPECT_NEAR(out[s].total_over_radius, out[0].total_over_radius, 0.15 * out[0].total_over_radius);
    for (std::size_t k = 0; k < hist[0].zeta.size(); ++k) {
      if (hist[0].zeta[k] < 0.05 * hist[0].total) continue;
      const double ref = out[0].zeta_over_radius[k];
      const double got = k < out[s].zeta_over_radius.size() ? out[s].zeta_over_radius[k] : 0.0;
      EXPECT_NEAR(got, ref, 0.15 * ref) << "size " << s << " bin " << k;
    }
  }
}

TEST(LengthShare, WholeBinsOnly) {
  const auto h = histogram_of({{0.09, 2.0}, {0.13, 3.0}, {0.17, 5.0}});
  EXPECT_DOUBLE_EQ(length_share(h, 0.08, 0.16), 0.5);
  EXPECT_DOUBLE_EQ(length_share(h, 0.08, 0.15), 0.2);
  EXPECT_DOUBLE_EQ(length_share(h, 0.0, 1.0), 1.0);
}

TEST(LengthShare, CalibratedPresetMatchesReportedShares) {
  double mean = 0.0;
  for (int seed = 1; seed <= 5; ++seed) {
    const auto h = diameter_histogram(generate_tree(seed, TreeParams::calibrated_small_vessel()));
    mean += length_share(h, 0.08, 0.16) / 5.0;
    const double small = length_share(h, 0.0, 0.2);
    EXPECT_GE(small, 0.74) << "seed " << seed;
    EXPECT_LE(small, 0.80) << "seed " << seed;
  }
  EXPECT_NEAR(mean, 0.50, 0.05);
}

TEST(FitExponential, ExactModel) {
  DiameterHistogram h;
  for (int k = 0; k < 10; ++k) {
    h.zeta.push_back(10.0 * std::exp(-20.0 * h.center(k)));
    h.total += h.zeta.back();
  }
  const auto fit = fit_exponential(h);
  EXPECT_NEAR(fit.rate, 20.0, 1e-9);
  EXPECT_NEAR(fit.amplitude, 10.0, 1e-9);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
  EXPECT_FALSE(fit.degenerate);
}

TEST(FitExponential, EmptyBinsSkippedAndDegenerate) {
  auto h = histogram_of({{0.02, 3.0}, {0.1, 3.0}, {0.3, 3.0}});
  const auto flat = fit_exponential(h);
  EXPECT_TRUE(flat.degenerate);
  EXPECT_NEAR(flat.rate, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(flat.r_squared, 1.0);
  EXPECT_THROW(fit_exponential(histogram_of({{0.1, 1.0}, {0.2, 2.0}})), std::invalid_argument);
}

TEST(FitExponential, ExtractedPhantomTreeIsExponential) {
  const auto fit = fit_exponential(diameter_histogram(measure(generate_tree(1, TreeParams{}))));
  EXPECT_GE(fit.r_squared, 0.93);
  EXPECT_GT(fit.rate, 0.0);
}

TEST(HistogramCsv, HeaderAndRows) {
  const auto h = histogram_of({{0.1, 6.0}, {0.25, 4.0}});
  std::ostringstream os;
  write_histogram_csv(os, h, TumorRegion::from_volume(8.0));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "phi_center_mm,zeta_mm,zeta_over_zeta0,zeta_over_volume,zeta_over_radius");
  int rows = 0;
  std::string row2;
  while (std::getline(is, line)) {
    if (rows == 2) row2 = line;
    ++rows;
  }
  EXPECT_EQ(rows, 7);
  EXPECT_EQ(row2, "0.1,6,0.6,0.75,3");
}
