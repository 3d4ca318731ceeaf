// SPDX-License-Identifier: Apache-2.0
#include "ufdt/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ufdt::stats;

namespace {

const std::vector<double> kA{4.1, 5.3, 6.0, 5.5, 4.8, 6.2};
const std::vector<double> kB{6.9, 7.4, 5.9, 8.1, 7.7};

double sum_sq_dev(const std::vector<double>& x, double m) {
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s;
}

}  // namespace

TEST(Moments, MeanAndSampleVariance) {
  EXPECT_DOUBLE_EQ(mean({1, 2, 3, 4}), 2.5);
  EXPECT_DOUBLE_EQ(variance({1, 2, 3, 4}), 5.0 / 3.0);
  EXPECT_THROW(mean({}), std::invalid_argument);
  EXPECT_THROW(variance({1.0}), std::invalid_argument);
}

TEST(Anova, IdenticalGroups) {
  const auto r = one_way_anova({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  EXPECT_DOUBLE_EQ(r.f, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
}

TEST(Anova, HandTable) {
  const auto r = one_way_anova({{1, 2, 3}, {11, 12, 13}});
  EXPECT_DOUBLE_EQ(r.ss_between, 150.0);
  EXPECT_DOUBLE_EQ(r.ss_within, 4.0);
  EXPECT_EQ(r.df_between, 1);
  EXPECT_EQ(r.df_within, 4);
  EXPECT_DOUBLE_EQ(r.f, 150.0);
  EXPECT_NEAR(r.p, 0.00025521674944192676, 1e-12);  // F(1, 4) upper tail
}

TEST(Anova, ThreeGroupsAgainstTableFormulas) {
  const std::vector<std::vector<double>> g{{4.1, 5.3, 6.0, 5.5}, {6.9, 7.4, 5.9, 8.1, 7.7}, {5.0, 5.6, 6.4}};
  double grand = 0.0;
  int n = 0;
  for (const auto& x : g)
    for (double v : x) {
      grand += v;
      ++n;
    }
  grand /= n;
  double ssb = 0.0, ssw = 0.0;
  for (const auto& x : g) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= x.size();
    ssb += x.size() * (m - grand) * (m - grand);
    ssw += sum_sq_dev(x, m);
  }
  const auto r = one_way_anova(g);
  EXPECT_NEAR(r.f, (ssb / 2.0) / (ssw / (n - 3)), 1e-12);
  EXPECT_NEAR(r.f, 7.457216568725818, 1e-9);
  EXPECT_NEAR(r.p, 0.012306112567726856, 1e-9);
}

TEST(Anova, GroupOrderIrrelevant) {
  const auto a = one_way_anova({{1, 4, 2}, {5, 7, 6, 9}, {3, 3.5}});
  const auto b = one_way_anova({{3, 3.5}, {1, 4, 2}, {5, 7, 6, 9}});
  EXPECT_DOUBLE_EQ(a.f, b.f);
  EXPECT_DOUBLE_EQ(a.p, b.p);
}

TEST(Anova, Errors) {
  EXPECT_THROW(one_way_anova({{1, 2, 3}}), std::invalid_argument);
  EXPECT_THROW(one_way_anova({{2, 2}, {2, 2}}), std::invalid_argument);
  EXPECT_THROW(one_way_anova({{1, 2}, {}}), std::invalid_argument);
}

TEST(TTest, EqualSamples) {
  const auto r = t_test(kA, kA);
  EXPECT_DOUBLE_EQ(r.t, 0.0);
  EXPECT_DOUBLE_EQ(r.p, 1.0);
  EXPECT_FALSE(r.significant);
}

TEST(TTest, SwapNegatesStatistic) {
  for (auto kind : {TTestKind::welch, TTestKind::pooled}) {
    const auto ab = t_test(kA, kB, kind), ba = t_test(kB, kA, kind);
    EXPECT_DOUBLE_EQ(ab.t, -ba.t);
    EXPECT_DOUBLE_EQ(ab.p, ba.p);
  }
}

TEST(TTest, WelchWorkedExample) {
  const double ma = mean(kA), mb = mean(kB);
  const double va = sum_sq_dev(kA, ma) / 5.0, vb = sum_sq_dev(kB, mb) / 4.0;
  const double se2 = va / 6.0 + vb / 5.0;
  const double df = se2 * se2 / ((va / 6.0) * (va / 6.0) / 5.0 + (vb / 5.0) * (vb / 5.0) / 4.0);
  const auto r = t_test(kA, kB);
  EXPECT_NEAR(r.t, (ma - mb) / std::sqrt(se2), 1e-12);
  EXPECT_NEAR(r.df, df, 1e-12);
  EXPECT_NEAR(r.t, -3.805339386649305, 1e-6);
  EXPECT_NEAR(r.df, 8.307691078192711, 1e-6);
  EXPECT_NEAR(r.p, 0.004846155145490403, 1e-6);
  EXPECT_TRUE(r.significant);
}

TEST(TTest, PooledWorkedExample) {
  const auto r = t_test(kA, kB, TTestKind::pooled);
  EXPECT_NEAR(r.t, -3.8386652219209485, 1e-6);
  EXPECT_DOUBLE_EQ(r.df, 9.0);
  EXPECT_NEAR(r.p, 0.003974639299635351, 1e-6);
}

TEST(TTest, Errors) {
  EXPECT_THROW(t_test({1.0}, kB), std::invalid_argument);
  EXPECT_THROW(t_test({2, 2, 2}, {2, 2}), std::invalid_argument);
}

TEST(Identities, AnovaOfTwoGroupsIsPooledTSquared) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(3 + trial % 5), b(2 + trial % 7);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng) + 0.3 * trial;
    const auto t = t_test(a, b, TTestKind::pooled);
    const auto f = one_way_anova({a, b});
    EXPECT_NEAR(f.f, t.t * t.t, 1e-9 * std::max(1.0, f.f));
    EXPECT_NEAR(f.p, t.p, 1e-9);
    for (double p : {t.p, f.p, t_test(a, b).p}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}
