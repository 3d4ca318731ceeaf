// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace ufdt::stats {

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  int df_between = 0;
  int df_within = 0;
};

/// Classical one-way ANOVA over >= 2 groups.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

enum class TTestKind { welch, pooled };

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  bool significant = false;  // p < 0.05
};

/// Two-sided two-sample t-test of a against b.
TTestResult t_test(const std::vector<double>& a, const std::vector<double>& b,
                   TTestKind kind = TTestKind::welch);

double mean(const std::vector<double>& x);
/// Sample variance (n - 1 denominator).
double variance(const std::vector<double>& x);

}  // namespace ufdt::stats
