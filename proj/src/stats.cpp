// SPDX-License-Identifier: Apache-2.0
#include "ufdt/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ufdt::stats {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("variance: need at least 2 samples");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("one_way_anova: need at least 2 groups");
  std::size_t n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("one_way_anova: empty group");
    n += g.size();
    for (double v : g) grand += v;
  }
  grand /= static_cast<double>(n);
  AnovaResult r;
  for (const auto& g : groups) {
    const double m = mean(g);
    r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) r.ss_within += (v - m) * (v - m);
  }
  r.df_between = static_cast<int>(groups.size()) - 1;
  r.df_within = static_cast<int>(n - groups.size());
  if (r.df_within < 1) throw std::invalid_argument("one_way_anova: not enough samples");
  if (r.ss_within == 0.0) {
    if (r.ss_between == 0.0)
      throw std::invalid_argument("one_way_anova: zero within-group variance with equal means");
    r.f = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.f = (r.ss_between / r.df_between) / (r.ss_within / r.df_within);
  const boost::math::fisher_f dist(r.df_between, r.df_within);
  r.p = std::clamp(boost::math::cdf(boost::math::complement(dist, r.f)), 0.0, 1.0);
  return r;
}

TTestResult t_test(const std::vector<double>& a, const std::vector<double>& b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("t_test: need at least 2 samples per group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double va = variance(a), vb = variance(b);
  TTestResult r;
  double se2 = 0.0;
  if (kind == TTestKind::pooled) {
    r.df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    se2 = sp2 * (1.0 / na + 1.0 / nb);
  } else {
    const double qa = va / na, qb = vb / nb;
    se2 = qa + qb;
    r.df = se2 > 0.0 ? se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0)) : na + nb - 2.0;
  }
  if (se2 == 0.0) {
    if (ma == mb) throw std::invalid_argument("t_test: both groups constant and equal");
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.significant = true;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  const boost::math::students_t dist(r.df);
  r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))), 0.0, 1.0);
  r.significant = r.p < 0.05;
  return r;
}

}  // namespace ufdt::stats
