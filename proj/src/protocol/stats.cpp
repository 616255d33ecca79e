#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "padkit/protocol.hpp"

namespace padkit::protocol {

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// sample variance (n - 1)
double var_of(const std::vector<double>& v, double m) {
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / (v.size() - 1);
}

}  // namespace

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("anova: need at least two groups");
  std::size_t n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw std::invalid_argument("anova: every group needs at least two values");
    for (double x : g) {
      if (!std::isfinite(x)) throw std::invalid_argument("anova: non-finite value");
      grand += x;
    }
    n += g.size();
  }
  grand /= static_cast<double>(n);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean_of(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) ssw += (x - m) * (x - m);
  }
  AnovaResult r;
  r.df_between = groups.size() - 1;
  r.df_within = n - groups.size();
  const double msb = ssb / static_cast<double>(r.df_between);
  const double msw = ssw / static_cast<double>(r.df_within);
  if (msw == 0.0) {
    if (msb == 0.0) {
      r.degenerate = true;
      return r;
    }
    r.infinite_f = true;
    r.f = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.f = msb / msw;
  const boost::math::fisher_f dist(static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  r.p = boost::math::cdf(boost::math::complement(dist, r.f));
  return r;
}

PairwiseTest welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch t: each group needs at least two values");
  PairwiseTest t;
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = var_of(a, ma) / a.size(), vb = var_of(b, mb) / b.size();
  t.mean_diff = ma - mb;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    t.zero_variance = true;
    t.df = static_cast<double>(a.size() + b.size() - 2);
    if (t.mean_diff == 0.0) return t;  // t 0, p 1
    t.t = std::copysign(std::numeric_limits<double>::infinity(), t.mean_diff);
    t.p = t.p_adjusted = 0.0;
    return t;
  }
  t.t = t.mean_diff / std::sqrt(se2);
  t.df = se2 * se2 / (va * va / (a.size() - 1) + vb * vb / (b.size() - 1));
  const boost::math::students_t dist(t.df);
  t.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t.t))));
  t.p_adjusted = t.p;
  return t;
}

StatReport compare_groups(const std::vector<std::string>& names, const std::vector<std::vector<double>>& groups) {
  if (names.size() != groups.size()) throw std::invalid_argument("compare_groups: one name per group");
  StatReport r;
  r.anova = anova_oneway(groups);
  const std::size_t k = groups.size();
  const double m = static_cast<double>(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      auto t = welch_t(groups[i], groups[j]);
      t.a = names[i];
      t.b = names[j];
      t.p_adjusted = std::min(1.0, t.p * m);
      r.pairs.push_back(std::move(t));
    }
  }
  return r;
}

void write_stat_report(std::ostream& os, const StatReport& r) {
  os << "test,a,b,statistic,df,p,p_adjusted,mean_diff,flag\n";
  const auto& a = r.anova;
  fmt::print(os, "anova,,,{:.6f},{}/{},{:.6f},,,{}\n", a.f, a.df_between, a.df_within, a.p,
             a.infinite_f ? "infinite_f" : (a.degenerate ? "no_variance" : ""));
  for (const auto& p : r.pairs) {
    fmt::print(os, "{},{},{},{:.6f},{:.3f},{:.6f},{:.6f},{:.6f},{}\n", r.test, p.a, p.b, p.t, p.df, p.p, p.p_adjusted,
               p.mean_diff, p.zero_variance ? "zero_variance" : "");
  }
  fmt::print(os, "# adjustment {}\n", r.adjustment);
}

}  // namespace padkit::protocol
