#pragma once

// Brute-force definitions of the PAD metrics: every rate comes from counting
// samples at a threshold, AUC from pair counting, EER from an exhaustive
// midpoint sweep. Nothing here calls into the metric library.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "padkit/padmetrics.hpp"
#include "padkit/rng.hpp"

namespace padkit::testing {

using metrics::ScoreSet;

// Scores on a coarse grid so that ties show up often.
inline ScoreSet random_set(Rng& rng, std::size_t max_n = 64) {
  ScoreSet s;
  const std::size_t nb = 1 + rng.below(max_n / 2), na = 1 + rng.below(max_n / 2);
  const bool coarse = rng.bernoulli(0.5);
  auto draw = [&](double shift) {
    const double v = std::clamp(rng.normal(0.5 + shift, 0.25), 0.0, 1.0);
    return coarse ? std::round(v * 10) / 10 : v;
  };
  for (std::size_t i = 0; i < nb; ++i) s.bonafide.push_back(draw(0.1));
  for (std::size_t i = 0; i < na; ++i) s.attack.push_back(draw(-0.1));
  return s;
}

struct BruteCounts {
  double apcer, bpcer;
};

inline BruteCounts brute_rates(const ScoreSet& s, double tau) {
  double accepted_atk = 0, rejected_bona = 0;
  for (double x : s.attack)
    if (x >= tau) accepted_atk += 1;
  for (double x : s.bonafide)
    if (!(x >= tau)) rejected_bona += 1;
  return {accepted_atk / s.attack.size(), rejected_bona / s.bonafide.size()};
}

inline double brute_auc(const ScoreSet& s) {
  double wins = 0;
  for (double b : s.bonafide)
    for (double a : s.attack) wins += b > a ? 1.0 : (b == a ? 0.5 : 0.0);
  return wins / (s.bonafide.size() * s.attack.size());
}

// Average precision written from its definition: for every distinct
// threshold u on r = 1 - s, precision and recall of {r >= u}.
inline double brute_ap(const ScoreSet& s) {
  std::set<double> values(s.bonafide.begin(), s.bonafide.end());
  values.insert(s.attack.begin(), s.attack.end());
  double ap = 0, prev_recall = 0;
  for (double v : values) {  // ascending s == descending 1 - s
    double tp = 0, fp = 0;
    for (double a : s.attack) tp += a <= v;
    for (double b : s.bonafide) fp += b <= v;
    const double recall = tp / s.attack.size();
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
  }
  return ap;
}

// Exhaustive midpoint sweep without reusing rate_curve.
inline std::vector<double> sweep_taus(const ScoreSet& s) {
  std::set<double> values(s.bonafide.begin(), s.bonafide.end());
  values.insert(s.attack.begin(), s.attack.end());
  std::vector<double> v(values.begin(), values.end()), taus{v.front() - 1.0};
  for (std::size_t i = 0; i + 1 < v.size(); ++i) taus.push_back((v[i] + v[i + 1]) / 2);
  taus.push_back(v.back() + 1.0);
  return taus;
}

inline double brute_eer(const ScoreSet& s) {
  const auto taus = sweep_taus(s);
  for (double t : taus) {
    const auto r = brute_rates(s, t);
    if (r.apcer == r.bpcer) return r.apcer;
  }
  for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
    const auto r0 = brute_rates(s, taus[i]), r1 = brute_rates(s, taus[i + 1]);
    const double d0 = r0.apcer - r0.bpcer, d1 = r1.apcer - r1.bpcer;
    if (d0 > 0 && d1 < 0) return r0.bpcer + d0 / (d0 - d1) * (r1.bpcer - r0.bpcer);
  }
  return NAN;
}

}  // namespace padkit::testing
