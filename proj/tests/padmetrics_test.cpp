#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "padkit/padmetrics.hpp"
#include "padkit/rng.hpp"
#include "support/metric_oracles.hpp"

using namespace padkit;
using namespace padkit::metrics;
using namespace padkit::testing;

namespace {

// Published rows are rounded to three decimals.
constexpr double kRounding = 5.01e-4;

ScoreSet make(std::vector<double> bona, std::vector<double> atk) { return {std::move(bona), std::move(atk)}; }

struct PublishedRow {
  const char* model;
  std::uint64_t tp, tn, fp, fn;
  double acc, prec, rec, f1, apcer, bpcer, acer, mcc, kappa;
};

// Confusion counts with the matching accuracy/precision/recall/F1 and the
// APCER/BPCER/ACER/MCC/kappa reported for the combined-dataset models.
const PublishedRow kPublishedRows[] = {
    {"LivenessNet", 1139, 1302, 11, 168, 0.932, 0.990, 0.871, 0.927, 0.129, 0.008, 0.068, 0.870, 0.863},
    {"AttackNetV1", 1291, 1293, 20, 16, 0.986, 0.985, 0.988, 0.986, 0.012, 0.015, 0.014, 0.973, 0.973},
    {"AttackNetV2_1", 1186, 1313, 0, 121, 0.954, 1.000, 0.907, 0.951, 0.093, 0.000, 0.046, 0.912, 0.908},
    {"AttackNetV2_2", 1303, 1313, 0, 4, 0.998, 1.000, 0.997, 0.998, 0.003, 0.000, 0.002, 0.997, 0.997},
};

}  // namespace

// ---- confusion ----------------------------------------------------------

TEST(Confusion, PerfectSeparation) {
  const auto c = confusion_at(make({0.9, 0.8}, {0.1, 0.2}), 0.5);
  EXPECT_EQ(c, (ConfusionCounts{2, 2, 0, 0}));
}

TEST(Confusion, ThresholdBelowEverythingAcceptsAll) {
  const auto c = confusion_at(make({0.9, 0.8, 0.3}, {0.1, 0.2}), -1.0);
  EXPECT_EQ(c.tp, 0u);
  EXPECT_EQ(c.fn, 2u);
  EXPECT_EQ(c.tn, 3u);
  EXPECT_EQ(c.fp, 0u);
}

TEST(Confusion, ScoreEqualToThresholdIsBonafide) {
  const auto c = confusion_at(make({0.5}, {0.5}), 0.5);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_EQ(c.fn, 1u);
}

TEST(Confusion, MatchesPerSampleClassifier) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_set(rng, 20);
    const double tau = rng.uniform(-0.1, 1.1);
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (double a : s.attack) (a >= tau ? fn : tp)++;
    for (double b : s.bonafide) (b >= tau ? tn : fp)++;
    ASSERT_EQ(confusion_at(s, tau), (ConfusionCounts{tp, tn, fp, fn}));
  }
}

TEST(Confusion, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(confusion_at(ScoreSet{}, 0.5), DataError);
  EXPECT_THROW(confusion_at(make({0.1}, {0.2}), NAN), DataError);
  EXPECT_THROW(ScoreSet::from({{"a", Label::Attack, INFINITY}}), DataError);
}

// ---- basic metrics ------------------------------------------------------

TEST(BasicMetrics, PublishedConfusionRowsReproduceReportedMetrics) {
  for (const auto& row : kPublishedRows) {
    SCOPED_TRACE(row.model);
    const ConfusionCounts c{row.tp, row.tn, row.fp, row.fn};
    EXPECT_EQ(c.total(), 2620u);
    const auto m = basic_metrics(c);
    EXPECT_NEAR(*m.accuracy, row.acc, kRounding);
    EXPECT_NEAR(*m.precision, row.prec, kRounding);
    EXPECT_NEAR(*m.recall, row.rec, kRounding);
    EXPECT_NEAR(*m.f1, row.f1, kRounding);
    EXPECT_NEAR(*m.mcc, row.mcc, kRounding);
    EXPECT_NEAR(*m.kappa, row.kappa, kRounding);
    const auto r = pad_rates(c);
    EXPECT_NEAR(*r.apcer, row.apcer, kRounding);
    EXPECT_NEAR(*r.bpcer, row.bpcer, kRounding);
    EXPECT_NEAR(*r.acer, row.acer, kRounding);
  }
}

TEST(BasicMetrics, BestRowHandValues) {
  const auto m = basic_metrics({1303, 1313, 0, 4});
  EXPECT_NEAR(*m.accuracy, 2616.0 / 2620.0, 1e-15);
  EXPECT_EQ(*m.precision, 1.0);
  EXPECT_NEAR(*m.recall, 1303.0 / 1307.0, 1e-15);
  EXPECT_NEAR(*m.mcc, 0.99695, 5e-6);
  EXPECT_NEAR(*m.kappa, 0.99695, 5e-6);
}

TEST(BasicMetrics, PerfectAndChance) {
  const auto p = basic_metrics({10, 7, 0, 0});
  EXPECT_EQ(*p.accuracy, 1.0);
  EXPECT_EQ(*p.mcc, 1.0);
  EXPECT_EQ(*p.kappa, 1.0);
  const auto c = basic_metrics({25, 25, 25, 25});
  EXPECT_EQ(*c.accuracy, 0.5);
  EXPECT_EQ(*c.mcc, 0.0);
  EXPECT_EQ(*c.kappa, 0.0);
}

TEST(BasicMetrics, EmptyDenominatorsAreFlagged) {
  // everything accepted as bona fide: no predicted attacks
  const auto m = basic_metrics({0, 5, 0, 5});
  EXPECT_FALSE(m.precision.has_value());
  EXPECT_EQ(*m.recall, 0.0);
  EXPECT_FALSE(m.f1.has_value());
  EXPECT_FALSE(m.mcc.has_value());
  EXPECT_EQ(*m.kappa, 0.0);
  const auto z = basic_metrics({});
  EXPECT_FALSE(z.accuracy.has_value());
  EXPECT_FALSE(z.kappa.has_value());
  const auto single = pad_rates(ConfusionCounts{3, 0, 0, 1});
  EXPECT_EQ(*single.apcer, 0.25);
  EXPECT_FALSE(single.bpcer.has_value());
  EXPECT_FALSE(single.acer.has_value());
}

// ---- error rates --------------------------------------------------------

TEST(PadRates, PerfectSeparationIsZero) {
  const auto r = pad_rates(make({0.9, 0.7}, {0.2, 0.3}), 0.5);
  EXPECT_EQ(*r.apcer, 0.0);
  EXPECT_EQ(*r.bpcer, 0.0);
  EXPECT_EQ(*r.acer, 0.0);
}

TEST(PadRates, SweepMatchesBruteForce) {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_set(rng, 30);
    for (double tau : sweep_taus(s)) {
      const auto r = pad_rates(s, tau);
      const auto b = brute_rates(s, tau);
      ASSERT_EQ(*r.apcer, b.apcer);
      ASSERT_EQ(*r.bpcer, b.bpcer);
      ASSERT_EQ(*r.acer, (b.apcer + b.bpcer) / 2);
      ASSERT_EQ(*hter(s, fixed_threshold(tau)), *r.acer);
    }
  }
}

TEST(PadRates, MonotoneInThreshold) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto curve = rate_curve(random_set(rng));
    for (std::size_t i = 1; i < curve.size(); ++i) {
      ASSERT_LT(curve[i - 1].tau, curve[i].tau);
      ASSERT_GE(curve[i - 1].apcer, curve[i].apcer);
      ASSERT_LE(curve[i - 1].bpcer, curve[i].bpcer);
    }
    EXPECT_EQ(curve.front().apcer, 1.0);
    EXPECT_EQ(curve.front().bpcer, 0.0);
    EXPECT_EQ(curve.back().apcer, 0.0);
    EXPECT_EQ(curve.back().bpcer, 1.0);
  }
}

// ---- EER ----------------------------------------------------------------

TEST(Eer, SeparatedIsZero) {
  const auto e = eer(make({0.9, 0.8}, {0.1, 0.3}));
  EXPECT_EQ(e.eer, 0.0);
  EXPECT_NEAR(e.tau, 0.55, 1e-15);
  EXPECT_FALSE(e.degenerate);
}

TEST(Eer, IdenticalDistributionsGiveHalf) {
  EXPECT_NEAR(eer(make({0.2, 0.4, 0.6, 0.8}, {0.2, 0.4, 0.6, 0.8})).eer, 0.5, 1e-15);
}

TEST(Eer, HandBuiltInterleavedSet) {
  // sorted: .1a .3a .4b .6b .7a .9b; at tau .5 one of three attacks is
  // accepted and one of three bona fide rejected
  const auto e = eer(make({0.9, 0.6, 0.4}, {0.7, 0.3, 0.1}));
  EXPECT_NEAR(e.eer, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(e.tau, 0.5, 1e-15);
}

TEST(Eer, ConstantScoresAreDegenerate) {
  const auto e = eer(make({0.4, 0.4}, {0.4}));
  EXPECT_TRUE(e.degenerate);
  EXPECT_EQ(e.eer, 0.5);
  EXPECT_TRUE(eer(make({0.4}, {})).degenerate);
}

TEST(Eer, MatchesBruteForceSweep) {
  Rng rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_set(rng);
    ASSERT_NEAR(eer(s).eer, brute_eer(s), 1e-12);
  }
}

TEST(Eer, InvariantUnderPositiveAffineRescale) {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(rng);
    ScoreSet t = s;
    for (auto& v : t.bonafide) v = 3.0 * v - 2.0;
    for (auto& v : t.attack) v = 3.0 * v - 2.0;
    ASSERT_NEAR(eer(s).eer, eer(t).eer, 1e-12);
  }
}

// ---- AUC ----------------------------------------------------------------

TEST(Auc, HandCases) {
  EXPECT_EQ(*roc_auc(make({0.9, 0.7}, {0.3, 0.1})), 1.0);
  EXPECT_EQ(*roc_auc(make({0.8, 0.4}, {0.6, 0.2})), 0.75);
  EXPECT_EQ(*roc_auc(make({0.3, 0.5, 0.7}, {0.3, 0.5, 0.7})), 0.5);
  EXPECT_EQ(*pr_auc(make({0.9, 0.7}, {0.3, 0.1})), 1.0);
  EXPECT_FALSE(roc_auc(make({0.5}, {})).has_value());
  EXPECT_FALSE(pr_auc(make({}, {0.5})).has_value());
}

TEST(Auc, MatchesPairwiseAndDefinitionOracles) {
  Rng rng(16);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_set(rng);
    ASSERT_NEAR(*roc_auc(s), brute_auc(s), 1e-12);
    ASSERT_NEAR(*pr_auc(s), brute_ap(s), 1e-12);
  }
}

TEST(Auc, RocInvariantUnderMonotoneTransform) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_set(rng);
    ScoreSet t = s;
    for (auto& v : t.bonafide) v = std::exp(4 * v);
    for (auto& v : t.attack) v = std::exp(4 * v);
    ASSERT_NEAR(*roc_auc(s), *roc_auc(t), 1e-12);
  }
}

// ---- thresholds ---------------------------------------------------------

TEST(Threshold, SeparableDevPicksGapMidpoint) {
  const auto dev = make({0.7, 0.9, 0.8}, {0.1, 0.3, 0.2});
  const auto p = select_threshold(dev, ThresholdRule::MinAcerOnDev, Split::Val, "dev");
  EXPECT_NEAR(p.tau, 0.5, 1e-15);
  EXPECT_EQ(*pad_rates(dev, p.tau).acer, 0.0);
  EXPECT_EQ(p.provenance, Split::Val);
  EXPECT_EQ(p.source, "dev");
}

TEST(Threshold, MinAcerMatchesExhaustiveSweep) {
  const auto dev = make({0.9, 0.55, 0.35}, {0.6, 0.4, 0.1});
  double best = INFINITY, best_tau = 0;
  for (double tau : sweep_taus(dev)) {
    const auto r = brute_rates(dev, tau);
    if ((r.apcer + r.bpcer) / 2 < best) best = (r.apcer + r.bpcer) / 2, best_tau = tau;
  }
  const auto p = select_threshold(dev, ThresholdRule::MinAcerOnDev, Split::Val);
  EXPECT_EQ(p.tau, best_tau);
  EXPECT_EQ(*pad_rates(dev, p.tau).acer, best);

  Rng rng(18);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_set(rng);
    double lo = INFINITY, lo_tau = 0;
    for (double tau : sweep_taus(s)) {
      const auto r = brute_rates(s, tau);
      if ((r.apcer + r.bpcer) / 2 < lo) lo = (r.apcer + r.bpcer) / 2, lo_tau = tau;
    }
    ASSERT_EQ(select_threshold(s, ThresholdRule::MinAcerOnDev, Split::Val).tau, lo_tau);
  }
}

TEST(Threshold, EerRuleUsesEerCrossing) {
  const auto dev = make({0.9, 0.6, 0.4}, {0.7, 0.3, 0.1});
  EXPECT_NEAR(select_threshold(dev, ThresholdRule::EerOnDev, Split::Val).tau, 0.5, 1e-15);
}

TEST(Threshold, OnlyValidationScoresMaySelect) {
  const auto dev = make({0.9}, {0.1});
  EXPECT_THROW(select_threshold(dev, ThresholdRule::EerOnDev, Split::Test), ProtocolError);
  EXPECT_THROW(select_threshold(dev, ThresholdRule::MinAcerOnDev, Split::Train), ProtocolError);
  EXPECT_THROW(select_threshold(ScoreSet{}, ThresholdRule::EerOnDev, Split::Val), DataError);
  EXPECT_THROW(select_threshold(make({0.9}, {}), ThresholdRule::EerOnDev, Split::Val), DataError);
}

TEST(Threshold, ReuseLeavesPolicyUntouched) {
  const auto p = select_threshold(make({0.9, 0.6}, {0.2, 0.5}), ThresholdRule::MinAcerOnDev, Split::Val, "src");
  const auto copy = p;
  compute_report(make({0.1, 0.2, 0.3}, {0.9}), p, "other");
  hter(make({0.5}, {0.4}), p);
  EXPECT_EQ(p, copy);
}

TEST(Hter, Boundaries) {
  const auto dev = make({0.8, 0.9}, {0.1, 0.2});
  const auto p = select_threshold(dev, ThresholdRule::MinAcerOnDev, Split::Val);
  EXPECT_EQ(*hter(dev, p), 0.0);
  // tau below every test score: all attacks accepted, no bona fide rejected
  EXPECT_EQ(*hter(make({0.6, 0.7}, {0.3, 0.4}), fixed_threshold(0.0)), 0.5);
  ThresholdPolicy broken;
  broken.tau = NAN;
  EXPECT_THROW(hter(dev, broken), ProtocolError);
}

// ---- report and files ---------------------------------------------------

TEST(Report, AcerEqualsHterAndRatesInRange) {
  Rng rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_set(rng);
    const auto r = compute_report(s, fixed_threshold(rng.uniform(0, 1)));
    ASSERT_EQ(*r.rates.acer, *r.hter);
    ASSERT_EQ(*r.rates.acer, (*r.rates.apcer + *r.rates.bpcer) / 2);
    for (auto v : {r.basic.accuracy, r.rates.apcer, r.rates.bpcer, r.roc_auc, r.pr_auc, r.eer}) {
      ASSERT_GE(*v, 0.0);
      ASSERT_LE(*v, 1.0);
    }
  }
}

TEST(Report, CsvRowOrderAndNa) {
  const auto r = compute_report(make({0.9, 0.8}, {0.1, 0.2}), fixed_threshold(0.5), "toy");
  EXPECT_EQ(report_csv_header(),
            "label,accuracy,precision,recall,f1,roc_auc,pr_auc,apcer,bpcer,acer,eer,hter,mcc,kappa,tnr,fpr,tau,tp,tn,"
            "fp,fn");
  EXPECT_EQ(report_csv_row(r),
            "toy,1.000000,1.000000,1.000000,1.000000,1.000000,1.000000,0.000000,0.000000,0.000000,0.000000,0.000000,"
            "1.000000,1.000000,1.000000,0.000000,0.500000,2,2,0,0");
  const auto one = compute_report(make({0.9, 0.8}, {}), fixed_threshold(0.5), "bona-only");
  EXPECT_NE(report_csv_row(one).find(",NA,"), std::string::npos);
  EXPECT_TRUE(one.eer_degenerate);
}

TEST(ScoreFile, RoundTripAndErrors) {
  const std::vector<ScoredSample> in{{"a-1", Label::Bonafide, 0.875}, {"b-2", Label::Attack, 0.0123456789}};
  std::stringstream ss;
  write_scores(ss, in);
  const auto out = read_scores(ss);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].id, "a-1");
  EXPECT_EQ(out[1].label, Label::Attack);
  EXPECT_EQ(out[0].score, 0.875);
  EXPECT_NEAR(out[1].score, 0.0123456789, 1e-12);

  auto bad = [](const std::string& text) {
    std::istringstream is(text);
    EXPECT_THROW(read_scores(is), DataError) << text;
  };
  bad("id,score\n");
  bad("id,label,score\nx,maybe,0.5\n");
  bad("id,label,score\nx,attack,abc\n");
  bad("id,label,score\nx,attack,0.5,extra\n");
  bad("id,label,score\nx,attack,nan\n");
}

TEST(ScoreFile, RuleNames) {
  for (auto r : {ThresholdRule::EerOnDev, ThresholdRule::MinAcerOnDev, ThresholdRule::Fixed}) {
    EXPECT_EQ(parse_rule(rule_name(r)), r);
  }
  EXPECT_THROW(parse_rule("youden"), std::invalid_argument);
}
