#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "padkit/common.hpp"

// Score convention: s is a bona-fide score, higher means more bona fide, and
// a sample is accepted as bona fide when s >= tau. The positive class of the
// confusion matrix is the attack, so FN are attacks accepted as bona fide.
namespace padkit::metrics {

struct ScoredSample {
  std::string id;
  Label label = Label::Bonafide;
  double score = 0.0;
};

struct ScoreSet {
  std::vector<double> bonafide;
  std::vector<double> attack;

  std::size_t n_bonafide() const noexcept { return bonafide.size(); }
  std::size_t n_attack() const noexcept { return attack.size(); }
  bool empty() const noexcept { return bonafide.empty() && attack.empty(); }

  /// Throws DataError on a non-finite score.
  static ScoreSet from(const std::vector<ScoredSample>& samples);
  void check_finite() const;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;  // attack rejected
  std::uint64_t tn = 0;  // bona fide accepted
  std::uint64_t fp = 0;  // bona fide rejected
  std::uint64_t fn = 0;  // attack accepted

  std::uint64_t n_attack() const noexcept { return tp + fn; }
  std::uint64_t n_bonafide() const noexcept { return tn + fp; }
  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Throws DataError for an empty set or a non-finite tau.
ConfusionCounts confusion_at(const ScoreSet& scores, double tau);

/// Ratios with an empty denominator are nullopt rather than 0.
struct BasicMetrics {
  std::optional<double> accuracy, precision, recall, f1, tnr, fpr, mcc, kappa;
};
BasicMetrics basic_metrics(const ConfusionCounts& c);

struct PadRates {
  std::optional<double> apcer, bpcer, acer;  // nullopt when a class is empty
};
PadRates pad_rates(const ScoreSet& scores, double tau);
PadRates pad_rates(const ConfusionCounts& c);

/// One operating point of the error-rate sweep.
struct RatePoint {
  double tau = 0.0;
  double apcer = 0.0;
  double bpcer = 0.0;
};

/// Thresholds at every midpoint between adjacent distinct scores plus one
/// below and one above all scores, ascending. Needs both classes.
std::vector<RatePoint> rate_curve(const ScoreSet& scores);

struct EerResult {
  double eer = 0.5;
  double tau = 0.0;
  bool degenerate = false;  // every score equal, or a class missing
};

/// Lowest-tau sweep point with APCER == BPCER if one exists, otherwise the
/// linear interpolation across the first sign change of APCER - BPCER.
EerResult eer(const ScoreSet& scores);

/// Mann-Whitney estimate of P(s_bonafide > s_attack), ties counted 1/2.
std::optional<double> roc_auc(const ScoreSet& scores);
/// Average precision for the attack class ranked by 1 - s, step integration
/// over distinct scores.
std::optional<double> pr_auc(const ScoreSet& scores);

enum class ThresholdRule { EerOnDev, MinAcerOnDev, Fixed };
std::string rule_name(ThresholdRule r);  // "eer", "min-acer", "fixed"
ThresholdRule parse_rule(std::string_view text);

/// A resolved decision threshold and where it came from. Once built it is
/// only read, so reusing it on another score set cannot alter it.
struct ThresholdPolicy {
  ThresholdRule rule = ThresholdRule::Fixed;
  double tau = 0.5;
  Split provenance = Split::Unassigned;  // Unassigned for a fixed tau
  std::string source;                     // free-form, e.g. dataset name
  bool operator==(const ThresholdPolicy&) const = default;
};

/// Resolves tau on development scores. Only validation scores may be used;
/// any other provenance throws ProtocolError. Empty dev data throws DataError.
ThresholdPolicy select_threshold(const ScoreSet& dev, ThresholdRule rule, Split provenance,
                                 std::string source = {});
ThresholdPolicy fixed_threshold(double tau);

/// (APCER + BPCER)/2 at the policy's tau. Throws ProtocolError for a
/// non-finite tau.
std::optional<double> hter(const ScoreSet& test, const ThresholdPolicy& policy);

struct MetricReport {
  std::string label;  // row name, e.g. model
  ConfusionCounts counts;
  BasicMetrics basic;
  PadRates rates;
  std::optional<double> roc_auc, pr_auc, eer, hter;
  bool eer_degenerate = false;
  double tau = 0.0;
};

MetricReport compute_report(const ScoreSet& test, const ThresholdPolicy& policy, std::string label = {});

/// Columns: label, accuracy..pr_auc, apcer..kappa, tnr, fpr, tau, tp, tn, fp, fn.
/// Undefined values print as NA.
std::string report_csv_header();
std::string report_csv_row(const MetricReport& r);

/// id,label,score
void write_scores(std::ostream& os, const std::vector<ScoredSample>& samples);
std::vector<ScoredSample> read_scores(std::istream& is);
std::vector<ScoredSample> read_scores(const std::filesystem::path& path);

/// tau,apcer,bpcer
void write_rate_curve(std::ostream& os, const std::vector<RatePoint>& curve);

}  // namespace padkit::metrics
