#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "padkit/datakit.hpp"
#include "padkit/models.hpp"
#include "padkit/network.hpp"
#include "padkit/padmetrics.hpp"
#include "padkit/trainer.hpp"

namespace padkit::protocol {

// ---- statistics ---------------------------------------------------------

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  bool infinite_f = false;  // no within-group spread but unequal means
  bool degenerate = false;  // no spread at all; reported as F 0, p 1
};

/// One-way ANOVA with F = MS_between / MS_within. Needs at least two groups,
/// each with at least two values; throws std::invalid_argument otherwise.
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

struct PairwiseTest {
  std::string a, b;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double p_adjusted = 1.0;
  double mean_diff = 0.0;  // mean(a) - mean(b)
  bool zero_variance = false;
};

/// Welch's unequal-variance t test, two-sided. Unadjusted p.
PairwiseTest welch_t(const std::vector<double>& a, const std::vector<double>& b);

struct StatReport {
  AnovaResult anova;
  std::vector<PairwiseTest> pairs;  // (0,1), (0,2), ..., (1,2), ...
  std::string test = "welch";
  std::string adjustment = "bonferroni";
};

/// ANOVA plus every pairwise Welch test with Bonferroni-adjusted p.
StatReport compare_groups(const std::vector<std::string>& names, const std::vector<std::vector<double>>& groups);

/// anova line then one line per pair.
void write_stat_report(std::ostream& os, const StatReport& r);

// ---- PCA ----------------------------------------------------------------

struct PcaResult {
  std::vector<std::array<double, 2>> projection;  // one row per sample
  std::array<double, 2> component_variance{};
  double separability = 0.0;
};

/// Projects onto the two leading principal components and scores class
/// separation as |mean_b - mean_a| / sqrt((s2_a + s2_b) / 2) in the plane,
/// s2 being the total (trace) within-class variance. Eigenvalues below
/// 1e-12 of the largest are treated as zero. Needs two samples per class.
PcaResult pca_separability(const std::vector<std::vector<double>>& features, const std::vector<Label>& labels);

// ---- experiments --------------------------------------------------------

enum class Kind { Within, CrossZeroShot, Combined };
std::string kind_name(Kind k);  // "within", "cross", "combined"
Kind parse_kind(std::string_view text);

/// Resolves a manifest record to pixels. "synth:<domain>" paths are rendered
/// from the built-in domains with `render_seed`, "synth:<domain>@<seed>"
/// with the given seed; anything else is read as a BMP file. Images are
/// resized to the requested side when needed.
using Loader = std::function<img::ImageU8(const data::SampleRecord&)>;
Loader make_loader(std::size_t side, std::uint64_t render_seed);

struct ExperimentPlan {
  models::Architecture arch = models::Architecture::LivenessNet;
  models::InputShape input{64, 64, 3};
  train::TrainConfig train;
  metrics::ThresholdRule rule = metrics::ThresholdRule::MinAcerOnDev;
  std::uint64_t seed = 42;  // network initialisation
};

/// Records of one split in manifest order, optionally restricted to one
/// dataset, with pixels. Throws DataError when nothing matches.
train::ImageSet load_split(const data::SplitManifest& m, Split split, const Loader& load,
                           std::string_view dataset = {});

struct TrainedModel {
  std::unique_ptr<Network<float>> net;
  train::TrainResult training;
  metrics::ThresholdPolicy policy;  // resolved on the source validation split
  std::string policy_hash;
  std::vector<metrics::ScoredSample> val_scores;
  std::string source;
};

/// Validates the manifest (ProtocolError before any training), trains on
/// its train split and resolves tau on its val split.
TrainedModel train_on(const ExperimentPlan& plan, const data::SplitManifest& manifest, const Loader& load,
                      std::string source);

struct Evaluation {
  std::string train_on;
  std::string test_on;
  metrics::MetricReport report;
  std::vector<metrics::ScoredSample> scores;
};

/// Scores the test split of `target` (or one dataset inside it) at the
/// model's fixed tau. Nothing here can move the threshold.
Evaluation evaluate_on(const TrainedModel& model, const data::SplitManifest& target, const Loader& load,
                       std::string target_name, std::string_view dataset = {});

struct WithinResult {
  TrainedModel model;
  Evaluation eval;
};
WithinResult run_within(const ExperimentPlan& plan, const data::SplitManifest& manifest, const Loader& load,
                        std::string name);

struct NamedManifest {
  std::string name;
  data::SplitManifest manifest;
};

struct CrossResult {
  TrainedModel model;
  std::vector<Evaluation> targets;  // in the order given
};
/// Trains on the source once and applies the same policy to every target's
/// test split. A target test group that also sits in the source train split
/// is a ProtocolError.
CrossResult run_cross_zero_shot(const ExperimentPlan& plan, const NamedManifest& source,
                                const std::vector<NamedManifest>& targets, const Loader& load);

struct CombinedResult {
  TrainedModel model;
  Evaluation pooled;
  std::vector<Evaluation> per_source;  // one per dataset, sorted by name
};
CombinedResult run_combined(const ExperimentPlan& plan, const data::SplitManifest& combined, const Loader& load);

// ---- artifacts ----------------------------------------------------------

/// model,train,test followed by the metric columns of report_csv_header.
std::string evaluation_csv_header();
std::string evaluation_csv_row(const std::string& model, const Evaluation& e);

/// Cross summary per source: mean accuracy/ACER/EER over targets other than
/// the source, plus best and worst transfer by accuracy.
/// Columns: train,model,avg_accuracy,avg_acer,avg_eer,best_transfer,best_accuracy,worst_transfer,worst_accuracy
std::string cross_summary_header();
std::string cross_summary_row(const std::string& model, const CrossResult& r);

/// Plain comma-separated table without quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(std::string_view name) const;  // throws DataError
};
CsvTable parse_csv(const std::string& text);

/// Rows keyed by (model, test) present in both tables, with
/// combined - baseline for accuracy, acer and eer, in combined-table order.
/// When the baseline has several rows for a key, the one whose train column
/// equals its test column is used, else the first.
/// Columns: model,test,baseline_accuracy,combined_accuracy,delta_accuracy,delta_acer,delta_eer
std::string improvement_csv(const CsvTable& baseline, const CsvTable& combined);

}  // namespace padkit::protocol
