#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "padkit/protocol.hpp"

namespace padkit::cli {

namespace fs = std::filesystem;

// Options shared by every command that trains or evaluates. Values are
// layered: built-in defaults, then --preset, then the --config file, then
// explicit flags.
struct CommonOptions {
  std::string config;
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out;
  std::string model = "livenessnet";
  std::string protocol = "within";
  std::string threshold_rule = "min-acer";
  std::size_t input_size = 64;
  std::string preset;
  std::size_t epochs = 0;
  double lr = 0.0;
  std::size_t batch_size = 0;
  std::vector<std::string> sets;  // key=value train overrides

  std::map<std::string, CLI::Option*> flags;
  bool given(const std::string& name) const;
};

void add_common(CLI::App& cmd, CommonOptions& o, bool training);

struct Resolved {
  models::Architecture arch = models::Architecture::LivenessNet;
  protocol::Kind kind = protocol::Kind::Within;
  metrics::ThresholdRule rule = metrics::ThresholdRule::MinAcerOnDev;
  std::size_t input_size = 64;
  std::uint64_t seed = 42;
  int threads = 1;
  train::TrainConfig train;

  protocol::ExperimentPlan plan() const;
  /// Canonical "key value" text of everything that affects results.
  std::string text() const;
};

/// Throws std::invalid_argument on bad values (usage error).
Resolved resolve(const CommonOptions& o);

/// "name=path" pairs; a bare path takes its stem as the name.
std::pair<std::string, std::string> split_named(const std::string& arg);

/// Writes artifacts under one output directory and keeps their hashes for
/// run.json. Nothing is written outside that directory.
class RunRecord {
 public:
  RunRecord(std::string command, std::vector<std::string> args, fs::path out);

  const fs::path& out() const { return out_; }
  fs::path path(const std::string& name) const { return out_ / name; }

  void set_config(const Resolved& r);
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }
  void input(const std::string& name, const fs::path& file);

  /// Writes `content` to out/name and records its hash.
  void write(const std::string& name, const std::string& content);
  /// Same, but the file is not expected to be reproducible (wall times).
  void write_volatile(const std::string& name, const std::string& content);
  /// Records a file already written to out/name.
  void add_file(const std::string& name);

  void finish() const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path out_;
  nlohmann::json extra_ = nlohmann::json::object();
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json artifacts_ = nlohmann::json::object();
  std::vector<std::string> volatile_;
};

std::string version_string();
std::string read_text(const fs::path& path);

// ---- trained runs --------------------------------------------------------

/// Writes model.txt, weights.bin, epochs.csv, timing.csv, val_scores.csv,
/// policy.txt and train_manifest.txt under `prefix` (e.g. "" or "synthA/").
void write_trained(RunRecord& rec, const std::string& prefix, const protocol::TrainedModel& m,
                   const data::SplitManifest& manifest);

struct LoadedRun {
  protocol::TrainedModel model;
  data::SplitManifest train_manifest;
  std::size_t input_size = 0;
};

/// Loads a directory written by `train`. Refuses a run whose files no
/// longer match the hashes in its run.json.
LoadedRun load_run(const fs::path& dir);

/// ProtocolError when a target test group was seen in training.
void check_no_overlap(const data::SplitManifest& trained_on, const data::SplitManifest& target,
                      const std::string& target_name);

std::string scores_text(const std::vector<metrics::ScoredSample>& scores);

// ---- commands -----------------------------------------------------------

using Action = std::function<void()>;
struct Registry {
  std::vector<std::string> args;  // as given, for run.json
  std::vector<std::pair<CLI::App*, Action>> actions;
};

void register_data_commands(CLI::App& app, Registry& reg);
void register_train_commands(CLI::App& app, Registry& reg);
void register_report_commands(CLI::App& app, Registry& reg);

/// Parses and runs one command line (without the program name). Returns
/// the process exit code: 0 ok, 1 usage, 2 data error, 3 protocol error.
int run(const std::vector<std::string>& args);

}  // namespace padkit::cli
