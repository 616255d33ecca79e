#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "padkit/hashing.hpp"
#include "padkit/weights_io.hpp"

#ifndef PADKIT_VERSION
#define PADKIT_VERSION "0.1.0"
#endif

namespace padkit::cli {

std::string version_string() { return PADKIT_VERSION; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool CommonOptions::given(const std::string& name) const {
  const auto it = flags.find(name);
  return it != flags.end() && it->second->count() > 0;
}

void add_common(CLI::App& cmd, CommonOptions& o, bool training) {
  o.flags["config"] = cmd.add_option("--config", o.config, "config file of 'key value' lines");
  o.flags["seed"] = cmd.add_option("--seed", o.seed, "seed for splits, initialisation and shuffling");
  o.flags["threads"] = cmd.add_option("--threads", o.threads, "worker threads (recorded)");
  if (!training) return;
  o.flags["model"] = cmd.add_option("--model", o.model, "livenessnet, attacknet-v1, attacknet-v2.1, attacknet-v2.2");
  o.flags["threshold_rule"] = cmd.add_option("--threshold-rule", o.threshold_rule, "eer or min-acer");
  o.flags["input_size"] = cmd.add_option("--input-size", o.input_size, "square input side, at least 16 (256 matches the published shapes)");
  o.flags["preset"] = cmd.add_option("--preset", o.preset, "published settings for a dataset name");
  o.flags["epochs"] = cmd.add_option("--epochs", o.epochs, "max epochs");
  o.flags["lr"] = cmd.add_option("--lr", o.lr, "learning rate");
  o.flags["batch_size"] = cmd.add_option("--batch-size", o.batch_size, "batch size");
  o.flags["set"] = cmd.add_option("--set", o.sets, "train setting override, key=value");
}

namespace {

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value, rest;
    if (!(ls >> key)) continue;
    if (!(ls >> value) || (ls >> rest)) throw std::invalid_argument(fmt::format("{}:{}: expected 'key value'", path, n));
    out.emplace_back(key, value);
  }
  return out;
}

std::size_t parse_size(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return std::stoull(v);
}

}  // namespace

Resolved resolve(const CommonOptions& o) {
  auto file = o.config.empty() ? std::vector<std::pair<std::string, std::string>>{} : parse_config_file(o.config);
  std::map<std::string, std::string> top;  // non-train keys from the file
  std::vector<std::pair<std::string, std::string>> train_keys;
  static const std::set<std::string> kTop = {"model", "protocol", "threshold_rule", "input_size",
                                             "seed",  "threads",  "preset"};
  for (auto& [k, v] : file) {
    if (kTop.count(k)) top[k] = v;
    else train_keys.emplace_back(k, v);
  }
  auto pick = [&](const std::string& key, const std::string& flag_value) {
    if (o.given(key) || !top.count(key)) return flag_value;
    return top[key];
  };

  Resolved r;
  r.arch = models::parse_architecture(pick("model", o.model));
  r.kind = protocol::parse_kind(pick("protocol", o.protocol));
  const auto rule = pick("threshold_rule", o.threshold_rule);
  if (rule != "eer" && rule != "min-acer") throw std::invalid_argument("threshold rule must be eer or min-acer");
  r.rule = metrics::parse_rule(rule);
  r.input_size = o.given("input_size") || !top.count("input_size") ? o.input_size : parse_size(top["input_size"]);
  if (r.input_size < 16) throw std::invalid_argument("input size must be at least 16");
  r.seed = o.given("seed") || !top.count("seed") ? o.seed : parse_size(top["seed"]);
  r.threads = o.given("threads") || !top.count("threads") ? o.threads : static_cast<int>(parse_size(top["threads"]));
  if (r.threads < 1) throw std::invalid_argument("threads must be >= 1");

  const auto preset = pick("preset", o.preset);
  if (!preset.empty()) r.train = train::preset(r.arch, train::parse_dataset(preset));
  for (const auto& [k, v] : train_keys) r.train.set(k, v);
  if (o.given("epochs")) r.train.max_epochs = o.epochs;
  if (o.given("lr")) r.train.learning_rate = o.lr;
  if (o.given("batch_size")) r.train.batch_size = o.batch_size;
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    r.train.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  r.train.seed = r.seed;
  r.train.validate();
  return r;
}

protocol::ExperimentPlan Resolved::plan() const {
  protocol::ExperimentPlan p;
  p.arch = arch;
  p.input = {input_size, input_size, 3};
  p.train = train;
  p.rule = rule;
  p.seed = seed;
  return p;
}

std::string Resolved::text() const {
  return fmt::format("model {}\nprotocol {}\nthreshold_rule {}\ninput_size {}\n{}", models::arch_flag(arch),
                     protocol::kind_name(kind), metrics::rule_name(rule), input_size, train.to_text());
}

std::pair<std::string, std::string> split_named(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  if (eq == 0 || eq + 1 == arg.size()) throw std::invalid_argument("expected name=path, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

// ---- run record ---------------------------------------------------------

RunRecord::RunRecord(std::string command, std::vector<std::string> args, fs::path out)
    : command_(std::move(command)), args_(std::move(args)), out_(std::move(out)) {
  if (out_.empty()) throw std::invalid_argument("--out is required");
  fs::create_directories(out_);
}

void RunRecord::set_config(const Resolved& r) {
  const auto text = r.text();
  extra_["seed"] = r.seed;
  extra_["threads"] = r.threads;
  extra_["config"] = text;
  extra_["config_hash"] = hash_string(text);
}

void RunRecord::input(const std::string& name, const fs::path& file) {
  inputs_[name] = {{"path", file.string()}, {"hash", hash_file(file)}};
}

void RunRecord::write(const std::string& name, const std::string& content) {
  const auto p = path(name);
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write " + p.string());
  f << content;
  f.close();
  artifacts_[name] = hash_string(content);
}

void RunRecord::write_volatile(const std::string& name, const std::string& content) {
  write(name, content);
  artifacts_.erase(name);
  volatile_.push_back(name);
}

void RunRecord::add_file(const std::string& name) { artifacts_[name] = hash_file(path(name)); }

void RunRecord::finish() const {
  nlohmann::json j = extra_;
  j["tool"] = "padkit";
  j["version"] = version_string();
  j["command"] = command_;
  j["args"] = args_;
  j["cwd"] = fs::current_path().string();
  j["inputs"] = inputs_;
  j["artifacts"] = artifacts_;
  j["volatile"] = volatile_;
  std::ofstream f(path("run.json"), std::ios::binary);
  f << j.dump(2) << '\n';
}

// ---- trained runs --------------------------------------------------------

std::string scores_text(const std::vector<metrics::ScoredSample>& scores) {
  std::ostringstream os;
  metrics::write_scores(os, scores);
  return os.str();
}

namespace {

std::string policy_text(const protocol::TrainedModel& m) {
  return fmt::format("rule {}\ntau {:.17g}\nprovenance {}\nsource {}\nhash {}\n", metrics::rule_name(m.policy.rule),
                     m.policy.tau, split_name(m.policy.provenance), m.policy.source, m.policy_hash);
}

}  // namespace

void write_trained(RunRecord& rec, const std::string& prefix, const protocol::TrainedModel& m,
                   const data::SplitManifest& manifest) {
  rec.write(prefix + "model.txt", models::to_text(m.net->spec()));
  fs::create_directories(rec.path(prefix + "weights.bin").parent_path());
  save_weights(rec.path(prefix + "weights.bin"), m.net->state());
  rec.add_file(prefix + "weights.bin");
  std::ostringstream epochs, timing;
  train::write_epoch_csv(epochs, m.training.log);
  train::write_timing_csv(timing, m.training.log);
  rec.write(prefix + "epochs.csv", epochs.str());
  rec.write_volatile(prefix + "timing.csv", timing.str());
  rec.write(prefix + "val_scores.csv", scores_text(m.val_scores));
  rec.write(prefix + "policy.txt", policy_text(m));
  rec.write(prefix + "train_manifest.txt", data::manifest_to_text(manifest));
  for (const auto& w : m.training.warnings) std::cerr << "warning: " << w << '\n';
}

LoadedRun load_run(const fs::path& dir) {
  const auto record_path = dir / "run.json";
  if (!fs::exists(record_path)) throw DataError(dir.string() + " has no run.json; run 'padkit train' first");
  const auto record = nlohmann::json::parse(read_text(record_path), nullptr, false);
  if (record.is_discarded() || !record.contains("artifacts")) throw DataError(record_path.string() + " is malformed");
  const auto& arts = record["artifacts"];
  for (const char* name : {"model.txt", "weights.bin", "policy.txt", "train_manifest.txt"}) {
    if (!arts.contains(name)) throw DataError(fmt::format("{} has no {}; it is not a training run", dir.string(), name));
    const auto p = dir / name;
    if (!fs::exists(p)) throw DataError(fmt::format("{} is missing; rerun 'padkit train'", p.string()));
    if (hash_file(p) != arts[name].get<std::string>())
      throw DataError(fmt::format("{} no longer matches its recorded hash; rerun 'padkit train'", p.string()));
  }

  LoadedRun r;
  auto spec = models::parse_model_spec(read_text(dir / "model.txt"));
  r.input_size = spec.input.height;
  r.model.net = std::make_unique<Network<float>>(std::move(spec));
  r.model.net->load_state(load_weights<float>(dir / "weights.bin"));
  r.train_manifest = data::parse_manifest(read_text(dir / "train_manifest.txt"));

  std::istringstream in(read_text(dir / "policy.txt"));
  std::string key, value;
  while (in >> key) {
    std::getline(in >> std::ws, value);
    if (key == "rule") r.model.policy.rule = metrics::parse_rule(value);
    else if (key == "tau") r.model.policy.tau = std::stod(value);
    else if (key == "provenance") r.model.policy.provenance = parse_split(value);
    else if (key == "source") r.model.policy.source = value;
    else if (key == "hash") r.model.policy_hash = value;
  }
  r.model.source = r.model.policy.source;
  return r;
}

void check_no_overlap(const data::SplitManifest& trained_on, const data::SplitManifest& target,
                      const std::string& target_name) {
  std::set<std::string> seen;
  for (Split s : {Split::Train, Split::Val}) {
    for (const auto& g : trained_on.roster(s)) seen.insert(g);
  }
  for (const auto& g : target.roster(Split::Test)) {
    if (seen.count(g)) throw ProtocolError("group '" + g + "' of the " + target_name + " test split was used in training");
  }
}

// ---- dispatch -----------------------------------------------------------

int run(const std::vector<std::string>& args) {
  CLI::App app{"padkit: face presentation-attack detection toolkit"};
  app.name("padkit");
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  Registry reg;
  reg.args = args;
  register_data_commands(app, reg);
  register_train_commands(app, reg);
  register_report_commands(app, reg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    for (auto& [cmd, action] : reg.actions) {
      if (cmd->parsed()) action();
    }
    return 0;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol violation: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const train::NonFiniteError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace padkit::cli
