#include <iostream>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <fmt/format.h>

#include "cli.hpp"

namespace padkit::cli {

namespace {

void apply_threads(const Resolved& r) { Eigen::setNbThreads(r.threads); }

std::string model_flag(const protocol::TrainedModel& m) { return models::arch_flag(m.net->spec().arch); }

std::string default_name(const data::SplitManifest& m, const std::string& path) {
  std::set<std::string> names;
  for (const auto& r : m.records) names.insert(r.dataset);
  return names.size() == 1 && !names.begin()->empty() ? *names.begin() : fs::path(path).stem().string();
}

std::string curve_text(const std::vector<metrics::ScoredSample>& scores) {
  std::ostringstream os;
  const auto s = metrics::ScoreSet::from(scores);
  if (s.bonafide.empty() || s.attack.empty()) return "tau,apcer,bpcer\n";
  metrics::write_rate_curve(os, metrics::rate_curve(s));
  return os.str();
}

void print_training(const std::string& name, const protocol::TrainedModel& m) {
  for (const auto& e : m.training.log) {
    std::cout << fmt::format("[{}] epoch {:2d} loss {:.4f} acc {:.4f} val_loss {:.4f} val_acc {:.4f} lr {:.1e}{}\n", name,
                             e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc, e.lr, e.best ? " *" : "");
  }
  std::cout << fmt::format("[{}] best epoch {} in {:.1f}s, tau {:.6f} ({} on val)\n", name, m.training.best_epoch,
                           m.training.seconds, m.policy.tau, metrics::rule_name(m.policy.rule));
}

// ---- train --------------------------------------------------------------

struct TrainOpts {
  CommonOptions common;
  std::string manifest;
  std::string name;
  bool dry_run = false;
};

void cmd_train(const TrainOpts& o, const Registry& reg) {
  const auto r = resolve(o.common);
  const auto m = data::read_manifest(o.manifest);
  data::validate_manifest(m);
  const auto name = o.name.empty() ? default_name(m, o.manifest) : o.name;
  if (o.dry_run) {
    std::cout << r.text() << fmt::format("manifest {} ({} records, name {})\nconfig ok, nothing written\n", o.manifest,
                                         m.records.size(), name);
    return;
  }
  if (o.common.out.empty()) throw std::invalid_argument("--out is required unless --dry-run");
  apply_threads(r);
  RunRecord rec("train", reg.args, o.common.out);
  rec.set_config(r);
  rec.input("manifest", o.manifest);
  const auto model = protocol::train_on(r.plan(), m, protocol::make_loader(r.input_size, r.seed), name);
  print_training(name, model);
  write_trained(rec, "", model, m);
  rec.write("config.txt", r.text());
  rec.finish();
}

// ---- eval / crosseval ---------------------------------------------------

struct EvalOpts {
  CommonOptions common;
  std::string run;
  std::vector<std::string> targets;
  std::string dataset;
};

void cmd_eval(const EvalOpts& o, const Registry& reg, bool cross) {
  auto loaded = load_run(o.run);
  RunRecord rec(cross ? "crosseval" : "eval", reg.args, o.common.out);
  rec.input("weights", fs::path(o.run) / "weights.bin");
  const auto load = protocol::make_loader(loaded.input_size, o.common.seed);

  std::vector<std::pair<std::string, data::SplitManifest>> targets;
  for (const auto& arg : o.targets) {
    auto [name, path] = split_named(arg);
    auto m = data::read_manifest(path);
    if (!o.dataset.empty()) name = o.dataset;
    check_no_overlap(loaded.train_manifest, m, name);
    rec.input(name, path);
    targets.emplace_back(name, std::move(m));
  }
  if (!cross && targets.size() != 1) throw std::invalid_argument("eval takes one --manifest; use crosseval for several");

  protocol::CrossResult all;
  std::string rows = protocol::evaluation_csv_header() + "\n";
  for (const auto& [name, m] : targets) {
    auto e = protocol::evaluate_on(loaded.model, m, load, name, o.dataset);
    const std::string stem = cross ? "scores_" + name : "scores";
    rec.write(stem + ".csv", scores_text(e.scores));
    rec.write((cross ? "curve_" + name : std::string("curve")) + ".csv", curve_text(e.scores));
    rows += protocol::evaluation_csv_row(model_flag(loaded.model), e) + "\n";
    std::cout << fmt::format("{} -> {}: {}\n", loaded.model.source, name, metrics::report_csv_row(e.report));
    all.targets.push_back(std::move(e));
  }
  rec.write(cross ? "cross.csv" : "report.csv", rows);
  if (cross) {
    all.model.source = loaded.model.source;
    rec.write("cross_summary.csv", protocol::cross_summary_header() + "\n" +
                                       protocol::cross_summary_row(model_flag(loaded.model), all) + "\n");
  }
  rec.finish();
}

// ---- run: a whole protocol in one go --------------------------------------

struct RunOpts {
  CommonOptions common;
  std::vector<std::string> manifests;
  std::string baseline;
};

void cmd_run(const RunOpts& o, const Registry& reg) {
  const auto r = resolve(o.common);
  apply_threads(r);
  std::vector<protocol::NamedManifest> sets;
  for (const auto& arg : o.manifests) {
    const auto [name, path] = split_named(arg);
    auto m = data::read_manifest(path);
    data::validate_manifest(m);
    sets.push_back({name, std::move(m)});
  }
  RunRecord rec("run", reg.args, o.common.out);
  rec.set_config(r);
  for (std::size_t i = 0; i < sets.size(); ++i) rec.input(sets[i].name, split_named(o.manifests[i]).second);
  const auto plan = r.plan();
  const auto load = protocol::make_loader(r.input_size, r.seed);
  const auto model = models::arch_flag(r.arch);
  std::string rows = protocol::evaluation_csv_header() + "\n";

  switch (r.kind) {
    case protocol::Kind::Within:
      for (const auto& s : sets) {
        const auto res = protocol::run_within(plan, s.manifest, load, s.name);
        print_training(s.name, res.model);
        write_trained(rec, s.name + "/", res.model, s.manifest);
        rec.write(s.name + "/test_scores.csv", scores_text(res.eval.scores));
        rows += protocol::evaluation_csv_row(model, res.eval) + "\n";
      }
      rec.write("within.csv", rows);
      break;
    case protocol::Kind::CrossZeroShot: {
      std::string summary = protocol::cross_summary_header() + "\n";
      for (const auto& s : sets) {
        const auto res = protocol::run_cross_zero_shot(plan, s, sets, load);
        print_training(s.name, res.model);
        write_trained(rec, s.name + "/", res.model, s.manifest);
        for (const auto& e : res.targets) {
          rec.write(s.name + "/scores_" + e.test_on + ".csv", scores_text(e.scores));
          rows += protocol::evaluation_csv_row(model, e) + "\n";
        }
        summary += protocol::cross_summary_row(model, res) + "\n";
      }
      rec.write("cross.csv", rows);
      rec.write("cross_summary.csv", summary);
      break;
    }
    case protocol::Kind::Combined: {
      std::vector<data::SplitManifest> sources;
      for (const auto& s : sets) sources.push_back(s.manifest);
      const auto combined = data::combine_datasets(sources, r.seed);
      rec.write("combined/manifest.txt", data::manifest_to_text(combined));
      const auto res = protocol::run_combined(plan, combined, load);
      print_training("combined", res.model);
      write_trained(rec, "combined/", res.model, combined);
      rec.write("combined/scores_pooled.csv", scores_text(res.pooled.scores));
      rows += protocol::evaluation_csv_row(model, res.pooled) + "\n";
      for (const auto& e : res.per_source) {
        rec.write("combined/scores_" + e.test_on + ".csv", scores_text(e.scores));
        rows += protocol::evaluation_csv_row(model, e) + "\n";
      }
      rec.write("combined.csv", rows);
      if (!o.baseline.empty()) {
        rec.input("baseline", o.baseline);
        rec.write("improvement.csv",
                  protocol::improvement_csv(protocol::parse_csv(read_text(o.baseline)), protocol::parse_csv(rows)));
      }
      break;
    }
  }
  rec.finish();
  std::cout << rows;
}

// ---- pca ----------------------------------------------------------------

struct PcaOpts {
  CommonOptions common;
  std::string run;
  std::string manifest;
  std::string split = "test";
};

void cmd_pca(const PcaOpts& o, const Registry& reg) {
  auto loaded = load_run(o.run);
  const auto [name, path] = split_named(o.manifest);
  const auto m = data::read_manifest(path);
  const auto split = parse_split(o.split);
  const auto set = protocol::load_split(m, split, protocol::make_loader(loaded.input_size, o.common.seed));

  std::vector<std::vector<double>> features;
  for (std::size_t start = 0; start < set.size(); start += 64) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(set.size(), start + 64); ++i) idx.push_back(i);
    const auto emb = loaded.model.net->embed(train::to_tensor(set.images, idx));
    const std::size_t d = emb.shape()[1];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = emb[i * d + j];
      features.push_back(std::move(row));
    }
  }
  const auto res = protocol::pca_separability(features, set.labels);

  RunRecord rec("pca", reg.args, o.common.out);
  rec.input(name, path);
  std::string proj = "id,label,pc1,pc2\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    proj += fmt::format("{},{},{:.6f},{:.6f}\n", set.ids[i], label_name(set.labels[i]), res.projection[i][0],
                        res.projection[i][1]);
  }
  rec.write("pca.csv", proj);
  const auto summary = fmt::format("model,data,split,n,features,var_pc1,var_pc2,separability\n{},{},{},{},{},{:.6f},{:.6f},{:.6f}\n",
                                   model_flag(loaded.model), name, o.split, set.size(), features.front().size(),
                                   res.component_variance[0], res.component_variance[1], res.separability);
  rec.write("pca_summary.csv", summary);
  rec.finish();
  std::cout << summary;
}

}  // namespace

void register_train_commands(CLI::App& app, Registry& reg) {
  {
    auto o = std::make_shared<TrainOpts>();
    auto* c = app.add_subcommand("train", "train one model on a split manifest");
    add_common(*c, o->common, true);
    c->add_option("--out", o->common.out, "output directory");
    c->add_option("--manifest", o->manifest, "split manifest")->required();
    c->add_option("--name", o->name, "dataset name recorded with the threshold");
    c->add_flag("--dry-run", o->dry_run, "validate config and manifest, write nothing");
    reg.actions.emplace_back(c, [o, &reg] { cmd_train(*o, reg); });
  }
  for (bool cross : {false, true}) {
    auto o = std::make_shared<EvalOpts>();
    auto* c = cross ? app.add_subcommand("crosseval", "apply a trained model to other datasets at its own tau")
                    : app.add_subcommand("eval", "score the test split of a manifest at the trained tau");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--run", o->run, "directory written by train")->required();
    c->add_option(cross ? "--target" : "--manifest", o->targets, "name=manifest")->required();
    if (!cross) c->add_option("--dataset", o->dataset, "restrict to one dataset of a combined manifest");
    reg.actions.emplace_back(c, [o, &reg, cross] { cmd_eval(*o, reg, cross); });
  }
  {
    auto o = std::make_shared<RunOpts>();
    auto* c = app.add_subcommand("run", "train and evaluate a whole protocol");
    add_common(*c, o->common, true);
    o->common.flags["protocol"] = c->add_option("--protocol", o->common.protocol, "within, cross or combined");
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--manifest", o->manifests, "name=manifest, one per dataset")->required();
    c->add_option("--baseline", o->baseline, "evaluation CSV to compare combined results against");
    reg.actions.emplace_back(c, [o, &reg] { cmd_run(*o, reg); });
  }
  {
    auto o = std::make_shared<PcaOpts>();
    auto* c = app.add_subcommand("pca", "project learned features onto two principal components");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--run", o->run, "directory written by train")->required();
    c->add_option("--manifest", o->manifest, "name=manifest")->required();
    c->add_option("--split", o->split, "train, val or test");
    reg.actions.emplace_back(c, [o, &reg] { cmd_pca(*o, reg); });
  }
}

}  // namespace padkit::cli
