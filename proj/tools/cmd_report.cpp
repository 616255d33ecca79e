#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "cli.hpp"
#include "padkit/hashing.hpp"

namespace padkit::cli {

namespace {

// ---- stats --------------------------------------------------------------

struct StatsOpts {
  CommonOptions common;
  std::vector<std::string> groups;
  std::string column = "accuracy";
};

void cmd_stats(const StatsOpts& o, const Registry& reg) {
  RunRecord rec("stats", reg.args, o.common.out);
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  for (const auto& arg : o.groups) {
    const auto [name, path] = split_named(arg);
    const auto table = protocol::parse_csv(read_text(path));
    const auto col = table.column(o.column);
    std::vector<double> v;
    for (const auto& row : table.rows) {
      if (row[col] == "NA") continue;
      try {
        v.push_back(std::stod(row[col]));
      } catch (const std::exception&) {
        throw DataError(fmt::format("{}: non-numeric {} '{}'", path, o.column, row[col]));
      }
    }
    rec.input(name, path);
    names.push_back(name);
    values.push_back(std::move(v));
  }
  std::ostringstream os;
  try {
    protocol::write_stat_report(os, protocol::compare_groups(names, values));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  rec.write("stats.csv", os.str());
  rec.finish();
  std::cout << os.str();
}

// ---- report -------------------------------------------------------------

struct ReportOpts {
  CommonOptions common;
  std::vector<std::string> scores;
  std::vector<std::string> dev;
  double tau = 0.5;
  std::string rule = "min-acer";
  std::string baseline, combined;
};

void cmd_report(const ReportOpts& o, const Registry& reg) {
  RunRecord rec("report", reg.args, o.common.out);
  std::map<std::string, std::string> dev;
  for (const auto& arg : o.dev) dev.insert(split_named(arg));
  const auto rule = metrics::parse_rule(o.rule);
  if (!o.scores.empty()) {
    std::string rows = metrics::report_csv_header() + "\n";
    for (const auto& arg : o.scores) {
      const auto [name, path] = split_named(arg);
      const auto test = metrics::ScoreSet::from(metrics::read_scores(fs::path(path)));
      rec.input(name, path);
      metrics::ThresholdPolicy policy = metrics::fixed_threshold(o.tau);
      if (const auto it = dev.find(name); it != dev.end()) {
        if (rule == metrics::ThresholdRule::Fixed) throw std::invalid_argument("--dev needs --threshold-rule eer or min-acer");
        policy = metrics::select_threshold(metrics::ScoreSet::from(metrics::read_scores(fs::path(it->second))), rule,
                                           Split::Val, name);
        rec.input(name + ".dev", it->second);
      }
      rows += metrics::report_csv_row(metrics::compute_report(test, policy, name)) + "\n";
      if (!test.bonafide.empty() && !test.attack.empty()) {
        std::ostringstream curve;
        metrics::write_rate_curve(curve, metrics::rate_curve(test));
        rec.write("curve_" + name + ".csv", curve.str());
      }
    }
    rec.write("report.csv", rows);
    std::cout << rows;
  }
  if (!o.baseline.empty() || !o.combined.empty()) {
    if (o.baseline.empty() || o.combined.empty()) throw std::invalid_argument("--baseline and --combined go together");
    rec.input("baseline", o.baseline);
    rec.input("combined", o.combined);
    const auto table =
        protocol::improvement_csv(protocol::parse_csv(read_text(o.baseline)), protocol::parse_csv(read_text(o.combined)));
    rec.write("improvement.csv", table);
    std::cout << table;
  }
  if (o.scores.empty() && o.baseline.empty()) throw std::invalid_argument("nothing to report: give --scores or --baseline");
  rec.finish();
}

// ---- models -------------------------------------------------------------

struct ModelsOpts {
  CommonOptions common;
  std::size_t input_size = 256;
};

void cmd_models(const ModelsOpts& o, const Registry& reg) {
  std::string csv = "model,input,trainable,non_trainable,total,reference,delta\n";
  std::string md;
  for (auto arch : models::kAllArchitectures) {
    const models::InputShape in{o.input_size, o.input_size, 3};
    const auto count = models::count_params(models::build_model(arch, in));
    const auto ref = models::reference_param_count(arch);
    csv += fmt::format("{},{},{},{},{},{},{}\n", models::arch_flag(arch), o.input_size, count.trainable,
                       count.non_trainable, count.total(), ref,
                       o.input_size == 256 ? fmt::format("{}", static_cast<std::int64_t>(count.total() - ref)) : "NA");
    if (arch != models::Architecture::LivenessNet) md += models::reconstruction_markdown(models::reconstruct_to_count(arch, ref)) + "\n";
  }
  std::cout << csv;
  if (o.common.out.empty()) return;
  RunRecord rec("models", reg.args, o.common.out);
  rec.write("models.csv", csv);
  rec.write("reconstruction.md", md);
  rec.finish();
}

// ---- verify -------------------------------------------------------------

struct VerifyOpts {
  CommonOptions common;
  std::string run;
};

void cmd_verify(const VerifyOpts& o, const Registry&) {
  const fs::path dir(o.run);
  const auto record = nlohmann::json::parse(read_text(dir / "run.json"), nullptr, false);
  if (record.is_discarded() || !record.contains("args")) throw DataError((dir / "run.json").string() + " is malformed");

  bool ok = true;
  for (const auto& [name, hash] : record["artifacts"].items()) {
    const auto p = dir / name;
    if (!fs::exists(p)) {
      std::cout << "missing " << name << '\n';
      ok = false;
    } else if (hash_file(p) != hash.get<std::string>()) {
      std::cout << "changed " << name << '\n';
      ok = false;
    }
  }
  for (const auto& [name, input] : record["inputs"].items()) {
    const fs::path p = fs::path(record["cwd"].get<std::string>()) / input["path"].get<std::string>();
    if (!fs::exists(p) || hash_file(p) != input["hash"].get<std::string>()) {
      std::cout << "stale input " << name << " (" << p.string() << ")\n";
      ok = false;
    }
  }
  if (!ok) throw DataError("recorded artifacts or inputs changed; nothing re-derived");

  // re-run the recorded command into our own output directory
  auto args = record["args"].get<std::vector<std::string>>();
  const auto redo = fs::absolute(o.common.out);
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) args[i + 1] = redo.string();
    else if (args[i].rfind("--out=", 0) == 0) args[i] = "--out=" + redo.string();
  }
  const auto here = fs::current_path();
  fs::current_path(record["cwd"].get<std::string>());
  const int code = run(args);
  fs::current_path(here);
  if (code != 0) throw DataError(fmt::format("re-running the recorded command failed with exit code {}", code));

  std::size_t same = 0, differ = 0;
  for (const auto& [name, hash] : record["artifacts"].items()) {
    const auto p = redo / name;
    const bool match = fs::exists(p) && hash_file(p) == hash.get<std::string>();
    std::cout << (match ? "same   " : "DIFFERS") << ' ' << name << '\n';
    (match ? same : differ)++;
  }
  std::cout << fmt::format("{} identical, {} different\n", same, differ);
  if (differ) throw DataError("re-derived artifacts differ from the recorded ones");
}

}  // namespace

void register_report_commands(CLI::App& app, Registry& reg) {
  {
    auto o = std::make_shared<StatsOpts>();
    auto* c = app.add_subcommand("stats", "ANOVA and pairwise Welch tests across groups of runs");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--group", o->groups, "name=csv, one per group")->required();
    c->add_option("--column", o->column, "metric column to compare");
    reg.actions.emplace_back(c, [o, &reg] { cmd_stats(*o, reg); });
  }
  {
    auto o = std::make_shared<ReportOpts>();
    auto* c = app.add_subcommand("report", "metric tables from score files");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--scores", o->scores, "name=scores.csv (id,label,score)");
    c->add_option("--dev", o->dev, "name=dev scores; tau is selected on them");
    c->add_option("--tau", o->tau, "fixed tau for sets without --dev");
    c->add_option("--threshold-rule", o->rule, "eer or min-acer, used with --dev");
    c->add_option("--baseline", o->baseline, "evaluation CSV before combined training");
    c->add_option("--combined", o->combined, "evaluation CSV after combined training");
    reg.actions.emplace_back(c, [o, &reg] { cmd_report(*o, reg); });
  }
  {
    auto o = std::make_shared<ModelsOpts>();
    auto* c = app.add_subcommand("models", "parameter counts of every architecture");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory (optional)");
    c->add_option("--input-size", o->input_size, "square input side");
    reg.actions.emplace_back(c, [o, &reg] { cmd_models(*o, reg); });
  }
  {
    auto o = std::make_shared<VerifyOpts>();
    auto* c = app.add_subcommand("verify", "re-derive a run from its run.json and diff hashes");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "where the re-run writes")->required();
    c->add_option("--run", o->run, "directory holding run.json")->required();
    reg.actions.emplace_back(c, [o, &reg] { cmd_verify(*o, reg); });
  }
}

}  // namespace padkit::cli
