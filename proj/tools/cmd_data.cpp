#include <algorithm>
#include <iostream>
#include <set>

#include <fmt/format.h>

#include "cli.hpp"
#include "padkit/hashing.hpp"
#include "padkit/imgproc.hpp"

namespace padkit::cli {

namespace {

std::string counts_csv(const data::SplitManifest& m) {
  std::string s = "split,bonafide,attack,total,attack_fraction\n";
  for (Split sp : {Split::Train, Split::Val, Split::Test, Split::Unassigned}) {
    const auto c = m.counts(sp);
    if (c.total() == 0 && sp == Split::Unassigned) continue;
    const auto f = c.attack_fraction();
    s += fmt::format("{},{},{},{},{}\n", split_name(sp), c.bonafide, c.attack, c.total(),
                     f ? fmt::format("{:.6f}", *f) : std::string("NA"));
  }
  return s;
}

std::optional<Label> class_from_dir(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  if (name == "bonafide" || name == "real" || name == "live" || name == "genuine") return Label::Bonafide;
  if (name == "attack" || name == "spoof" || name == "fake") return Label::Attack;
  return std::nullopt;
}

// ---- synth --------------------------------------------------------------

struct SynthOpts {
  CommonOptions common;
  std::string domain = "synthA";
  std::size_t subjects = 50, videos = 1, frames = 10, side = 64;
  bool materialize = false;
};

void cmd_synth(const SynthOpts& o, const Registry& reg) {
  const auto r = resolve(o.common);
  auto domain = data::builtin_domain(o.domain);
  domain.side = o.side;
  data::SynthConfig sc;
  sc.subjects = o.subjects;
  sc.videos_per_class = o.videos;
  sc.frames_per_video = o.frames;

  RunRecord rec("synth", reg.args, o.common.out);
  data::SplitManifest m;
  m.seed = r.seed;
  m.config_hash = hash_string(fmt::format("synth {} subjects={} videos={} frames={} side={}", o.domain, o.subjects,
                                          o.videos, o.frames, o.side));
  m.records = data::synth_records(domain, sc);
  for (auto& rc : m.records) {
    if (o.materialize) {
      const auto rel = fs::path("images") / o.domain / label_name(rc.label) / rc.subject / rc.video /
                       (rc.id.substr(rc.video.size() + 1) + ".bmp");
      fs::create_directories(rec.path(rel.parent_path().string()));
      img::write_bmp(rec.path(rel.string()), data::synth_render(domain, rc, r.seed));
      rc.path = rec.path(rel.string()).string();
    } else {
      rc.path = fmt::format("synth:{}@{}", o.domain, r.seed);
    }
  }
  rec.set("seed", r.seed);
  rec.write("records.txt", data::manifest_to_text(m));
  rec.finish();
  std::cout << fmt::format("{} records for {} written to {}\n", m.records.size(), o.domain, rec.path("records.txt").string());
}

// ---- preprocess ---------------------------------------------------------

struct PreOpts {
  CommonOptions common;
  std::string input;
  std::string dataset;
  double threshold = 0.65;
  bool enhance = false;
};

int cmd_preprocess(const PreOpts& o, const Registry& reg) {
  const fs::path root(o.input);
  if (!fs::is_directory(root)) throw DataError("input directory " + o.input + " does not exist");
  img::QualityConfig qc;
  qc.threshold = o.threshold;
  const std::string dataset = o.dataset.empty() ? root.filename().string() : o.dataset;

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  }
  std::sort(files.begin(), files.end());

  RunRecord rec("preprocess", reg.args, o.common.out);
  std::string csv = img::quality_csv_header() + "\n";
  std::string unreadable;
  data::SplitManifest m;
  m.config_hash = hash_string(fmt::format("preprocess threshold={} enhance={}", o.threshold, o.enhance));
  std::size_t passed = 0;
  for (const auto& rel : files) {
    const auto parts = std::vector<fs::path>(rel.begin(), rel.end());
    auto ext = rel.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto label = class_from_dir(parts.front().string());
    if (ext != ".bmp") {
      unreadable += rel.generic_string() + ",unsupported format\n";
      continue;
    }
    if (!label || (parts.size() != 2 && parts.size() != 4)) {
      unreadable += rel.generic_string() + ",not under <class>/ or <class>/<subject>/<video>/\n";
      continue;
    }
    img::ImageU8 image;
    try {
      image = img::read_bmp(root / rel);
    } catch (const DataError& e) {
      unreadable += rel.generic_string() + "," + e.what() + "\n";
      continue;
    }
    const auto q = img::composite_quality(image, qc);
    csv += img::quality_csv_row(rel.generic_string(), q, qc) + "\n";
    if (!img::passes_filter(q, qc)) continue;
    ++passed;
    data::SampleRecord r;
    r.id = dataset + "/" + fs::path(rel).replace_extension().generic_string();
    r.label = *label;
    if (parts.size() == 4) {
      r.subject = dataset + "/" + parts[1].string();
      r.video = r.subject + "/" + parts[2].string();
    }
    r.dataset = dataset;
    r.composite = q.composite;
    if (o.enhance) {
      const auto out_rel = (fs::path("enhanced") / rel).string();
      fs::create_directories(rec.path(out_rel).parent_path());
      img::write_bmp(rec.path(out_rel), img::enhance(image));
      rec.add_file(out_rel);
      r.path = rec.path(out_rel).string();
    } else {
      r.path = (root / rel).string();
    }
    m.records.push_back(std::move(r));
  }
  rec.write("quality.csv", csv);
  rec.write("records.txt", data::manifest_to_text(m));
  rec.write("unreadable.csv", "path,reason\n" + unreadable);
  rec.finish();
  std::cout << fmt::format("{} files, {} passed, {} unreadable\n", files.size(), passed,
                           std::count(unreadable.begin(), unreadable.end(), '\n'));
  if (files.empty()) {
    std::cerr << "no images under " << o.input << '\n';
    return 2;
  }
  return unreadable.empty() ? 0 : 2;
}

// ---- split / combine ----------------------------------------------------

struct SplitOpts {
  CommonOptions common;
  std::string records;
  std::string mode = "group";
  double train_frac = 0.80, val_frac = 0.15;
  bool balance = false;
};

void cmd_split(const SplitOpts& o, const Registry& reg) {
  const auto r = resolve(o.common);
  auto in = data::read_manifest(o.records);
  data::SplitOptions opt{o.train_frac, o.val_frac};
  data::SplitManifest m;
  if (o.mode == "group") m = data::group_split(std::move(in.records), r.seed, opt);
  else if (o.mode == "stratified") m = data::stratified_split(std::move(in.records), r.seed, opt);
  else throw std::invalid_argument("--mode must be group or stratified");
  if (o.balance) m = data::balance_splits(std::move(m));

  RunRecord rec("split", reg.args, o.common.out);
  rec.input("records", o.records);
  rec.set("seed", r.seed);
  // written before validation so a rejected split can be inspected
  rec.write("manifest.txt", data::manifest_to_text(m));
  rec.write("split_counts.csv", counts_csv(m));
  rec.finish();
  data::validate_manifest(m);
  std::cout << counts_csv(m);
}

struct CombineOpts {
  CommonOptions common;
  std::vector<std::string> manifests;
  double train_frac = 0.80, val_frac = 0.15;
};

void cmd_combine(const CombineOpts& o, const Registry& reg) {
  const auto r = resolve(o.common);
  RunRecord rec("combine", reg.args, o.common.out);
  std::vector<data::SplitManifest> sources;
  for (const auto& arg : o.manifests) {
    const auto [name, path] = split_named(arg);
    sources.push_back(data::read_manifest(path));
    rec.input(name, path);
  }
  const auto m = data::combine_datasets(sources, r.seed, {o.train_frac, o.val_frac});
  rec.set("seed", r.seed);
  rec.write("manifest.txt", data::manifest_to_text(m));
  rec.write("split_counts.csv", counts_csv(m));
  rec.finish();
  data::validate_manifest(m);
  std::cout << counts_csv(m);
}

}  // namespace

void register_data_commands(CLI::App& app, Registry& reg) {
  {
    auto o = std::make_shared<SynthOpts>();
    auto* c = app.add_subcommand("synth", "generate a synthetic two-class roster");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--domain", o->domain, "synthA or synthB");
    c->add_option("--subjects", o->subjects, "subjects (each has both classes)");
    c->add_option("--videos", o->videos, "videos per class per subject");
    c->add_option("--frames", o->frames, "frames per video");
    c->add_option("--side", o->side, "rendered side for --materialize");
    c->add_flag("--materialize", o->materialize, "write BMP files instead of generator paths");
    reg.actions.emplace_back(c, [o, &reg] { cmd_synth(*o, reg); });
  }
  {
    auto o = std::make_shared<PreOpts>();
    auto* c = app.add_subcommand("preprocess", "quality-score and filter an image tree");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--input", o->input, "dataset root: <class>/<subject>/<video>/<frame>.bmp")->required();
    c->add_option("--dataset", o->dataset, "dataset name (default: input directory name)");
    c->add_option("--quality-threshold", o->threshold, "minimum composite quality");
    c->add_flag("--enhance", o->enhance, "write enhanced copies of passing images");
    reg.actions.emplace_back(c, [o, &reg] {
      if (const int code = cmd_preprocess(*o, reg); code != 0) throw DataError("some inputs could not be processed");
    });
  }
  {
    auto o = std::make_shared<SplitOpts>();
    auto* c = app.add_subcommand("split", "assign train/val/test without leakage");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--records", o->records, "records file from synth or preprocess")->required();
    c->add_option("--mode", o->mode, "group (subject/video disjoint) or stratified");
    c->add_option("--train-frac", o->train_frac, "train share of all records");
    c->add_option("--val-frac", o->val_frac, "validation share carved out of train");
    c->add_flag("--balance", o->balance, "quality-aware undersampling within each split");
    reg.actions.emplace_back(c, [o, &reg] { cmd_split(*o, reg); });
  }
  {
    auto o = std::make_shared<CombineOpts>();
    auto* c = app.add_subcommand("combine", "pool split datasets into one manifest");
    add_common(*c, o->common, false);
    c->add_option("--out", o->common.out, "output directory")->required();
    c->add_option("--manifest", o->manifests, "name=manifest, at least two")->required();
    c->add_option("--train-frac", o->train_frac, "train share of all records");
    c->add_option("--val-frac", o->val_frac, "validation share carved out of train");
    reg.actions.emplace_back(c, [o, &reg] { cmd_combine(*o, reg); });
  }
}

}  // namespace padkit::cli
