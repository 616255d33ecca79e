#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "padkit/hashing.hpp"
#include "padkit/protocol.hpp"

namespace padkit::protocol {

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::Within: return "within";
    case Kind::CrossZeroShot: return "cross";
    case Kind::Combined: return "combined";
  }
  return "?";
}

Kind parse_kind(std::string_view text) {
  if (text == "within") return Kind::Within;
  if (text == "cross") return Kind::CrossZeroShot;
  if (text == "combined") return Kind::Combined;
  throw DataError("unknown protocol '" + std::string(text) + "' (within, cross, combined)");
}

Loader make_loader(std::size_t side, std::uint64_t render_seed) {
  return [side, render_seed](const data::SampleRecord& r) {
    img::ImageU8 image;
    constexpr std::string_view kSynth = "synth:";
    if (r.path.rfind(kSynth, 0) == 0) {
      std::string_view name = std::string_view(r.path).substr(kSynth.size());
      std::uint64_t seed = render_seed;
      if (const auto at = name.find('@'); at != std::string_view::npos) {
        const std::string digits(name.substr(at + 1));
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
          throw DataError("bad render seed in '" + r.path + "'");
        seed = std::stoull(digits);
        name = name.substr(0, at);
      }
      auto domain = data::builtin_domain(name);
      domain.side = side;
      image = data::synth_render(domain, r, seed);
    } else {
      image = img::read_bmp(r.path);
    }
    if (image.height != side || image.width != side) image = img::resize_bilinear(image, side, side);
    return image;
  };
}

train::ImageSet load_split(const data::SplitManifest& m, Split split, const Loader& load, std::string_view dataset) {
  train::ImageSet set;
  for (const auto* r : m.in(split)) {
    if (!dataset.empty() && r->dataset != dataset) continue;
    set.add(load(*r), r->label, r->id);
  }
  if (set.size() == 0) {
    throw DataError(fmt::format("no {} records{}", split_name(split),
                                dataset.empty() ? std::string() : " for dataset '" + std::string(dataset) + "'"));
  }
  return set;
}

namespace {

std::vector<metrics::ScoredSample> score_set(Network<float>& net, const train::ImageSet& set) {
  const auto s = train::predict_scores(net, set);
  std::vector<metrics::ScoredSample> out(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) out[i] = {set.ids[i], set.labels[i], s[i]};
  return out;
}

std::string policy_fingerprint(const metrics::ThresholdPolicy& p) {
  return hash_string(fmt::format("{}|{:.17g}|{}|{}", metrics::rule_name(p.rule), p.tau, split_name(p.provenance),
                                 p.source));
}

}  // namespace

TrainedModel train_on(const ExperimentPlan& plan, const data::SplitManifest& manifest, const Loader& load,
                      std::string source) {
  data::validate_manifest(manifest);
  const auto train_set = load_split(manifest, Split::Train, load);
  const auto val_set = load_split(manifest, Split::Val, load);

  TrainedModel m;
  m.source = std::move(source);
  m.net = std::make_unique<Network<float>>(models::build_model(plan.arch, plan.input, plan.train.hyperparams()),
                                           plan.seed);
  m.training = train::train_loop(*m.net, train_set, val_set, plan.train);
  m.val_scores = score_set(*m.net, val_set);
  if (plan.rule == metrics::ThresholdRule::Fixed) {
    m.policy = metrics::fixed_threshold(0.5);
    m.policy.source = m.source;
  } else {
    m.policy = metrics::select_threshold(metrics::ScoreSet::from(m.val_scores), plan.rule, Split::Val, m.source);
  }
  m.policy_hash = policy_fingerprint(m.policy);
  return m;
}

Evaluation evaluate_on(const TrainedModel& model, const data::SplitManifest& target, const Loader& load,
                       std::string target_name, std::string_view dataset) {
  if (policy_fingerprint(model.policy) != model.policy_hash) throw ProtocolError("threshold changed after selection");
  const auto test_set = load_split(target, Split::Test, load, dataset);
  Evaluation e;
  e.train_on = model.source;
  e.test_on = std::move(target_name);
  e.scores = score_set(*model.net, test_set);
  e.report = metrics::compute_report(metrics::ScoreSet::from(e.scores), model.policy, e.test_on);
  return e;
}

WithinResult run_within(const ExperimentPlan& plan, const data::SplitManifest& manifest, const Loader& load,
                        std::string name) {
  WithinResult r;
  r.model = train_on(plan, manifest, load, name);
  r.eval = evaluate_on(r.model, manifest, load, name);
  return r;
}

CrossResult run_cross_zero_shot(const ExperimentPlan& plan, const NamedManifest& source,
                                const std::vector<NamedManifest>& targets, const Loader& load) {
  // every target is checked before the (expensive) training starts
  const auto train_roster = source.manifest.roster(Split::Train);
  const std::set<std::string> seen(train_roster.begin(), train_roster.end());
  for (const auto& t : targets) {
    for (const auto& g : t.manifest.roster(Split::Test)) {
      if (seen.count(g)) {
        throw ProtocolError("group '" + g + "' of " + t.name + " test is in the " + source.name + " train split");
      }
    }
  }
  CrossResult r;
  r.model = train_on(plan, source.manifest, load, source.name);
  for (const auto& t : targets) r.targets.push_back(evaluate_on(r.model, t.manifest, load, t.name));
  return r;
}

CombinedResult run_combined(const ExperimentPlan& plan, const data::SplitManifest& combined, const Loader& load) {
  CombinedResult r;
  r.model = train_on(plan, combined, load, "combined");
  r.pooled = evaluate_on(r.model, combined, load, "combined");
  std::set<std::string> names;
  for (const auto* rec : combined.in(Split::Test)) names.insert(rec->dataset);
  for (const auto& n : names) r.per_source.push_back(evaluate_on(r.model, combined, load, n, n));
  return r;
}

// ---- artifacts ----------------------------------------------------------

std::string evaluation_csv_header() {
  const auto h = metrics::report_csv_header();
  return "model,train,test," + h.substr(h.find(',') + 1);
}

std::string evaluation_csv_row(const std::string& model, const Evaluation& e) {
  const auto row = metrics::report_csv_row(e.report);
  return fmt::format("{},{},{},{}", model, e.train_on, e.test_on, row.substr(row.find(',') + 1));
}

std::string cross_summary_header() {
  return "train,model,avg_accuracy,avg_acer,avg_eer,best_transfer,best_accuracy,worst_transfer,worst_accuracy";
}

namespace {
std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "NA"; }
}  // namespace

std::string cross_summary_row(const std::string& model, const CrossResult& r) {
  double acc = 0, acer = 0, eer_sum = 0;
  std::size_t n = 0, n_acer = 0, n_eer = 0;
  const Evaluation* best = nullptr;
  const Evaluation* worst = nullptr;
  for (const auto& e : r.targets) {
    if (e.test_on == r.model.source || !e.report.basic.accuracy) continue;
    const double a = *e.report.basic.accuracy;
    acc += a;
    ++n;
    if (e.report.rates.acer) acer += *e.report.rates.acer, ++n_acer;
    if (e.report.eer) eer_sum += *e.report.eer, ++n_eer;
    if (!best || a > *best->report.basic.accuracy) best = &e;
    if (!worst || a < *worst->report.basic.accuracy) worst = &e;
  }
  auto mean = [](double s, std::size_t k) { return k ? std::optional<double>(s / k) : std::nullopt; };
  return fmt::format("{},{},{},{},{},{},{},{},{}", r.model.source, model, opt(mean(acc, n)), opt(mean(acer, n_acer)),
                     opt(mean(eer_sum, n_eer)), best ? best->test_on : "NA",
                     best ? opt(best->report.basic.accuracy) : "NA", worst ? worst->test_on : "NA",
                     worst ? opt(worst->report.basic.accuracy) : "NA");
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DataError("missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
      const auto pos = s.find(',', start);
      out.push_back(s.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(fmt::format("csv line {}: {} cells, header has {}", lineno, cells.size(), t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw DataError("csv: no header");
  return t;
}

std::string improvement_csv(const CsvTable& baseline, const CsvTable& combined) {
  struct Cols {
    std::size_t model, test, acc, acer, eer;
  };
  auto cols = [](const CsvTable& t) {
    return Cols{t.column("model"), t.column("test"), t.column("accuracy"), t.column("acer"), t.column("eer")};
  };
  const Cols b = cols(baseline), c = cols(combined);
  // a cross table holds several rows per (model, test); the within-domain
  // row (train == test) wins, otherwise the first one
  std::size_t train_col = baseline.header.size();
  for (std::size_t i = 0; i < baseline.header.size(); ++i)
    if (baseline.header[i] == "train") train_col = i;
  auto within = [&](const std::vector<std::string>& row) {
    return train_col < row.size() && row[train_col] == row[b.test];
  };
  std::map<std::pair<std::string, std::string>, const std::vector<std::string>*> base;
  for (const auto& row : baseline.rows) {
    auto [it, fresh] = base.emplace(std::make_pair(row[b.model], row[b.test]), &row);
    if (!fresh && within(row) && !within(*it->second)) it->second = &row;
  }

  auto delta = [](const std::string& x, const std::string& y) -> std::string {
    if (x == "NA" || y == "NA") return "NA";
    try {
      return fmt::format("{:.6f}", std::stod(y) - std::stod(x));
    } catch (const std::exception&) {
      throw DataError("non-numeric metric '" + x + "' or '" + y + "'");
    }
  };
  std::string out = "model,test,baseline_accuracy,combined_accuracy,delta_accuracy,delta_acer,delta_eer\n";
  for (const auto& row : combined.rows) {
    const auto it = base.find({row[c.model], row[c.test]});
    if (it == base.end()) continue;
    const auto& br = *it->second;
    out += fmt::format("{},{},{},{},{},{},{}\n", row[c.model], row[c.test], br[b.acc], row[c.acc],
                       delta(br[b.acc], row[c.acc]), delta(br[b.acer], row[c.acer]), delta(br[b.eer], row[c.eer]));
  }
  return out;
}

}  // namespace padkit::protocol
