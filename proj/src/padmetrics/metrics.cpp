#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "padkit/padmetrics.hpp"

namespace padkit::metrics {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// rates from pre-sorted score lists
RatePoint rates_sorted(const std::vector<double>& bona, const std::vector<double>& atk, double tau) {
  const auto atk_below = std::lower_bound(atk.begin(), atk.end(), tau) - atk.begin();
  const auto bona_below = std::lower_bound(bona.begin(), bona.end(), tau) - bona.begin();
  RatePoint p;
  p.tau = tau;
  p.apcer = static_cast<double>(atk.size() - static_cast<std::size_t>(atk_below)) / static_cast<double>(atk.size());
  p.bpcer = static_cast<double>(bona_below) / static_cast<double>(bona.size());
  return p;
}

std::string na(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "NA"; }

}  // namespace

ScoreSet ScoreSet::from(const std::vector<ScoredSample>& samples) {
  ScoreSet s;
  for (const auto& x : samples) (x.label == Label::Attack ? s.attack : s.bonafide).push_back(x.score);
  s.check_finite();
  return s;
}

void ScoreSet::check_finite() const {
  for (const auto* v : {&bonafide, &attack}) {
    for (double x : *v) {
      if (!std::isfinite(x)) throw DataError("score set holds a non-finite score");
    }
  }
}

ConfusionCounts confusion_at(const ScoreSet& scores, double tau) {
  if (scores.empty()) throw DataError("confusion_at: empty score set");
  if (!std::isfinite(tau)) throw DataError("confusion_at: threshold must be finite");
  ConfusionCounts c;
  for (double s : scores.attack) (s >= tau ? c.fn : c.tp)++;
  for (double s : scores.bonafide) (s >= tau ? c.tn : c.fp)++;
  return c;
}

BasicMetrics basic_metrics(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double n = tp + tn + fp + fn;
  BasicMetrics m;
  m.accuracy = ratio(tp + tn, n);
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.tnr = ratio(tn, tn + fp);
  m.fpr = ratio(fp, tn + fp);
  if (m.precision && m.recall) m.f1 = ratio(2.0 * *m.precision * *m.recall, *m.precision + *m.recall);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den > 0.0) m.mcc = (tp * tn - fp * fn) / std::sqrt(den);
  if (n > 0.0) {
    const double po = (tp + tn) / n;
    const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
    if (pe < 1.0) m.kappa = (po - pe) / (1.0 - pe);
  }
  return m;
}

PadRates pad_rates(const ConfusionCounts& c) {
  PadRates r;
  r.apcer = ratio(static_cast<double>(c.fn), static_cast<double>(c.n_attack()));
  r.bpcer = ratio(static_cast<double>(c.fp), static_cast<double>(c.n_bonafide()));
  if (r.apcer && r.bpcer) r.acer = (*r.apcer + *r.bpcer) / 2.0;
  return r;
}

PadRates pad_rates(const ScoreSet& scores, double tau) { return pad_rates(confusion_at(scores, tau)); }

std::vector<RatePoint> rate_curve(const ScoreSet& scores) {
  if (scores.bonafide.empty() || scores.attack.empty()) throw DataError("rate curve needs both classes");
  scores.check_finite();
  const auto bona = sorted(scores.bonafide), atk = sorted(scores.attack);
  std::vector<double> all = bona;
  all.insert(all.end(), atk.begin(), atk.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<RatePoint> out;
  out.reserve(all.size() + 1);
  out.push_back(rates_sorted(bona, atk, all.front() - 1.0));
  for (std::size_t i = 0; i + 1 < all.size(); ++i) out.push_back(rates_sorted(bona, atk, 0.5 * (all[i] + all[i + 1])));
  out.push_back(rates_sorted(bona, atk, all.back() + 1.0));
  return out;
}

EerResult eer(const ScoreSet& scores) {
  EerResult res;
  if (scores.bonafide.empty() || scores.attack.empty()) {
    res.degenerate = true;
    return res;
  }
  const auto curve = rate_curve(scores);
  res.degenerate = curve.size() == 2;  // one distinct score value
  for (const auto& p : curve) {
    if (p.apcer == p.bpcer) {
      res.eer = p.apcer;
      res.tau = p.tau;
      return res;
    }
  }
  // APCER - BPCER starts at +1 and ends at -1, so a sign change exists
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double d0 = curve[i].apcer - curve[i].bpcer, d1 = curve[i + 1].apcer - curve[i + 1].bpcer;
    if (d0 > 0.0 && d1 < 0.0) {
      const double f = d0 / (d0 - d1);
      res.eer = curve[i].apcer + f * (curve[i + 1].apcer - curve[i].apcer);
      res.tau = curve[i].tau + f * (curve[i + 1].tau - curve[i].tau);
      return res;
    }
  }
  return res;
}

std::optional<double> roc_auc(const ScoreSet& scores) {
  const std::size_t nb = scores.bonafide.size(), na = scores.attack.size();
  if (nb == 0 || na == 0) return std::nullopt;
  struct Item {
    double s;
    bool bona;
  };
  std::vector<Item> all;
  all.reserve(nb + na);
  for (double s : scores.bonafide) all.push_back({s, true});
  for (double s : scores.attack) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.s < b.s; });

  // rank sum of the bona-fide scores with mid-ranks for ties
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].s == all[i].s) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].bona) rank_sum += mid;
    }
    i = j;
  }
  const double u = rank_sum - 0.5 * static_cast<double>(nb) * static_cast<double>(nb + 1);
  return u / (static_cast<double>(nb) * static_cast<double>(na));
}

std::optional<double> pr_auc(const ScoreSet& scores) {
  const std::size_t nb = scores.bonafide.size(), na = scores.attack.size();
  if (nb == 0 || na == 0) return std::nullopt;
  const auto bona = sorted(scores.bonafide), atk = sorted(scores.attack);
  // lowest bona-fide score first = most attack-like first
  std::size_t i = 0, j = 0;
  double tp = 0.0, fp = 0.0, ap = 0.0, prev_recall = 0.0;
  while (i < bona.size() || j < atk.size()) {
    const double v = std::min(i < bona.size() ? bona[i] : INFINITY, j < atk.size() ? atk[j] : INFINITY);
    while (j < atk.size() && atk[j] == v) ++j, tp += 1.0;
    while (i < bona.size() && bona[i] == v) ++i, fp += 1.0;
    const double recall = tp / static_cast<double>(na);
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

std::string rule_name(ThresholdRule r) {
  switch (r) {
    case ThresholdRule::EerOnDev: return "eer";
    case ThresholdRule::MinAcerOnDev: return "min-acer";
    case ThresholdRule::Fixed: return "fixed";
  }
  return "?";
}

ThresholdRule parse_rule(std::string_view text) {
  if (text == "eer") return ThresholdRule::EerOnDev;
  if (text == "min-acer") return ThresholdRule::MinAcerOnDev;
  if (text == "fixed") return ThresholdRule::Fixed;
  throw std::invalid_argument("unknown threshold rule '" + std::string(text) + "' (eer, min-acer, fixed)");
}

ThresholdPolicy select_threshold(const ScoreSet& dev, ThresholdRule rule, Split provenance, std::string source) {
  if (provenance != Split::Val) {
    throw ProtocolError("threshold selection on the " + split_name(provenance) +
                        " split; thresholds come from validation scores only");
  }
  if (rule == ThresholdRule::Fixed) throw std::invalid_argument("a fixed threshold is not selected; use fixed_threshold");
  if (dev.bonafide.empty() || dev.attack.empty()) throw DataError("threshold selection needs both classes in dev scores");

  ThresholdPolicy p;
  p.rule = rule;
  p.provenance = provenance;
  p.source = std::move(source);
  if (rule == ThresholdRule::EerOnDev) {
    p.tau = eer(dev).tau;
    return p;
  }
  const auto curve = rate_curve(dev);
  double best = INFINITY;
  for (const auto& pt : curve) {
    const double acer = (pt.apcer + pt.bpcer) / 2.0;
    if (acer < best) {
      best = acer;
      p.tau = pt.tau;
    }
  }
  return p;
}

ThresholdPolicy fixed_threshold(double tau) {
  if (!std::isfinite(tau)) throw std::invalid_argument("fixed threshold must be finite");
  ThresholdPolicy p;
  p.rule = ThresholdRule::Fixed;
  p.tau = tau;
  p.provenance = Split::Unassigned;
  p.source = "fixed";
  return p;
}

std::optional<double> hter(const ScoreSet& test, const ThresholdPolicy& policy) {
  if (!std::isfinite(policy.tau)) throw ProtocolError("hter: threshold policy is unresolved");
  return pad_rates(test, policy.tau).acer;
}

MetricReport compute_report(const ScoreSet& test, const ThresholdPolicy& policy, std::string label) {
  if (!std::isfinite(policy.tau)) throw ProtocolError("report: threshold policy is unresolved");
  test.check_finite();
  MetricReport r;
  r.label = std::move(label);
  r.tau = policy.tau;
  r.counts = confusion_at(test, policy.tau);
  r.basic = basic_metrics(r.counts);
  r.rates = pad_rates(r.counts);
  r.hter = r.rates.acer;
  r.roc_auc = roc_auc(test);
  r.pr_auc = pr_auc(test);
  const auto e = eer(test);
  r.eer_degenerate = e.degenerate;
  if (!test.bonafide.empty() && !test.attack.empty()) r.eer = e.eer;
  return r;
}

std::string report_csv_header() {
  return "label,accuracy,precision,recall,f1,roc_auc,pr_auc,apcer,bpcer,acer,eer,hter,mcc,kappa,tnr,fpr,tau,tp,tn,fp,"
         "fn";
}

std::string report_csv_row(const MetricReport& r) {
  if (r.label.find(',') != std::string::npos) throw DataError("report label contains a comma");
  const auto& b = r.basic;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6f},{},{},{},{}", r.label, na(b.accuracy),
                     na(b.precision), na(b.recall), na(b.f1), na(r.roc_auc), na(r.pr_auc), na(r.rates.apcer),
                     na(r.rates.bpcer), na(r.rates.acer), na(r.eer), na(r.hter), na(b.mcc), na(b.kappa), na(b.tnr),
                     na(b.fpr), r.tau, r.counts.tp, r.counts.tn, r.counts.fp, r.counts.fn);
}

void write_scores(std::ostream& os, const std::vector<ScoredSample>& samples) {
  os << "id,label,score\n";
  for (const auto& s : samples) {
    if (s.id.find(',') != std::string::npos) throw DataError("sample id '" + s.id + "' contains a comma");
    fmt::print(os, "{},{},{:.9g}\n", s.id, label_name(s.label), s.score);
  }
}

std::vector<ScoredSample> read_scores(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "id,label,score") throw DataError("score file: expected header 'id,label,score'");
  std::vector<ScoredSample> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw DataError(fmt::format("score file line {}: expected 3 fields", lineno));
    }
    ScoredSample s;
    s.id = line.substr(0, c1);
    try {
      s.label = parse_label(line.substr(c1 + 1, c2 - c1 - 1));
      std::size_t used = 0;
      const std::string num = line.substr(c2 + 1);
      s.score = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing characters");
    } catch (const DataError&) {
      throw DataError(fmt::format("score file line {}: bad label", lineno));
    } catch (const std::exception&) {
      throw DataError(fmt::format("score file line {}: bad score", lineno));
    }
    if (!std::isfinite(s.score)) throw DataError(fmt::format("score file line {}: non-finite score", lineno));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScoredSample> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file " + path.string());
  return read_scores(in);
}

void write_rate_curve(std::ostream& os, const std::vector<RatePoint>& curve) {
  os << "tau,apcer,bpcer\n";
  for (const auto& p : curve) fmt::print(os, "{:.9g},{:.6f},{:.6f}\n", p.tau, p.apcer, p.bpcer);
}

}  // namespace padkit::metrics
