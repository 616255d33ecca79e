#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

#include "padkit/datakit.hpp"
#include "padkit/hashing.hpp"
#include "padkit/rng.hpp"

namespace padkit::data {

std::string group_key(const SampleRecord& r) {
  if (!r.subject.empty()) return r.subject;
  if (!r.video.empty()) return r.video;
  return r.id;
}

std::optional<double> ClassCounts::attack_fraction() const {
  if (total() == 0) return std::nullopt;
  return static_cast<double>(attack) / static_cast<double>(total());
}

std::vector<const SampleRecord*> SplitManifest::in(Split s) const {
  std::vector<const SampleRecord*> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

ClassCounts SplitManifest::counts(Split s) const {
  ClassCounts c;
  for (const auto& r : records) {
    if (r.split != s) continue;
    (r.label == Label::Attack ? c.attack : c.bonafide)++;
  }
  return c;
}

std::vector<std::string> SplitManifest::roster(Split s) const {
  std::set<std::string> keys;
  for (const auto& r : records)
    if (r.split == s) keys.insert(group_key(r));
  return {keys.begin(), keys.end()};
}

namespace {

struct Group {
  std::vector<std::size_t> members;  // record indices
  bool has_bonafide = false;
  bool has_attack = false;
  std::string stratum() const { return std::string(has_attack ? "a" : "") + (has_bonafide ? "b" : ""); }
};

// Number of leading groups (in `order`) whose record total lands closest to
// `target`. When there are at least two groups, both sides keep one.
std::size_t closest_prefix(const std::vector<std::string>& order, const std::map<std::string, Group>& groups,
                           double target) {
  const std::size_t n = order.size();
  if (n < 2) return n;
  std::size_t best = 1;
  double best_gap = INFINITY;
  double acc = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    acc += static_cast<double>(groups.at(order[k - 1]).members.size());
    const double gap = std::abs(acc - target);
    if (gap < best_gap - 1e-9) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

std::size_t records_in(const std::vector<std::string>& keys, const std::map<std::string, Group>& groups) {
  std::size_t n = 0;
  for (const auto& k : keys) n += groups.at(k).members.size();
  return n;
}

void assign(std::vector<SampleRecord>& records, const Group& g, Split s) {
  for (auto i : g.members) records[i].split = s;
}

std::map<std::string, Group> build_groups(const std::vector<SampleRecord>& records,
                                          const std::function<std::string(const SampleRecord&)>& key) {
  std::map<std::string, Group> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    Group& g = groups[key(records[i])];
    g.members.push_back(i);
    (records[i].label == Label::Attack ? g.has_attack : g.has_bonafide) = true;
  }
  return groups;
}

void check_fracs(const SplitOptions& opt) {
  if (!(opt.train_frac > 0.0 && opt.train_frac < 1.0)) throw DataError("train fraction must be in (0,1)");
  if (!(opt.val_frac >= 0.0 && opt.val_frac < 1.0)) throw DataError("validation fraction must be in [0,1)");
}

// Splits shuffled strata into train/test, then carves val from train.
// `train_target` gives the train record target for each stratum.
void allocate_strata(std::vector<SampleRecord>& records, const std::map<std::string, Group>& groups,
                     std::map<std::string, std::vector<std::string>>& strata,
                     const std::map<std::string, double>& train_target, const SplitOptions& opt) {
  for (auto& [name, order] : strata) {
    const std::size_t k = closest_prefix(order, groups, train_target.at(name));
    std::vector<std::string> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = k; i < order.size(); ++i) assign(records, groups.at(order[i]), Split::Test);
    std::size_t keep = train.size();
    if (opt.val_frac > 0.0) keep = closest_prefix(train, groups, (1.0 - opt.val_frac) * records_in(train, groups));
    for (std::size_t i = 0; i < train.size(); ++i) assign(records, groups.at(train[i]), i < keep ? Split::Train : Split::Val);
  }
}

}  // namespace

SplitManifest group_split(std::vector<SampleRecord> records, std::uint64_t seed, const SplitOptions& opt) {
  check_fracs(opt);
  if (records.empty()) throw DataError("group_split: no records");
  for (auto& r : records) r.split = Split::Unassigned;
  const auto groups = build_groups(records, group_key);

  std::size_t bona_groups = 0, attack_groups = 0;
  for (const auto& [k, g] : groups) {
    bona_groups += g.has_bonafide;
    attack_groups += g.has_attack;
  }
  if (bona_groups < 2 || attack_groups < 2) {
    throw DataError(fmt::format("group_split: each class needs at least 2 groups (bonafide {}, attack {})", bona_groups,
                                attack_groups));
  }

  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& [k, g] : groups) strata[g.stratum()].push_back(k);
  Rng rng(seed);
  std::map<std::string, double> target;
  for (auto& [name, order] : strata) {
    rng.shuffle(order);
    target[name] = opt.train_frac * static_cast<double>(records_in(order, groups));
  }
  allocate_strata(records, groups, strata, target, opt);

  SplitManifest m;
  m.seed = seed;
  m.config_hash = hash_string(fmt::format("group_split train={} val={}", opt.train_frac, opt.val_frac));
  m.records = std::move(records);
  return m;
}

SplitManifest stratified_split(std::vector<SampleRecord> records, std::uint64_t seed, const SplitOptions& opt) {
  check_fracs(opt);
  for (const auto& r : records) {
    if (!r.video.empty()) {
      throw DataError("stratified_split would scatter frames of video '" + r.video + "'; use group_split");
    }
  }
  for (auto& r : records) r.split = Split::Unassigned;
  const std::size_t nsplits = opt.val_frac > 0.0 ? 3 : 2;
  Rng rng(seed);
  for (Label cls : {Label::Bonafide, Label::Attack}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].label == cls) idx.push_back(i);
    if (idx.size() < nsplits) {
      throw DataError(fmt::format("stratified_split: class {} has {} record(s), fewer than the {} splits requested",
                                  label_name(cls), idx.size(), nsplits));
    }
    rng.shuffle(idx);
    const std::size_t n = idx.size();
    std::size_t n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(opt.train_frac * n)), nsplits - 1, n - 1);
    std::size_t n_val = 0;
    if (opt.val_frac > 0.0) n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(opt.val_frac * n_train)), 1, n_train - 1);
    for (std::size_t i = 0; i < n; ++i) {
      records[idx[i]].split = i < n_train - n_val ? Split::Train : (i < n_train ? Split::Val : Split::Test);
    }
  }
  SplitManifest m;
  m.seed = seed;
  m.config_hash = hash_string(fmt::format("stratified_split train={} val={}", opt.train_frac, opt.val_frac));
  m.records = std::move(records);
  return m;
}

std::vector<SampleRecord> quality_undersample(const std::vector<SampleRecord>& records) {
  std::vector<std::size_t> bona, atk;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].composite) throw DataError("quality_undersample: record '" + records[i].id + "' has no quality score");
    (records[i].label == Label::Attack ? atk : bona).push_back(i);
  }
  if (bona.empty() || atk.empty()) throw DataError("quality_undersample: a class is empty");
  auto& major = bona.size() > atk.size() ? bona : atk;
  const std::size_t keep_n = std::min(bona.size(), atk.size());
  std::vector<bool> keep(records.size(), true);
  if (major.size() > keep_n) {
    std::vector<std::size_t> ranked = major;
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      if (*records[a].composite != *records[b].composite) return *records[a].composite > *records[b].composite;
      return records[a].id < records[b].id;
    });
    for (std::size_t i = keep_n; i < ranked.size(); ++i) keep[ranked[i]] = false;
  }
  std::vector<SampleRecord> out;
  out.reserve(2 * keep_n);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(records[i]);
  return out;
}

SplitManifest balance_splits(SplitManifest m) {
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    std::vector<SampleRecord> part;
    for (const auto& r : m.records)
      if (r.split == s) part.push_back(r);
    if (part.empty()) continue;
    std::set<std::string> kept;
    for (const auto& r : quality_undersample(part)) kept.insert(r.id);
    for (auto& r : m.records)
      if (r.split == s && !kept.count(r.id)) r.split = Split::Unassigned;
  }
  return m;
}

SplitSizes split_sizes(std::size_t total, double train_frac) {
  const auto train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(total)));
  return {train, total - train};
}

SplitManifest combine_datasets(const std::vector<SplitManifest>& sources, std::uint64_t seed, const SplitOptions& opt) {
  check_fracs(opt);
  if (sources.size() < 2) throw DataError("combine_datasets needs at least two source manifests");
  std::vector<SampleRecord> pooled;
  std::set<std::string> ids;
  for (const auto& src : sources) {
    for (auto r : src.records) {
      if (r.dataset.empty()) throw DataError("combine_datasets: record '" + r.id + "' has no source dataset");
      if (!ids.insert(r.id).second) throw DataError("combine_datasets: id '" + r.id + "' occurs in more than one source");
      r.split = Split::Unassigned;
      pooled.push_back(std::move(r));
    }
  }
  if (pooled.empty()) throw DataError("combine_datasets: no records");
  const auto groups = build_groups(pooled, [](const SampleRecord& r) { return r.dataset + "/" + group_key(r); });

  // cell = source + group label-set
  std::map<std::string, std::vector<std::string>> cells;
  std::map<std::string, std::size_t> cell_records;
  for (const auto& [k, g] : groups) {
    const std::string cell = pooled[g.members.front()].dataset + "|" + g.stratum();
    cells[cell].push_back(k);
    cell_records[cell] += g.members.size();
  }

  // largest-remainder apportionment of the train total
  const std::size_t train_total = split_sizes(pooled.size(), opt.train_frac).train;
  std::map<std::string, double> quota;
  std::vector<std::pair<double, std::string>> remainders;
  std::size_t assigned = 0;
  for (const auto& [cell, n] : cell_records) {
    const double exact = opt.train_frac * static_cast<double>(n);
    const double fl = std::floor(exact);
    quota[cell] = fl;
    assigned += static_cast<std::size_t>(fl);
    remainders.emplace_back(exact - fl, cell);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned + i < train_total && i < remainders.size(); ++i) quota[remainders[i].second] += 1.0;

  Rng rng(seed);
  for (auto& [cell, order] : cells) rng.shuffle(order);
  allocate_strata(pooled, groups, cells, quota, opt);

  SplitManifest m;
  m.seed = seed;
  m.config_hash = hash_string(fmt::format("combine_datasets sources={} train={} val={}", sources.size(), opt.train_frac,
                                          opt.val_frac));
  m.records = std::move(pooled);
  return m;
}

void validate_manifest(const SplitManifest& m, const ValidationOptions& opt) {
  std::set<std::string> ids;
  std::map<std::string, std::set<Split>> by_subject, by_video;
  for (const auto& r : m.records) {
    if (!ids.insert(r.id).second) throw ProtocolError("manifest: duplicate record id '" + r.id + "'");
    if (r.split == Split::Unassigned) continue;
    if (!r.subject.empty()) by_subject[r.dataset + "/" + r.subject].insert(r.split);
    if (!r.video.empty()) by_video[r.dataset + "/" + r.video].insert(r.split);
  }
  auto leak = [](const std::map<std::string, std::set<Split>>& m, const char* what) {
    for (const auto& [key, splits] : m) {
      if (splits.size() < 2) continue;
      std::string where;
      for (Split s : splits) where += (where.empty() ? "" : " and ") + split_name(s);
      throw ProtocolError(fmt::format("leakage: {} '{}' appears in {}", what, key, where));
    }
  };
  leak(by_video, "video");
  leak(by_subject, "subject");
  if (!opt.check_ratio) return;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    const auto f = m.counts(s).attack_fraction();
    if (f && (*f < opt.ratio_lo || *f > opt.ratio_hi)) {
      throw ProtocolError(fmt::format("class ratio: {} split has attack fraction {:.4f}, outside [{}, {}]", split_name(s),
                                      *f, opt.ratio_lo, opt.ratio_hi));
    }
  }
}

}  // namespace padkit::data
