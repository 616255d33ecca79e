#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "padkit/datakit.hpp"

namespace padkit::data {

namespace {

constexpr const char* kHeader = "padkit-manifest 1";
constexpr const char* kColumns = "id,label,subject,video,dataset,composite,split,path";

void check_field(const std::string& v, const std::string& what) {
  if (v.find_first_of(",\n\r") != std::string::npos) throw DataError("manifest field " + what + " contains a separator: '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string manifest_to_text(const SplitManifest& m) {
  std::string out = fmt::format("{}\nseed {}\ngenerator {}\nconfig {}\n{}\n", kHeader, m.seed, m.generator,
                                m.config_hash.empty() ? "-" : m.config_hash, kColumns);
  for (const auto& r : m.records) {
    for (const auto* f : {&r.id, &r.subject, &r.video, &r.dataset, &r.path}) check_field(*f, "of record '" + r.id + "'");
    if (r.id.empty()) throw DataError("manifest record with empty id");
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.id, label_name(r.label), r.subject, r.video, r.dataset,
                       r.composite ? fmt::format("{}", *r.composite) : std::string("NA"), split_name(r.split), r.path);
  }
  return out;
}

SplitManifest parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw DataError(std::string("manifest truncated before ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next("header");
  if (line != kHeader) throw DataError("not a padkit manifest (expected '" + std::string(kHeader) + "')");
  SplitManifest m;
  next("seed");
  if (line.rfind("seed ", 0) != 0) throw DataError("manifest: expected 'seed <n>'");
  try {
    m.seed = std::stoull(line.substr(5));
  } catch (const std::exception&) {
    throw DataError("manifest: bad seed '" + line.substr(5) + "'");
  }
  next("generator");
  if (line.rfind("generator ", 0) != 0) throw DataError("manifest: expected 'generator <name>'");
  m.generator = line.substr(10);
  next("config");
  if (line.rfind("config ", 0) != 0) throw DataError("manifest: expected 'config <hash>'");
  m.config_hash = line.substr(7) == "-" ? "" : line.substr(7);
  next("column header");
  if (line != kColumns) throw DataError("manifest: unexpected column header '" + line + "'");
  std::size_t lineno = 5;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 8) throw DataError(fmt::format("manifest line {}: expected 8 fields, got {}", lineno, f.size()));
    SampleRecord r;
    r.id = f[0];
    r.label = parse_label(f[1]);
    r.subject = f[2];
    r.video = f[3];
    r.dataset = f[4];
    if (f[5] != "NA") {
      try {
        std::size_t used = 0;
        r.composite = std::stod(f[5], &used);
        if (used != f[5].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError(fmt::format("manifest line {}: bad composite '{}'", lineno, f[5]));
      }
    }
    r.split = parse_split(f[6]);
    r.path = f[7];
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const SplitManifest& m) {
  const std::string text = manifest_to_text(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

SplitManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

}  // namespace padkit::data
