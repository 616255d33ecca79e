#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "padkit/common.hpp"
#include "padkit/imgproc.hpp"

namespace padkit::data {

struct SampleRecord {
  std::string id;
  Label label = Label::Bonafide;
  std::string subject;  // empty when unknown
  std::string video;    // empty for still-image sets
  std::string dataset;
  std::optional<double> composite;  // quality composite, when assessed
  Split split = Split::Unassigned;
  std::string path;  // image file, or "synth:" for generator-backed records

  bool operator==(const SampleRecord&) const = default;
};

/// Subject when present, else video, else the sample id.
///
/// Keying on the subject keeps every video of a person together, which
/// also keeps each video together.
std::string group_key(const SampleRecord& r);

struct ClassCounts {
  std::size_t bonafide = 0;
  std::size_t attack = 0;
  std::size_t total() const { return bonafide + attack; }
  /// Attack fraction; nullopt for an empty split.
  std::optional<double> attack_fraction() const;
};

inline constexpr const char* kGeneratorVersion = "padkit-datakit 1";

struct SplitManifest {
  std::uint64_t seed = 42;
  std::string generator = kGeneratorVersion;
  std::string config_hash;  // hash of the settings that produced it
  std::vector<SampleRecord> records;

  std::vector<const SampleRecord*> in(Split s) const;
  ClassCounts counts(Split s) const;
  /// Sorted, de-duplicated group keys of a split.
  std::vector<std::string> roster(Split s) const;

  bool operator==(const SplitManifest&) const = default;
};

struct SplitOptions {
  double train_frac = 0.80;  // of all records; the rest is test
  double val_frac = 0.15;    // carved out of train; 0 disables
};

/// Whole-group allocation. Groups are stratified by the set of labels they
/// contain; within a stratum they are shuffled, then the prefix whose record
/// count lands closest to the target goes to train (shorter prefix on ties).
/// Validation is carved out of train the same way.
/// Throws DataError when a class spans fewer than two groups.
SplitManifest group_split(std::vector<SampleRecord> records, std::uint64_t seed, const SplitOptions& opt = {});

/// Per-class proportional allocation for still-image sets.
/// Throws DataError for a single-class input or a class smaller than the
/// number of splits requested.
SplitManifest stratified_split(std::vector<SampleRecord> records, std::uint64_t seed, const SplitOptions& opt = {});

/// Reduces the majority class to the minority size, keeping the highest
/// composites (ties: smaller id first). Returns survivors in input order.
/// Throws DataError when a class is empty or a composite is missing.
std::vector<SampleRecord> quality_undersample(const std::vector<SampleRecord>& records);

/// Applies quality_undersample within each assigned split; dropped records
/// become unassigned.
SplitManifest balance_splits(SplitManifest manifest);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t test = 0;
};
/// train = round(frac * total), half away from zero.
SplitSizes split_sizes(std::size_t total, double train_frac = 0.80);

/// Pools records from every source and re-splits train/test with quotas per
/// (source, group label-set) cell, apportioned by largest remainder so that
/// the quotas sum to round(train_frac * total). Whole groups move together,
/// so the identity is exact for singleton groups and closest-achievable
/// otherwise. Throws DataError on id collisions or fewer than two sources.
SplitManifest combine_datasets(const std::vector<SplitManifest>& sources, std::uint64_t seed,
                               const SplitOptions& opt = {});

struct ValidationOptions {
  bool check_ratio = true;
  double ratio_lo = 0.48;
  double ratio_hi = 0.52;
};

/// Throws ProtocolError on duplicate ids, a subject or video appearing in
/// more than one of train/val/test, or a class ratio outside the band.
void validate_manifest(const SplitManifest& manifest, const ValidationOptions& opt = {});

// ---- manifest files ----------------------------------------------------

std::string manifest_to_text(const SplitManifest& manifest);
/// Throws DataError on malformed text.
SplitManifest parse_manifest(const std::string& text);
void write_manifest(const std::filesystem::path& path, const SplitManifest& manifest);
SplitManifest read_manifest(const std::filesystem::path& path);

// ---- synthetic generator -----------------------------------------------

/// Knobs that make one synthetic "dataset" look different from another.
struct DomainParams {
  std::string name = "synthA";
  std::size_t side = 64;
  double noise_sigma = 4.0;       // sensor noise, grey levels
  double illumination = 1.0;      // global gain
  double tint_r = 1.0, tint_g = 1.0, tint_b = 1.0;
  double moire_period = 4.0;      // pixels per grating cycle
  double moire_angle_deg = 0.0;   // 0 = vertical stripes
  double moire_amplitude = 0.18;  // relative modulation
  double specular_gain = 1.35;    // highlight strength on attacks
  double print_contrast = 0.85;   // dynamic-range compression on attacks
};

/// Named presets: "synthA" (the defaults above) and "synthB", a shifted
/// capture setup with another grating, dimmer tinted light and more noise.
/// Throws DataError for other names.
DomainParams builtin_domain(std::string_view name);

struct SynthConfig {
  std::size_t subjects = 50;              // each subject has bona fide and attack videos
  std::size_t videos_per_class = 1;
  std::size_t frames_per_video = 10;
};

/// Records for one domain. Every subject contributes both classes, so
/// subject-grouped splits stay balanced. Paths read "synth:<domain>".
/// Throws DataError for degenerate parameters.
std::vector<SampleRecord> synth_records(const DomainParams& domain, const SynthConfig& cfg);

/// Renders the image for a generator-backed record. Pure function of
/// (domain, record id, seed).
img::ImageU8 synth_render(const DomainParams& domain, const SampleRecord& record, std::uint64_t seed);

}  // namespace padkit::data
