#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "padkit/datakit.hpp"
#include "padkit/hashing.hpp"
#include "padkit/rng.hpp"

namespace padkit::data {

namespace {

void check_domain(const DomainParams& d) {
  auto bad = [&](const std::string& what) { throw DataError("synthetic domain '" + d.name + "': " + what); };
  if (d.name.empty() || d.name.find_first_of(",:/ ") != std::string::npos) bad("name must be non-empty without ',:/ '");
  if (d.side < 8) bad("side must be at least 8");
  if (!(d.noise_sigma >= 0.0)) bad("noise sigma must be >= 0");
  if (!(d.illumination > 0.0)) bad("illumination must be > 0");
  if (!(d.tint_r > 0.0 && d.tint_g > 0.0 && d.tint_b > 0.0)) bad("tints must be > 0");
  if (!(d.moire_period >= 2.0)) bad("moire period below 2 px aliases");
  if (!(d.moire_amplitude >= 0.0 && d.moire_amplitude < 1.0)) bad("moire amplitude must be in [0,1)");
  if (!(d.specular_gain >= 1.0)) bad("specular gain must be >= 1");
  if (!(d.print_contrast > 0.0 && d.print_contrast <= 1.0)) bad("print contrast must be in (0,1]");
}

std::uint64_t derive(std::uint64_t seed, const std::string& key) {
  Fnv1a h;
  h.update(key);
  return splitmix64(seed ^ h.digest());
}

double smoothstep_edge(double d, double width) { return 1.0 / (1.0 + std::exp(d / width)); }

}  // namespace

DomainParams builtin_domain(std::string_view name) {
  DomainParams d;
  if (name == "synthA") return d;
  if (name == "synthB") {
    d.name = "synthB";
    d.noise_sigma = 7.0;
    d.illumination = 0.8;
    d.tint_r = 1.1;
    d.tint_g = 0.95;
    d.tint_b = 0.85;
    d.moire_period = 6.0;
    d.moire_angle_deg = 45.0;
    d.moire_amplitude = 0.12;
    d.specular_gain = 1.25;
    d.print_contrast = 0.9;
    return d;
  }
  throw DataError("unknown synthetic domain '" + std::string(name) + "' (synthA, synthB)");
}

std::vector<SampleRecord> synth_records(const DomainParams& domain, const SynthConfig& cfg) {
  check_domain(domain);
  if (cfg.subjects < 2) throw DataError("synthetic roster needs at least 2 subjects");
  if (cfg.videos_per_class == 0 || cfg.frames_per_video == 0) throw DataError("synthetic roster needs videos and frames");
  std::vector<SampleRecord> out;
  out.reserve(cfg.subjects * 2 * cfg.videos_per_class * cfg.frames_per_video);
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    const std::string subject = fmt::format("{}-s{:03d}", domain.name, s);
    for (Label label : {Label::Bonafide, Label::Attack}) {
      for (std::size_t v = 0; v < cfg.videos_per_class; ++v) {
        const std::string video = fmt::format("{}-{}-v{}", subject, label == Label::Attack ? "at" : "bf", v);
        for (std::size_t f = 0; f < cfg.frames_per_video; ++f) {
          SampleRecord r;
          r.id = fmt::format("{}-f{:02d}", video, f);
          r.label = label;
          r.subject = subject;
          r.video = video;
          r.dataset = domain.name;
          r.path = "synth:" + domain.name;
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

img::ImageU8 synth_render(const DomainParams& d, const SampleRecord& record, std::uint64_t seed) {
  check_domain(d);
  const double S = static_cast<double>(d.side);

  // per-subject appearance
  Rng subj(derive(seed, d.name + "/" + record.subject));
  const double skin[3] = {subj.uniform(150, 210), subj.uniform(110, 160), subj.uniform(90, 140)};
  const double bg[3] = {subj.uniform(40, 200), subj.uniform(40, 200), subj.uniform(40, 200)};
  const double ax = S * subj.uniform(0.26, 0.32), ay = S * subj.uniform(0.34, 0.40);
  const double eye_dy = S * subj.uniform(0.08, 0.12), eye_dx = S * subj.uniform(0.10, 0.14);
  const double mouth_dy = S * subj.uniform(0.16, 0.20);

  // per-frame pose, shading and attack-artifact phase
  Rng frame(derive(seed, d.name + "/" + record.id));
  const double cx = S / 2 + frame.uniform(-2, 2), cy = S / 2 + frame.uniform(-2, 2);
  const double shade_angle = frame.uniform(0, 2 * std::numbers::pi);
  const double jitter = frame.uniform(0.95, 1.05);
  const double phase = frame.uniform(0, 2 * std::numbers::pi);
  const double spec_x = cx + frame.uniform(-0.4, 0.4) * ax, spec_y = cy + frame.uniform(-0.5, 0.2) * ay;
  const bool attack = record.label == Label::Attack;

  const double ca = std::cos(d.moire_angle_deg * std::numbers::pi / 180.0);
  const double sa = std::sin(d.moire_angle_deg * std::numbers::pi / 180.0);
  const double spec_sigma = S * 0.10;
  const double tint[3] = {d.tint_r, d.tint_g, d.tint_b};

  img::ImageU8 out(d.side, d.side);
  for (std::size_t y = 0; y < d.side; ++y) {
    for (std::size_t x = 0; x < d.side; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double ex = (px - cx) / ax, ey = (py - cy) / ay;
      const double r = std::sqrt(ex * ex + ey * ey);
      const double face = smoothstep_edge((r - 1.0) * ax, 1.2);
      const double shade = 1.0 + 0.15 * (ex * std::cos(shade_angle) + ey * std::sin(shade_angle));
      double eyes = 0.0;
      for (double side : {-1.0, 1.0}) {
        const double dx = (px - (cx + side * eye_dx)) / (S * 0.05), dy = (py - (cy - eye_dy)) / (S * 0.03);
        eyes = std::max(eyes, smoothstep_edge((std::sqrt(dx * dx + dy * dy) - 1.0) * 3.0, 0.8));
      }
      const double mdx = (px - cx) / (S * 0.09), mdy = (py - (cy + mouth_dy)) / (S * 0.02);
      const double mouth = smoothstep_edge((std::sqrt(mdx * mdx + mdy * mdy) - 1.0) * 3.0, 0.8);
      const double bg_grad = 1.0 + 0.1 * (py / S - 0.5);

      const double sd2 = ((px - spec_x) * (px - spec_x) + (py - spec_y) * (py - spec_y)) / (2 * spec_sigma * spec_sigma);
      const double highlight = std::exp(-sd2) * face;
      const double grating = std::cos(2 * std::numbers::pi * (px * ca + py * sa) / d.moire_period + phase);

      for (std::size_t c = 0; c < 3; ++c) {
        double v = face * skin[c] * shade * (1.0 - 0.6 * eyes) * (1.0 - 0.4 * mouth) + (1.0 - face) * bg[c] * bg_grad;
        v *= jitter;
        if (attack) {
          v = 128.0 + d.print_contrast * (v - 128.0);
          v *= 1.0 + d.moire_amplitude * grating;
          v += (d.specular_gain - 1.0) * 160.0 * highlight;
        } else {
          v += 0.08 * 160.0 * highlight;
        }
        v *= d.illumination * tint[c];
        v += frame.normal() * d.noise_sigma;
        out.at(y, x, c) = img::to_u8(v);
      }
    }
  }
  return out;
}

}  // namespace padkit::data
