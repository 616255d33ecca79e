#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "padkit/imgproc.hpp"

namespace padkit::img {

namespace {

void require_3x3(const ImageU8& image, const char* what) {
  if (image.height < 3 || image.width < 3) {
    throw DataError(fmt::format("{} needs at least 3x3 pixels, got {}x{}", what, image.height, image.width));
  }
}

}  // namespace

Plane to_gray(const ImageU8& image) {
  Plane p{image.height, image.width, std::vector<double>(image.height * image.width)};
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    const std::uint8_t* px = &image.pixels[i * 3];
    p.v[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return p;
}

double laplacian_variance(const ImageU8& image) {
  require_3x3(image, "laplacian_variance");
  const Plane g = to_gray(image);
  // two-pass for accuracy
  std::vector<double> r;
  r.reserve((g.height - 2) * (g.width - 2));
  for (std::size_t y = 1; y + 1 < g.height; ++y)
    for (std::size_t x = 1; x + 1 < g.width; ++x)
      r.push_back(g.at(y - 1, x) + g.at(y + 1, x) + g.at(y, x - 1) + g.at(y, x + 1) - 4.0 * g.at(y, x));
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  return var / static_cast<double>(r.size());
}

double tenengrad(const ImageU8& image) {
  require_3x3(image, "tenengrad");
  const Plane g = to_gray(image);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 1; y + 1 < g.height; ++y) {
    for (std::size_t x = 1; x + 1 < g.width; ++x) {
      const double gx = (g.at(y - 1, x + 1) + 2 * g.at(y, x + 1) + g.at(y + 1, x + 1)) -
                        (g.at(y - 1, x - 1) + 2 * g.at(y, x - 1) + g.at(y + 1, x - 1));
      const double gy = (g.at(y + 1, x - 1) + 2 * g.at(y + 1, x) + g.at(y + 1, x + 1)) -
                        (g.at(y - 1, x - 1) + 2 * g.at(y - 1, x) + g.at(y - 1, x + 1));
      acc += gx * gx + gy * gy;
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

double mean_intensity(const ImageU8& image) {
  if (image.empty()) throw DataError("mean_intensity of an empty image");
  const Plane g = to_gray(image);
  double s = 0.0;
  for (double v : g.v) s += v;
  return s / static_cast<double>(g.v.size());
}

double rms_contrast(const ImageU8& image) {
  if (image.empty()) throw DataError("rms_contrast of an empty image");
  const Plane g = to_gray(image);
  double mean = 0.0;
  for (double v : g.v) mean += v / 255.0;
  mean /= static_cast<double>(g.v.size());
  double var = 0.0;
  for (double v : g.v) var += (v / 255.0 - mean) * (v / 255.0 - mean);
  return std::sqrt(var / static_cast<double>(g.v.size()));
}

double squash(double x, double c) { return x <= 0.0 ? 0.0 : x / (x + c); }

double sharpness_score(const ImageU8& image, const QualityConfig& cfg) {
  return squash(laplacian_variance(image), cfg.sharpness_c);
}

double contrast_score(const ImageU8& image, const QualityConfig& cfg) {
  return std::min(1.0, cfg.contrast_gain * rms_contrast(image));
}

double brightness_score_from_mean(double m, const QualityConfig& cfg) {
  if (m < cfg.bright_lo) return std::max(0.0, m / cfg.bright_lo);
  if (m > cfg.bright_hi) return std::max(0.0, (255.0 - m) / (255.0 - cfg.bright_hi));
  return 1.0;
}

double brightness_score(const ImageU8& image, const QualityConfig& cfg) {
  return brightness_score_from_mean(mean_intensity(image), cfg);
}

double blur_score(const ImageU8& image, const QualityConfig& cfg) {
  return 0.5 * (squash(laplacian_variance(image), cfg.blur_laplacian_c) + squash(tenengrad(image), cfg.blur_tenengrad_c));
}

QualityReport combine_scores(double sharpness, double contrast, double brightness, double blur, const QualityConfig& cfg) {
  QualityReport r{sharpness, contrast, brightness, blur, 0.0};
  r.composite = cfg.w_sharpness * sharpness + cfg.w_contrast * contrast + cfg.w_brightness * brightness + cfg.w_blur * blur;
  return r;
}

QualityReport composite_quality(const ImageU8& image, const QualityConfig& cfg) {
  return combine_scores(sharpness_score(image, cfg), contrast_score(image, cfg), brightness_score(image, cfg),
                        blur_score(image, cfg), cfg);
}

bool passes_filter(const QualityReport& report, const QualityConfig& cfg) { return report.composite > cfg.threshold; }

std::string quality_csv_header() { return "path,sharpness,contrast,brightness,blur,composite,pass"; }

std::string quality_csv_row(const std::string& path, const QualityReport& r, const QualityConfig& cfg) {
  return fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}", path, r.sharpness, r.contrast, r.brightness, r.blur,
                     r.composite, passes_filter(r, cfg) ? 1 : 0);
}

}  // namespace padkit::img
