#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "padkit/common.hpp"
#include "padkit/rng.hpp"

namespace padkit::img {

/// 8-bit RGB, row-major, interleaved.
struct ImageU8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  ImageU8() = default;
  ImageU8(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), pixels(h * w * 3, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }
  bool empty() const noexcept { return pixels.empty(); }
  bool operator==(const ImageU8&) const = default;
};

/// Real-valued single-channel plane in [0,255].
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> v;
  double at(std::size_t y, std::size_t x) const { return v[y * width + x]; }
};

// ---- I/O --------------------------------------------------------------

/// Uncompressed BMP, 24- or 32-bit, either row order. Throws DataError.
ImageU8 read_bmp(const std::filesystem::path& path);
/// Writes 24-bit bottom-up BMP.
void write_bmp(const std::filesystem::path& path, const ImageU8& image);

ImageU8 resize_bilinear(const ImageU8& image, std::size_t height, std::size_t width);

/// Clip to [0,255] and round half away from zero.
std::uint8_t to_u8(double v);

// ---- quality ----------------------------------------------------------

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
Plane to_gray(const ImageU8& image);

/// Variance of the 4-neighbour Laplacian response over the interior.
double laplacian_variance(const ImageU8& image);
/// Mean squared Sobel gradient magnitude over the interior.
double tenengrad(const ImageU8& image);
/// Population std of gray/255.
double rms_contrast(const ImageU8& image);
double mean_intensity(const ImageU8& image);

struct QualityConfig {
  double w_sharpness = 0.35;
  double w_contrast = 0.25;
  double w_brightness = 0.20;
  double w_blur = 0.20;
  double sharpness_c = 100.0;   // squash constant for Laplacian variance
  double blur_laplacian_c = 100.0;
  double blur_tenengrad_c = 1000.0;
  double contrast_gain = 2.0;   // contrast score = min(1, gain * rms)
  double bright_lo = 40.0;
  double bright_hi = 220.0;
  double threshold = 0.65;
};

struct QualityReport {
  double sharpness = 0.0;
  double contrast = 0.0;
  double brightness = 0.0;
  double blur = 0.0;
  double composite = 0.0;
};

/// x / (x + c); 0 for x = 0, tends to 1.
double squash(double x, double c);
double sharpness_score(const ImageU8& image, const QualityConfig& cfg = {});
double contrast_score(const ImageU8& image, const QualityConfig& cfg = {});
/// 1 inside [lo,hi]; m/lo below; (255-m)/(255-hi) above.
double brightness_score_from_mean(double mean, const QualityConfig& cfg = {});
double brightness_score(const ImageU8& image, const QualityConfig& cfg = {});
double blur_score(const ImageU8& image, const QualityConfig& cfg = {});

QualityReport combine_scores(double sharpness, double contrast, double brightness, double blur,
                             const QualityConfig& cfg = {});
QualityReport composite_quality(const ImageU8& image, const QualityConfig& cfg = {});
bool passes_filter(const QualityReport& report, const QualityConfig& cfg = {});

std::string quality_csv_header();
std::string quality_csv_row(const std::string& path, const QualityReport& report, const QualityConfig& cfg = {});

// ---- enhancement ------------------------------------------------------

struct EnhanceConfig {
  double sigma_spatial = 75.0;
  double sigma_range = 75.0;
  int bilateral_max_radius = 4;
  double clahe_clip = 3.0;
  int clahe_tiles = 8;
  double sharpen_sigma = 2.0;
  double sharpen_amount = 1.5;
  double gamma = 1.2;
  double contrast_alpha = 1.1;
  double contrast_beta = 5.0;
};

ImageU8 bilateral_filter(const ImageU8& image, double sigma_spatial, double sigma_range, int max_radius = 4);
/// CLAHE on the L channel of CIE L*a*b* (8-bit L scaled to 0..255).
ImageU8 clahe_lab(const ImageU8& image, double clip_limit, int tiles);
/// in + amount * (in - gaussian(in, sigma)), replicated borders.
ImageU8 unsharp_mask(const ImageU8& image, double sigma, double amount);
/// 255 * (v/255)^(1/gamma).
ImageU8 gamma_correct(const ImageU8& image, double gamma);
/// clip(alpha * v + beta).
ImageU8 contrast_scale(const ImageU8& image, double alpha, double beta);
ImageU8 enhance(const ImageU8& image, const EnhanceConfig& cfg = {});

struct Lab {
  double L = 0.0;  // 0..100
  double a = 0.0;
  double b = 0.0;
};
/// sRGB (D65) to CIE L*a*b*, with sRGB gamma linearization.
Lab rgb_to_lab(double r, double g, double b);
/// Inverse of rgb_to_lab; returns unclipped values on the 0..255 scale.
void lab_to_rgb(const Lab& lab, double& r, double& g, double& b);

/// Separable Gaussian blur on one plane, replicated borders, radius ceil(3 sigma).
Plane gaussian_blur(const Plane& plane, double sigma);

// ---- augmentation -----------------------------------------------------

struct AugmentPolicy {
  double p_rotate = 0.5;
  double max_rotation_deg = 20.0;
  double p_flip = 0.5;
  double p_brightness = 0.5;
  double brightness_range = 0.2;
  double p_contrast = 0.5;
  double contrast_range = 0.2;
  double p_saturation = 0.5;
  double saturation_range = 0.3;
  double p_noise = 0.3;
  double noise_sigma_lo = 0.01;
  double noise_sigma_hi = 0.03;
  double p_motion_blur = 0.3;
  int motion_kernel = 5;
};

struct AugmentOp {
  std::string name;
  double value = 0.0;  // angle in degrees, factor, sigma, or kernel size
};

ImageU8 flip_horizontal(const ImageU8& image);
/// Rotation about the centre, bilinear, border replicated.
ImageU8 rotate(const ImageU8& image, double degrees);
ImageU8 adjust_brightness(const ImageU8& image, double factor);
/// Scales deviations from the mean gray level.
ImageU8 adjust_contrast(const ImageU8& image, double factor);
/// Blends each pixel with its own gray value.
ImageU8 adjust_saturation(const ImageU8& image, double factor);
/// sigma is relative to full scale (0.01 = 2.55 levels).
ImageU8 add_gaussian_noise(const ImageU8& image, double sigma, Rng& rng);
/// Horizontal box blur of length k.
ImageU8 motion_blur(const ImageU8& image, int k);

/// Train-only augmentation. Transforms are visited in a fixed order; each
/// draws its firing coin, then its parameters only if it fires. Every fired
/// transform is appended to `log`. Throws ProtocolError for non-train splits.
ImageU8 augment(const ImageU8& image, Rng& rng, Split split, const AugmentPolicy& policy = {},
                std::vector<AugmentOp>* log = nullptr);

}  // namespace padkit::img
