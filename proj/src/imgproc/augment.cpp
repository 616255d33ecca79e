#include <algorithm>
#include <cmath>
#include <numbers>

#include "padkit/imgproc.hpp"

namespace padkit::img {

ImageU8 flip_horizontal(const ImageU8& image) {
  ImageU8 out(image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) out.at(y, image.width - 1 - x, c) = image.at(y, x, c);
  return out;
}

ImageU8 rotate(const ImageU8& image, double degrees) {
  if (image.empty()) return image;
  const double t = degrees * std::numbers::pi / 180.0;
  const double ct = std::cos(t), st = std::sin(t);
  const double cy = (image.height - 1) / 2.0, cx = (image.width - 1) / 2.0;
  const double ymax = static_cast<double>(image.height - 1), xmax = static_cast<double>(image.width - 1);
  ImageU8 out(image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      // inverse map: output pixel back into the source frame
      const double dy = y - cy, dx = x - cx;
      const double sx = std::clamp(cx + ct * dx + st * dy, 0.0, xmax);
      const double sy = std::clamp(cy - st * dx + ct * dy, 0.0, ymax);
      const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1), y1 = std::min(y0 + 1, image.height - 1);
      const double wx = sx - x0, wy = sy - y0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = image.at(y0, x0, c) * (1 - wx) + image.at(y0, x1, c) * wx;
        const double bot = image.at(y1, x0, c) * (1 - wx) + image.at(y1, x1, c) * wx;
        out.at(y, x, c) = to_u8(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

ImageU8 adjust_brightness(const ImageU8& image, double factor) {
  ImageU8 out = image;
  for (auto& v : out.pixels) v = to_u8(v * factor);
  return out;
}

ImageU8 adjust_contrast(const ImageU8& image, double factor) {
  if (image.empty()) return image;
  const double m = mean_intensity(image);
  ImageU8 out = image;
  for (auto& v : out.pixels) v = to_u8(m + factor * (v - m));
  return out;
}

ImageU8 adjust_saturation(const ImageU8& image, double factor) {
  ImageU8 out = image;
  for (std::size_t i = 0; i < image.pixels.size(); i += 3) {
    const std::uint8_t* p = &image.pixels[i];
    const double g = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    for (std::size_t c = 0; c < 3; ++c) out.pixels[i + c] = to_u8(g + factor * (p[c] - g));
  }
  return out;
}

ImageU8 add_gaussian_noise(const ImageU8& image, double sigma, Rng& rng) {
  ImageU8 out = image;
  for (auto& v : out.pixels) v = to_u8(v + rng.normal() * sigma * 255.0);
  return out;
}

ImageU8 motion_blur(const ImageU8& image, int k) {
  if (k < 1) throw DataError("motion blur kernel must be >= 1");
  const int half = k / 2;
  const auto W = static_cast<int>(image.width);
  ImageU8 out(image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y)
    for (int x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int i = -half; i < k - half; ++i) s += image.at(y, static_cast<std::size_t>(std::clamp(x + i, 0, W - 1)), c);
        out.at(y, static_cast<std::size_t>(x), c) = to_u8(s / k);
      }
  return out;
}

ImageU8 augment(const ImageU8& image, Rng& rng, Split split, const AugmentPolicy& p, std::vector<AugmentOp>* log) {
  if (split != Split::Train) throw ProtocolError("augmentation requested for a " + split_name(split) + " record");
  auto note = [log](const char* name, double value) {
    if (log) log->push_back({name, value});
  };
  ImageU8 x = image;
  if (rng.bernoulli(p.p_rotate)) {
    const double a = rng.uniform(-p.max_rotation_deg, p.max_rotation_deg);
    x = rotate(x, a);
    note("rotate", a);
  }
  if (rng.bernoulli(p.p_flip)) {
    x = flip_horizontal(x);
    note("flip", 1.0);
  }
  if (rng.bernoulli(p.p_brightness)) {
    const double f = rng.uniform(1.0 - p.brightness_range, 1.0 + p.brightness_range);
    x = adjust_brightness(x, f);
    note("brightness", f);
  }
  if (rng.bernoulli(p.p_contrast)) {
    const double f = rng.uniform(1.0 - p.contrast_range, 1.0 + p.contrast_range);
    x = adjust_contrast(x, f);
    note("contrast", f);
  }
  if (rng.bernoulli(p.p_saturation)) {
    const double f = rng.uniform(1.0 - p.saturation_range, 1.0 + p.saturation_range);
    x = adjust_saturation(x, f);
    note("saturation", f);
  }
  if (rng.bernoulli(p.p_noise)) {
    const double s = rng.uniform(p.noise_sigma_lo, p.noise_sigma_hi);
    x = add_gaussian_noise(x, s, rng);
    note("noise", s);
  }
  if (rng.bernoulli(p.p_motion_blur)) {
    x = motion_blur(x, p.motion_kernel);
    note("motion_blur", p.motion_kernel);
  }
  return x;
}

}  // namespace padkit::img
