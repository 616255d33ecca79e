#include <algorithm>
#include <array>
#include <cmath>

#include "padkit/imgproc.hpp"

namespace padkit::img {

namespace {

double srgb_to_linear(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }
double linear_to_srgb(double v) { return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055; }

constexpr double kXn = 0.950456;
constexpr double kZn = 1.088754;
constexpr double kEps = 0.008856;

double lab_f(double t) { return t > kEps ? std::cbrt(t) : 7.787 * t + 16.0 / 116.0; }
double lab_finv(double f) {
  const double t = f * f * f;
  return t > kEps ? t : (f - 16.0 / 116.0) / 7.787;
}

// OpenCV-style reflect-101 index into [0, n).
std::size_t reflect101(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  if (m == 1) return 0;
  while (i < 0 || i >= m) i = i < 0 ? -i : 2 * (m - 1) - i;
  return static_cast<std::size_t>(i);
}

Plane channel(const ImageU8& image, std::size_t c) {
  Plane p{image.height, image.width, std::vector<double>(image.height * image.width)};
  for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = image.pixels[i * 3 + c];
  return p;
}

template <typename F>
ImageU8 map_values(const ImageU8& image, F f) {
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) lut[v] = to_u8(f(static_cast<double>(v)));
  ImageU8 out = image;
  for (auto& px : out.pixels) px = lut[px];
  return out;
}

}  // namespace

Lab rgb_to_lab(double r, double g, double b) {
  const double R = srgb_to_linear(r / 255.0), G = srgb_to_linear(g / 255.0), B = srgb_to_linear(b / 255.0);
  const double X = (0.412453 * R + 0.357580 * G + 0.180423 * B) / kXn;
  const double Y = 0.212671 * R + 0.715160 * G + 0.072169 * B;
  const double Z = (0.019334 * R + 0.119193 * G + 0.950227 * B) / kZn;
  const double fx = lab_f(X), fy = lab_f(Y), fz = lab_f(Z);
  const double L = Y > kEps ? 116.0 * fy - 16.0 : 903.3 * Y;
  return {L, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

void lab_to_rgb(const Lab& lab, double& r, double& g, double& b) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double Y = lab.L > 903.3 * kEps ? fy * fy * fy : lab.L / 903.3;
  const double X = lab_finv(fy + lab.a / 500.0) * kXn;
  const double Z = lab_finv(fy - lab.b / 200.0) * kZn;
  const double R = 3.240479 * X - 1.537150 * Y - 0.498535 * Z;
  const double G = -0.969256 * X + 1.875992 * Y + 0.041556 * Z;
  const double B = 0.055648 * X - 0.204043 * Y + 1.057311 * Z;
  r = 255.0 * linear_to_srgb(std::clamp(R, 0.0, 1.0));
  g = 255.0 * linear_to_srgb(std::clamp(G, 0.0, 1.0));
  b = 255.0 * linear_to_srgb(std::clamp(B, 0.0, 1.0));
}

ImageU8 bilateral_filter(const ImageU8& image, double sigma_spatial, double sigma_range, int max_radius) {
  if (image.empty()) return image;
  const int radius = std::max(1, std::min(static_cast<int>(std::ceil(2.0 * sigma_spatial)), max_radius));
  const int side = 2 * radius + 1;
  std::vector<double> spatial(side * side);
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      spatial[(dy + radius) * side + dx + radius] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_spatial * sigma_spatial));
  // colour weight indexed by squared RGB distance
  std::vector<double> range(3 * 255 * 255 + 1);
  for (std::size_t d = 0; d < range.size(); ++d) range[d] = std::exp(-static_cast<double>(d) / (2.0 * sigma_range * sigma_range));

  ImageU8 out(image.height, image.width);
  const auto H = static_cast<int>(image.height), W = static_cast<int>(image.width);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::uint8_t* c0 = &image.pixels[(static_cast<std::size_t>(y) * W + x) * 3];
      double acc[3] = {0, 0, 0}, wsum = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= H) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= W) continue;
          const std::uint8_t* c1 = &image.pixels[(static_cast<std::size_t>(yy) * W + xx) * 3];
          int d2 = 0;
          for (int c = 0; c < 3; ++c) d2 += (c1[c] - c0[c]) * (c1[c] - c0[c]);
          const double w = spatial[(dy + radius) * side + dx + radius] * range[d2];
          for (int c = 0; c < 3; ++c) acc[c] += w * c1[c];
          wsum += w;
        }
      }
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = to_u8(acc[c] / wsum);
    }
  }
  return out;
}

ImageU8 clahe_lab(const ImageU8& image, double clip_limit, int tiles) {
  if (image.empty()) return image;
  if (tiles < 1) throw DataError("CLAHE needs at least one tile");
  const std::size_t n = image.height * image.width;
  std::vector<Lab> lab(n);
  std::vector<std::uint8_t> L8(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = &image.pixels[i * 3];
    lab[i] = rgb_to_lab(p[0], p[1], p[2]);
    L8[i] = to_u8(lab[i].L * 255.0 / 100.0);
  }

  const auto T = static_cast<std::size_t>(tiles);
  const std::size_t th = (image.height + T - 1) / T, tw = (image.width + T - 1) / T;
  const std::size_t area = th * tw;
  const int clip = clip_limit > 0.0 ? std::max(static_cast<int>(clip_limit * area / 256.0), 1) : 0;
  const double scale = 255.0 / static_cast<double>(area);
  std::vector<std::array<std::uint8_t, 256>> luts(T * T);

  for (std::size_t ty = 0; ty < T; ++ty) {
    for (std::size_t tx = 0; tx < T; ++tx) {
      std::array<int, 256> hist{};
      for (std::size_t r = 0; r < th; ++r) {
        const std::size_t y = reflect101(static_cast<std::ptrdiff_t>(ty * th + r), image.height);
        for (std::size_t c = 0; c < tw; ++c) {
          const std::size_t x = reflect101(static_cast<std::ptrdiff_t>(tx * tw + c), image.width);
          ++hist[L8[y * image.width + x]];
        }
      }
      if (clip > 0) {
        int clipped = 0;
        for (int& h : hist) {
          if (h > clip) {
            clipped += h - clip;
            h = clip;
          }
        }
        const int batch = clipped / 256;
        int residual = clipped - batch * 256;
        for (int& h : hist) h += batch;
        if (residual > 0) {
          const int step = std::max(256 / residual, 1);
          for (int i = 0; i < 256 && residual > 0; i += step, --residual) ++hist[i];
        }
      }
      int sum = 0;
      auto& lut = luts[ty * T + tx];
      for (int i = 0; i < 256; ++i) {
        sum += hist[i];
        lut[i] = to_u8(sum * scale);
      }
    }
  }

  ImageU8 out(image.height, image.width);
  const auto last = static_cast<std::ptrdiff_t>(T) - 1;
  for (std::size_t y = 0; y < image.height; ++y) {
    const double fy = static_cast<double>(y) / th - 0.5;
    const auto y1 = static_cast<std::ptrdiff_t>(std::floor(fy));
    const double ya = fy - y1;
    const std::size_t ty1 = std::max<std::ptrdiff_t>(y1, 0), ty2 = std::min<std::ptrdiff_t>(y1 + 1, last);
    for (std::size_t x = 0; x < image.width; ++x) {
      const double fx = static_cast<double>(x) / tw - 0.5;
      const auto x1 = static_cast<std::ptrdiff_t>(std::floor(fx));
      const double xa = fx - x1;
      const std::size_t tx1 = std::max<std::ptrdiff_t>(x1, 0), tx2 = std::min<std::ptrdiff_t>(x1 + 1, last);
      const std::size_t i = y * image.width + x;
      const std::uint8_t v = L8[i];
      const double top = luts[ty1 * T + tx1][v] * (1 - xa) + luts[ty1 * T + tx2][v] * xa;
      const double bot = luts[ty2 * T + tx1][v] * (1 - xa) + luts[ty2 * T + tx2][v] * xa;
      const double Lnew = to_u8(top * (1 - ya) + bot * ya) * 100.0 / 255.0;
      double r, g, b;
      lab_to_rgb({Lnew, lab[i].a, lab[i].b}, r, g, b);
      out.at(y, x, 0) = to_u8(r);
      out.at(y, x, 1) = to_u8(g);
      out.at(y, x, 2) = to_u8(b);
    }
  }
  return out;
}

Plane gaussian_blur(const Plane& plane, double sigma) {
  if (sigma <= 0.0) return plane;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double ks = 0.0;
  for (int i = -radius; i <= radius; ++i) ks += k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (double& w : k) w /= ks;
  const auto H = static_cast<std::ptrdiff_t>(plane.height), W = static_cast<std::ptrdiff_t>(plane.width);
  Plane tmp = plane, out = plane;
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += k[i + radius] * plane.v[y * W + std::clamp<std::ptrdiff_t>(x + i, 0, W - 1)];
      tmp.v[y * W + x] = s;
    }
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += k[i + radius] * tmp.v[std::clamp<std::ptrdiff_t>(y + i, 0, H - 1) * W + x];
      out.v[y * W + x] = s;
    }
  return out;
}

ImageU8 unsharp_mask(const ImageU8& image, double sigma, double amount) {
  ImageU8 out = image;
  for (std::size_t c = 0; c < 3; ++c) {
    const Plane src = channel(image, c);
    const Plane blur = gaussian_blur(src, sigma);
    for (std::size_t i = 0; i < src.v.size(); ++i) out.pixels[i * 3 + c] = to_u8(src.v[i] + amount * (src.v[i] - blur.v[i]));
  }
  return out;
}

ImageU8 gamma_correct(const ImageU8& image, double gamma) {
  if (gamma <= 0.0) throw DataError("gamma must be positive");
  return map_values(image, [gamma](double v) { return 255.0 * std::pow(v / 255.0, 1.0 / gamma); });
}

ImageU8 contrast_scale(const ImageU8& image, double alpha, double beta) {
  return map_values(image, [alpha, beta](double v) { return alpha * v + beta; });
}

ImageU8 enhance(const ImageU8& image, const EnhanceConfig& cfg) {
  ImageU8 x = bilateral_filter(image, cfg.sigma_spatial, cfg.sigma_range, cfg.bilateral_max_radius);
  x = clahe_lab(x, cfg.clahe_clip, cfg.clahe_tiles);
  x = unsharp_mask(x, cfg.sharpen_sigma, cfg.sharpen_amount);
  x = gamma_correct(x, cfg.gamma);
  return contrast_scale(x, cfg.contrast_alpha, cfg.contrast_beta);
}

}  // namespace padkit::img
