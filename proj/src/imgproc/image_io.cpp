#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "padkit/imgproc.hpp"

namespace padkit::img {

namespace {

std::uint32_t rd32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t rd16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

void wr32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void wr16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

std::uint8_t to_u8(double v) {
  if (!(v > 0.0)) return 0;  // also catches NaN
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

ImageU8 read_bmp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (buf.size() < 54 || buf[0] != 'B' || buf[1] != 'M') throw DataError(where + "not a BMP file");
  const std::uint32_t offset = rd32(&buf[10]);
  const std::uint32_t dib = rd32(&buf[14]);
  if (dib < 40) throw DataError(where + "unsupported BMP header");
  const auto w = static_cast<std::int32_t>(rd32(&buf[18]));
  const auto h = static_cast<std::int32_t>(rd32(&buf[22]));
  const std::uint16_t bpp = rd16(&buf[28]);
  const std::uint32_t compression = rd32(&buf[30]);
  if (bpp != 24 && bpp != 32) throw DataError(where + "only 24/32-bit BMP supported, got " + std::to_string(bpp));
  if (!(compression == 0 || (compression == 3 && bpp == 32))) throw DataError(where + "compressed BMP not supported");
  if (w <= 0 || h == 0) throw DataError(where + "bad dimensions");
  const bool top_down = h < 0;
  const std::size_t width = static_cast<std::size_t>(w);
  const std::size_t height = static_cast<std::size_t>(top_down ? -static_cast<std::int64_t>(h) : h);
  const std::size_t bytes = bpp / 8;
  const std::size_t stride = (width * bytes + 3) / 4 * 4;
  if (offset + stride * height > buf.size()) throw DataError(where + "truncated pixel data");

  ImageU8 img(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t y = top_down ? r : height - 1 - r;
    const std::uint8_t* row = &buf[offset + r * stride];
    for (std::size_t x = 0; x < width; ++x) {
      img.at(y, x, 0) = row[x * bytes + 2];
      img.at(y, x, 1) = row[x * bytes + 1];
      img.at(y, x, 2) = row[x * bytes + 0];
    }
  }
  return img;
}

void write_bmp(const std::filesystem::path& path, const ImageU8& image) {
  if (image.empty()) throw DataError("refusing to write an empty image to " + path.string());
  const std::size_t stride = (image.width * 3 + 3) / 4 * 4;
  const auto data_size = static_cast<std::uint32_t>(stride * image.height);
  std::vector<std::uint8_t> out;
  out.reserve(54 + data_size);
  out.push_back('B');
  out.push_back('M');
  wr32(out, 54 + data_size);
  wr32(out, 0);
  wr32(out, 54);
  wr32(out, 40);
  wr32(out, static_cast<std::uint32_t>(image.width));
  wr32(out, static_cast<std::uint32_t>(image.height));
  wr16(out, 1);
  wr16(out, 24);
  wr32(out, 0);
  wr32(out, data_size);
  wr32(out, 2835);  // 72 dpi
  wr32(out, 2835);
  wr32(out, 0);
  wr32(out, 0);
  for (std::size_t r = 0; r < image.height; ++r) {
    const std::size_t y = image.height - 1 - r;
    for (std::size_t x = 0; x < image.width; ++x) {
      out.push_back(image.at(y, x, 2));
      out.push_back(image.at(y, x, 1));
      out.push_back(image.at(y, x, 0));
    }
    for (std::size_t p = image.width * 3; p < stride; ++p) out.push_back(0);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed for " + path.string());
}

ImageU8 resize_bilinear(const ImageU8& image, std::size_t height, std::size_t width) {
  if (image.empty() || height == 0 || width == 0) throw DataError("resize needs non-empty source and target");
  if (height == image.height && width == image.width) return image;
  ImageU8 out(height, width);
  const double sy = static_cast<double>(image.height) / height;
  const double sx = static_cast<double>(image.width) / width;
  for (std::size_t y = 0; y < height; ++y) {
    // pixel-centre alignment
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = image.at(y0, x0, c) * (1 - wx) + image.at(y0, x1, c) * wx;
        const double bot = image.at(y1, x0, c) * (1 - wx) + image.at(y1, x1, c) * wx;
        out.at(y, x, c) = to_u8(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

}  // namespace padkit::img
