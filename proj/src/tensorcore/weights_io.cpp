#include "padkit/weights_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace padkit {
namespace {

static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");

constexpr std::array<char, 8> kMagic = {'P', 'A', 'D', 'K', 'I', 'T', 'W', '\0'};

template <typename V>
void put(std::ofstream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::ifstream& in, const std::filesystem::path& path) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw std::runtime_error("truncated weight file: " + path.string());
  return v;
}

}  // namespace

template <typename T>
void save_weights(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kWeightFormatVersion);
  put<std::uint32_t>(out, sizeof(T));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(e.tensor.raw()), static_cast<std::streamsize>(e.tensor.size() * sizeof(T)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

template <typename T>
std::vector<NamedTensor<T>> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open weight file: " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a padkit weight file: " + path.string());
  const auto version = get<std::uint32_t>(in, path);
  if (version != kWeightFormatVersion) {
    throw std::runtime_error("unsupported weight file version " + std::to_string(version));
  }
  const auto width = get<std::uint32_t>(in, path);
  if (width != sizeof(T)) {
    throw std::runtime_error("weight file stores " + std::to_string(width * 8) + "-bit values, expected " +
                             std::to_string(sizeof(T) * 8));
  }
  const auto count = get<std::uint32_t>(in, path);
  std::vector<NamedTensor<T>> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(in, path);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(in, path));
    Tensor<T> t(shape);
    in.read(reinterpret_cast<char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(T)));
    if (!in) throw std::runtime_error("truncated weight file: " + path.string());
    entries.push_back({std::move(name), std::move(t)});
  }
  return entries;
}

template void save_weights<float>(const std::filesystem::path&, const std::vector<NamedTensor<float>>&);
template void save_weights<double>(const std::filesystem::path&, const std::vector<NamedTensor<double>>&);
template std::vector<NamedTensor<float>> load_weights<float>(const std::filesystem::path&);
template std::vector<NamedTensor<double>> load_weights<double>(const std::filesystem::path&);

}  // namespace padkit
