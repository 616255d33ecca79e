#include "padkit/hashing.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace padkit {

std::string Fnv1a::hex() const { return fmt::format("{:016x}", state_); }

std::string hash_string(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.hex();
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Fnv1a h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    h.update(std::as_bytes(std::span(buf.data(), got)));
  }
  return h.hex();
}

}  // namespace padkit
