#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "padkit/tensor.hpp"

namespace padkit {

/// Weight file layout (version 1, little-endian):
///
///   bytes 0..7   magic "PADKITW\0"
///   u32          version (1)
///   u32          element width in bytes (4 = float32, 8 = float64)
///   u32          entry count
///   per entry:   u32 name length, name bytes (UTF-8, no terminator),
///                u32 rank, rank x u64 dims, prod(dims) raw elements
///
/// Values are written as their in-memory IEEE-754 bit patterns, so a
/// save/load round trip is bit-exact.
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

inline constexpr std::uint32_t kWeightFormatVersion = 1;

template <typename T>
void save_weights(const std::filesystem::path& path, const std::vector<NamedTensor<T>>& entries);

/// Throws std::runtime_error on malformed files or an element-width mismatch.
template <typename T>
std::vector<NamedTensor<T>> load_weights(const std::filesystem::path& path);

}  // namespace padkit
