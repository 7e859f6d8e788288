#pragma once

// Per-track feature files: "AVMF", u32 version (1), u32 T, u32 D, then T*D
// little-endian f32 values in row-major order.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mug/tensor.hpp"

namespace mug::data {

inline constexpr std::uint32_t kFeatureVersion = 1;

std::vector<std::uint8_t> encode_features(const Tensor& values);
Tensor decode_features(const std::vector<std::uint8_t>& bytes);

Tensor read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Tensor& values);

}  // namespace mug::data
