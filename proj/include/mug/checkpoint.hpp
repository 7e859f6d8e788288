#pragma once

// Checkpoint file layout (all integers little-endian u32):
//   "MUGC" | version | count | count x { name_len | name bytes (UTF-8) | rank | dims... | f64 payload }

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mug/tensor.hpp"

namespace mug {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into existing parameters. Names and shapes must
// match one-to-one, otherwise LoadError.
void restore_into(const std::vector<NamedTensor>& saved, std::vector<NamedTensor>& params);

}  // namespace mug
