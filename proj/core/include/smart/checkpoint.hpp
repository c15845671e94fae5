#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smart/nn.hpp"

namespace smart {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;  // row-major

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Layout: "SMRT", u32 version, then for each tensor
//   u32 name_len, name bytes, u32 rank, u32 dims[rank], f64 values[prod(dims)]
// All integers and floats little-endian.
std::string encode_checkpoint(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

/// Tensors "<prefix>layer<k>.weight" and "<prefix>layer<k>.bias".
std::vector<NamedTensor> export_mlp(const Mlp& net, std::string_view prefix);
/// Rebuilds an Mlp from tensors carrying the given prefix. Optimizer state starts at zero.
Mlp import_mlp(std::span<const NamedTensor> tensors, std::string_view prefix,
               double slope = kLeakySlope);

}  // namespace smart
