#pragma once

#include "glyco/model.hpp"

#include <filesystem>

namespace glyco {

// Self-describing little-endian binary checkpoint (see README for the exact
// byte layout): magic "GPCK", format version, dimension table, normalizers,
// flat parameter values, trailing FNV-1a checksum. Round-trips are bitwise.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void checkpoint_save(const ModelParams& params, const std::filesystem::path& path);
ModelParams checkpoint_load(const std::filesystem::path& path);

// In-memory encoding (identical bytes to the on-disk file); used by the
// leakage audit and the determinism tests to compare checkpoints directly.
std::vector<std::uint8_t> checkpoint_bytes(const ModelParams& params);

} // namespace glyco
