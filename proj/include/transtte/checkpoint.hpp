#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "transtte/model.hpp"

namespace transtte {

// File layout, all little-endian:
//   "TTE1" | u32 version | config block | f64 target mean, std |
//   u64 value count | f64 values in ParamLayout order | u64 FNV-1a of all
//   preceding bytes
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Throws IoError.
void save_params(const ModelParams& params, const std::filesystem::path& path);

/// Throws MissingFile, IoError, CorruptFile (bad magic, truncation, checksum) or
/// VersionMismatch.
ModelParams load_params(const std::filesystem::path& path);

/// Short identifier derived from the checkpoint checksum, e.g. "tte1-0123abcd4567ef89".
std::string model_version(const ModelParams& params);

}  // namespace transtte
