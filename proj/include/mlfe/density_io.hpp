#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mlfe/measures.hpp"

namespace mlfe {

/// Flat binary density file, little-endian:
///   "MLFE" | version u32 | kappa u32 | points u32 | lower f64 | upper f64 |
///   points^(1+kappa) f64 values in row-major multi-index order.
inline constexpr std::uint32_t kDensityFormatVersion = 1;

std::string encode_density(const JointDensity& density);
JointDensity decode_density(std::string_view bytes);

void write_density(const std::filesystem::path& path, const JointDensity& density);
JointDensity read_density(const std::filesystem::path& path);

/// Writes to `path.tmp` and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mlfe
