#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mosanet/common/matrix.hpp"

namespace mosanet::nn {

using NamedMatrices = std::vector<std::pair<std::string, Matrix>>;

/// Binary archive: "MOSAPAR1", u32 count, then per entry u32 name length,
/// name bytes, u32 rows, u32 cols and rows*cols little-endian f64 row-major.
void write_archive(const std::filesystem::path& path, const NamedMatrices& entries);
NamedMatrices read_archive(const std::filesystem::path& path);

/// FNV-1a over names, shapes and raw values.
std::uint64_t hash_matrices(const NamedMatrices& entries);

}  // namespace mosanet::nn
