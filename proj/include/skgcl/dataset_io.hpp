#pragma once

#include <filesystem>
#include <string>

#include "skgcl/skeleton.hpp"

namespace skgcl {

// Binary dataset file, little-endian:
//   "SKGC", u32 version = 1,
//   u32 class_count, u32 sequence_count, u32 T, u32 N, u32 C,
//   per sequence: u32 label, u8 modality code, T·N·C float32 (t outer, n middle, c inner).

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::string encode_dataset(const Dataset& data);
/// Throws FormatError carrying the byte offset of the first violation.
Dataset decode_dataset(const std::string& bytes);

}  // namespace skgcl
