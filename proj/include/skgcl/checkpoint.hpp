#pragma once

// Checkpoint file:
//   "skgcl-checkpoint 1"
//   arch lines (key value...)
//   "config-hash <16 hex digits>"
//   "params <count>"
//   one "<name> <d0>x<d1>x..." line per array, declaration order
//   "end"
// followed by every array's values as little-endian float64, same order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skgcl/encoder.hpp"
#include "skgcl/skeleton.hpp"
#include "skgcl/tape.hpp"

namespace skgcl {

/// Everything that fixes parameter shapes and input interpretation.
struct ModelSpec {
  EncoderConfig encoder;
  std::size_t embedding_dim = 256;
  Modality modality = Modality::kJoint;
  std::vector<std::size_t> parents;

  /// Canonical text of the fields above.
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t hash() const;
  SkeletonTopology topology() const;

  bool operator==(const ModelSpec&) const = default;
};

struct Model {
  ModelSpec spec;
  ParamSet params;
};

/// Encoder parameters followed by projection.W_G.
ParamSet init_model_params(const ModelSpec& spec, std::uint64_t seed);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);
/// Throws ConfigHashMismatch when the file was written for a different spec.
Model load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected);

}  // namespace skgcl
