#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "skgcl/skeleton.hpp"

namespace skgcl {

/// Parameters of the synthetic skeleton task.
///
/// Every joint j carries a source oscillation A·sin(ω_j t + ψ_j)·d_j around a
/// shared rest pose, with a per-sequence random phase ψ_j drawn from
/// [0, phase_spread). Class k owns `pairs_per_class` coupling pairs (i, j, β):
/// joint i stops following its own source and is driven by β times the source
/// of joint j, so the two co-move. Classes differ only in which joints co-move.
struct SyntheticConfig {
  std::size_t class_count = 4;
  std::size_t per_class = 50;
  std::size_t frames = 16;
  std::size_t joints = 8;
  std::size_t channels = 3;
  std::uint64_t seed = 7;

  double amplitude = 1.0;
  /// Gaussian noise standard deviation as a fraction of `amplitude`.
  double noise = 0.05;
  double phase_spread = 1.5707963267948966;
  std::size_t pairs_per_class = 2;
};

/// Class-level structure shared by every sequence of a generated dataset.
struct CouplingPair {
  std::size_t follower = 0;
  std::size_t driver = 0;
  double gain = 1.0;
};

std::vector<std::vector<CouplingPair>> synthetic_couplings(const SyntheticConfig& config);

/// Deterministic in `config.seed`. Values are rounded to float32 precision so
/// the dataset survives the float32 file format bit-exactly.
Dataset generate_synthetic(const SyntheticConfig& config);

/// Stratified split: within each class, the first round(n·(1-test_fraction))
/// sequences (in dataset order) go to train, the rest to test.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double test_fraction);

}  // namespace skgcl
