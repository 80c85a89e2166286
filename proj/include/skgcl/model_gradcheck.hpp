#pragma once

// Small end-to-end model for finite-difference checks of the full training loss.

#include <cstdint>
#include <vector>

#include "skgcl/checkpoint.hpp"
#include "skgcl/contrast.hpp"
#include "skgcl/gradcheck.hpp"
#include "skgcl/skeleton.hpp"

namespace skgcl {

struct ModelGradCheckSetup {
  ModelSpec spec;
  ParamSet params;
  ContrastConfig contrast;
  std::vector<SkeletonSequence> batch;
  /// Contrast sets per batch entry, drawn once from pre-seeded banks and then held fixed.
  std::vector<SampledSets> sets;
};

/// C_k = 3, N = 4, T = 6, two blocks, C_g = 16. Parameters are randomized
/// (including B and the classifier) so no gradient is trivially zero.
ModelGradCheckSetup toy_gradcheck_setup(std::uint64_t seed);

/// Mean over the batch of cross-entropy + lambda * contrast.
GraphFn batch_loss_fn(const ModelGradCheckSetup& setup);

GradCheckReport check_model_gradients(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace skgcl
