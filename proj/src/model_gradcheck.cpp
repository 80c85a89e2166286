#include "skgcl/model_gradcheck.hpp"

#include <random>

#include "skgcl/banks.hpp"
#include "skgcl/encoder.hpp"
#include "skgcl/projection.hpp"
#include "skgcl/trainer.hpp"

namespace skgcl {

ModelGradCheckSetup toy_gradcheck_setup(std::uint64_t seed) {
  ModelGradCheckSetup s;
  s.spec.encoder = EncoderConfig{4, 3, {4, 6}, 4, 3, 3};
  s.spec.embedding_dim = 16;
  s.params = init_model_params(s.spec, seed);

  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    for (double& v : s.params.at(i).data()) v += 0.1 * normal(rng);
  }

  s.contrast.tau = 0.5;
  s.contrast.hard_positives = 2;
  s.contrast.hard_negatives = 2;
  s.contrast.random_negatives = 2;
  s.contrast.lambda = 1.0;

  const std::size_t K = s.spec.encoder.class_count, T = 6, N = 4, C = 3;
  MemoryBanks banks(K, 4, s.spec.embedding_dim);
  for (std::size_t i = 0; i < 4 * K; ++i) {
    std::vector<double> v(s.spec.embedding_dim);
    for (double& x : v) x = normal(rng);
    banks.record(v, i % K, s.contrast.alpha);
  }
  const BankSnapshots snap = banks.snapshot();

  const Encoder encoder(s.spec.encoder, s.spec.topology());
  for (std::uint32_t label = 0; label < 2; ++label) {
    SkeletonSequence seq{DenseArray({T, N, C}), label, Modality::kJoint};
    for (double& x : seq.frames.data()) x = normal(rng);
    const DenseArray g = encoder.forward_values(s.params, seq).graph.strengths;
    const std::vector<double> v =
        project_graph(AdaptiveGraph{g}, s.params[kProjectionParam]).storage();
    s.sets.push_back(*sample_sets(snap.instances, snap.semantic, v, label, s.contrast, rng));
    s.batch.push_back(std::move(seq));
  }
  return s;
}

GraphFn batch_loss_fn(const ModelGradCheckSetup& setup) {
  return [&setup](Tape& tape, const Bindings& params) {
    const Encoder encoder(setup.spec.encoder, setup.spec.topology());
    Var total = tape.constant(DenseArray::scalar(0.0));
    for (std::size_t i = 0; i < setup.batch.size(); ++i) {
      const SampledSets& sets = setup.sets[i];
      const SetSampler fixed = [&sets](std::span<const double>, std::size_t) {
        return std::optional<SampledSets>(sets);
      };
      total = add(total, sample_graph(encoder, params, setup.batch[i], setup.contrast, fixed).loss);
    }
    return scale(total, 1.0 / static_cast<double>(setup.batch.size()));
  };
}

GradCheckReport check_model_gradients(std::uint64_t seed, const GradCheckOptions& options) {
  const ModelGradCheckSetup setup = toy_gradcheck_setup(seed);
  return check_gradients(batch_loss_fn(setup), setup.params, options);
}

}  // namespace skgcl
