#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "skgcl/banks.hpp"
#include "skgcl/checkpoint.hpp"
#include "skgcl/config.hpp"
#include "skgcl/contrast.hpp"
#include "skgcl/diagnostics.hpp"
#include "skgcl/encoder.hpp"
#include "skgcl/error.hpp"
#include "skgcl/skeleton.hpp"

namespace skgcl {

/// Training hit a non-finite value. `step()` counts optimizer steps from 0.
class NumericalAbort : public Error {
 public:
  NumericalAbort(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double loss_ce = 0.0;
  double loss_nce = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  double learning_rate = 0.0;
  double seconds = 0.0;
  /// Part of `seconds` spent sampling and evaluating the contrast loss.
  double contrast_seconds = 0.0;

  bool same_values(const EpochMetrics& other) const;
};

/// Draws contrast sets for an anchor embedding; nullopt skips the contrast term.
using SetSampler =
    std::function<std::optional<SampledSets>(std::span<const double> embedding, std::size_t label)>;

struct SampleGraph {
  Var loss;
  Var cross_entropy;
  std::optional<Var> contrast;
  /// Projected graph v; invalid when no sampler was given.
  Var embedding;
  Var logits;
  double contrast_seconds = 0.0;
};

/// Per-sample objective: cross-entropy, plus lambda times the contrast loss when
/// `sampler` is set and returns sets.
SampleGraph sample_graph(const Encoder& encoder, const Bindings& params,
                         const SkeletonSequence& seq, const ContrastConfig& config,
                         const SetSampler& sampler);

struct TrainData {
  Dataset train;
  Dataset test;
  SkeletonTopology topology;
};

/// Loads or generates the joint stream, splits it and derives config.modality.
TrainData prepare_data(const TrainConfig& config);

/// Re-expresses a dataset in `modality`; joint-stream input is derived, matching input kept.
Dataset to_modality(const Dataset& data, const SkeletonTopology& topology, Modality modality);

ModelSpec model_spec(const TrainConfig& config, const Dataset& train);

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> history;
  MemoryBanks banks;
  /// contrast time / (total time - contrast time), summed over epochs.
  double contrast_overhead = 0.0;
};

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& test_set);
TrainResult train(const TrainConfig& config);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::optional<double>> per_class;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> predictions;
  std::vector<std::vector<double>> probabilities;
  std::vector<Embedding> embeddings;  // projected graphs v
  std::vector<Embedding> features;    // pooled features f
  std::vector<Embedding> graphs;      // flattened raw graphs g
};

/// Forward passes only. `banks` is accepted so callers can show it is ignored.
EvalResult evaluate(const Model& model, const Dataset& data, const MemoryBanks* banks = nullptr);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(const std::vector<double>& values);

/// Per sample, argmax of the summed probability vectors. probs[m][s] is model m's vector for sample s.
std::vector<std::size_t> ensemble_predict(const std::vector<std::vector<std::vector<double>>>& probs);

struct EnsembleResult {
  double accuracy = 0.0;
  std::vector<std::size_t> predictions;
};

/// One model per modality, at most one each; `joints` is the joint stream.
EnsembleResult ensemble_eval(const std::vector<Model>& models, const Dataset& joints);

/// epoch,loss,loss_ce,loss_nce,train_acc,test_acc,lr,seconds,contrast_seconds
void write_metrics_csv(const std::vector<EpochMetrics>& history, const std::filesystem::path& path);

}  // namespace skgcl
