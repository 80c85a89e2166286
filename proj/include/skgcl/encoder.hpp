#pragma once

// Adaptive-graph GCN encoder.
//
// Each block builds K_S per-sequence graphs g^k = A_k + B_k + C_k(X), where A_k
// is a fixed degree-normalized skeleton partition (self, inward, outward), B_k
// a free trainable N×N matrix and C_k(X) a row-softmax attention over
// time-averaged joint features. The block then applies the graph convolution
// X_S = Σ_k g^k X W_S^k, ReLU, a temporal convolution and ReLU again.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "skgcl/dense_array.hpp"
#include "skgcl/skeleton.hpp"
#include "skgcl/tape.hpp"

namespace skgcl {

inline constexpr std::size_t kSubgraphs = 3;

struct EncoderConfig {
  std::size_t joints = 8;
  std::size_t in_channels = 3;
  std::vector<std::size_t> channels{8, 16, 32};
  std::size_t embed_channels = 8;
  std::size_t temporal_kernel = 5;
  std::size_t class_count = 4;

  std::size_t blocks() const { return channels.size(); }
  std::size_t feature_channels() const { return channels.back(); }
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

/// K_S×N×N connection strengths; entry (k, i, j) weighs the message from joint j to joint i.
struct AdaptiveGraph {
  DenseArray strengths;
};

/// Tape-level results of one forward pass.
struct ForwardVars {
  Var logits;   // (1, C_k)
  Var feature;  // (1, C_feat), GAP over (t, n)
  Var graph;    // (K_S, N, N), from the last block
};

/// Value-level results of one forward pass.
struct ForwardOutput {
  DenseArray logits;
  DenseArray feature;
  AdaptiveGraph graph;
};

/// Parameters of one sub-graph k of a block, bound on a tape.
struct SubgraphParams {
  Var static_adjacency;  // A_k, constant
  Var free_adjacency;    // B_k
  Var theta;             // (C_in, C_e)
  Var phi;               // (C_in, C_e)
};

/// g^k = A_k + B_k + row_softmax(mean_t(X) θ_k (mean_t(X) φ_k)^T / sqrt(C_e)).
/// `x` is (N, T, C_in).
Var build_adaptive_graph(Var x, const SubgraphParams& params);

/// Attention term C_k(X) alone.
Var graph_attention(Var x, Var theta, Var phi);

/// X_S = Σ_k g^k X W_S^k per frame. x: (N, T, C_in), graphs: K × (N, N),
/// filters: K × (C_in, C_out). Returns (N, T, C_out).
Var graph_convolution(Var x, const std::vector<Var>& graphs, const std::vector<Var>& filters);

/// x: (N, T, C), weight: (C_out, C, kernel). Shape-preserving in N and T.
Var temporal_convolution(Var x, Var weight);

/// -log softmax(logits)[label], max-shifted.
Var cross_entropy(Var logits, std::size_t label);

/// (T, N, C) frames to the encoder's (N, T, C) layout.
DenseArray joint_major(const DenseArray& frames);

class Encoder {
 public:
  Encoder(EncoderConfig config, const SkeletonTopology& topology);

  const EncoderConfig& config() const noexcept { return config_; }
  /// A_k for k = 0 (self), 1 (inward, towards the root), 2 (outward).
  const DenseArray& static_adjacency(std::size_t k) const { return static_adjacency_.at(k); }

  /// Parameters in declaration order:
  /// block{b}.B{k}, block{b}.theta{k}, block{b}.phi{k}, block{b}.W_S{k}, block{b}.W_T, classifier.
  /// B = 0 and classifier = 0; the rest uniform in ±sqrt(6 / (fan_in + fan_out)).
  ParamSet init_params(std::uint64_t seed) const;

  ForwardVars forward(const Bindings& params, const SkeletonSequence& seq) const;
  ForwardOutput forward_values(const ParamSet& params, const SkeletonSequence& seq) const;

 private:
  EncoderConfig config_;
  std::vector<DenseArray> static_adjacency_;
};

std::string block_param(std::size_t block, std::string_view name, std::size_t k);
std::string block_param(std::size_t block, std::string_view name);

}  // namespace skgcl
