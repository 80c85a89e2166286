#include "skgcl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "skgcl/error.hpp"

namespace skgcl {

void EncoderConfig::validate() const {
  if (joints < 2) throw BadConfig("encoder needs at least 2 joints");
  if (in_channels < 1) throw BadConfig("encoder needs at least 1 input channel");
  if (channels.empty()) throw BadConfig("encoder needs at least one block");
  if (std::any_of(channels.begin(), channels.end(), [](std::size_t c) { return c == 0; })) {
    throw BadConfig("block channel counts must be positive");
  }
  if (embed_channels < 1) throw BadConfig("attention embedding size must be positive");
  if (temporal_kernel % 2 == 0) throw BadConfig("temporal kernel must be odd");
  if (class_count < 2) throw BadConfig("encoder needs at least 2 classes");
}

std::string block_param(std::size_t block, std::string_view name, std::size_t k) {
  return "block" + std::to_string(block) + "." + std::string(name) + std::to_string(k);
}

std::string block_param(std::size_t block, std::string_view name) {
  return "block" + std::to_string(block) + "." + std::string(name);
}

Var graph_attention(Var x, Var theta, Var phi) {
  if (x.shape().size() != 3) throw ShapeMismatch("graph_attention expects (N, T, C) input");
  const Var pooled = mean_axis(x, 1);  // (N, C_in)
  const Var query = matmul(pooled, theta);
  const Var key = matmul(pooled, phi);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(theta.shape().at(1)));
  return softmax_rows(scale(matmul(query, key, false, true), inv_sqrt));
}

Var build_adaptive_graph(Var x, const SubgraphParams& p) {
  return add(add(p.static_adjacency, p.free_adjacency), graph_attention(x, p.theta, p.phi));
}

Var graph_convolution(Var x, const std::vector<Var>& graphs, const std::vector<Var>& filters) {
  if (graphs.empty() || graphs.size() != filters.size()) {
    throw ShapeMismatch("graph_convolution needs one filter per sub-graph");
  }
  const Shape& xs = x.shape();
  if (xs.size() != 3) throw ShapeMismatch("graph_convolution expects (N, T, C) input");
  const std::size_t N = xs[0], T = xs[1], Cin = xs[2];
  const Var rows = reshape(x, {N * T, Cin});
  Var total;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    if (graphs[k].shape() != Shape{N, N}) {
      throw ShapeMismatch("graph " + shape_str(graphs[k].shape()) + " for " + std::to_string(N) +
                          " joints");
    }
    const std::size_t Cout = filters[k].shape().at(1);
    const Var mixed = reshape(matmul(rows, filters[k]), {N, T * Cout});
    const Var term = matmul(graphs[k], mixed);
    total = k == 0 ? term : add(total, term);
  }
  const std::size_t Cout = filters.front().shape().at(1);
  return reshape(total, {N, T, Cout});
}

Var temporal_convolution(Var x, Var weight) { return temporal_conv1d(x, weight); }

Var cross_entropy(Var logits, std::size_t label) {
  const DenseArray& z = logits.value();
  if (label >= z.size()) throw ShapeMismatch("label outside logit range");
  const double shift = *std::max_element(z.data().begin(), z.data().end());
  Tape& tape = *logits.tape();
  const Var shifted = sub(logits, tape.constant(DenseArray::scalar(shift)));
  const Var lse = log(sum(exp(shifted)));
  const Var picked = gather(shifted, {label}, {1});
  return sub(lse, picked);
}

DenseArray joint_major(const DenseArray& frames) {
  if (frames.rank() != 3) throw ShapeMismatch("frames must be (T, N, C)");
  const std::size_t T = frames.dim(0), N = frames.dim(1), C = frames.dim(2);
  DenseArray out({N, T, C});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c) out.at(n, t, c) = frames.at(t, n, c);
  return out;
}

namespace {

DenseArray row_normalized(DenseArray a) {
  const std::size_t n = a.dim(0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a.at(i, j);
    if (s > 0.0)
      for (std::size_t j = 0; j < n; ++j) a.at(i, j) /= s;
  }
  return a;
}

void glorot(DenseArray& a, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : a.data()) v = dist(rng);
}

}  // namespace

Encoder::Encoder(EncoderConfig config, const SkeletonTopology& topology)
    : config_(std::move(config)) {
  config_.validate();
  const std::size_t N = config_.joints;
  if (topology.joint_count() != N) {
    throw ShapeMismatch("topology has " + std::to_string(topology.joint_count()) +
                        " joints, encoder expects " + std::to_string(N));
  }
  DenseArray self({N, N}, 0.0), inward({N, N}, 0.0), outward({N, N}, 0.0);
  for (std::size_t j = 0; j < N; ++j) {
    self.at(j, j) = 1.0;
    if (j == topology.root()) continue;
    const std::size_t p = topology.parent(j);
    inward.at(p, j) = 1.0;   // child j sends to parent p
    outward.at(j, p) = 1.0;  // parent p sends to child j
  }
  static_adjacency_ = {self, row_normalized(inward), row_normalized(outward)};
}

ParamSet Encoder::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  const std::size_t N = config_.joints, Ce = config_.embed_channels, K = config_.temporal_kernel;
  ParamSet params;
  std::size_t cin = config_.in_channels;
  for (std::size_t b = 0; b < config_.blocks(); ++b) {
    const std::size_t cout = config_.channels[b];
    for (std::size_t k = 0; k < kSubgraphs; ++k) {
      params.add(block_param(b, "B", k), DenseArray({N, N}, 0.0));
      DenseArray theta({cin, Ce}), phi({cin, Ce}), ws({cin, cout});
      glorot(theta, cin, Ce, rng);
      glorot(phi, cin, Ce, rng);
      glorot(ws, cin, cout, rng);
      params.add(block_param(b, "theta", k), std::move(theta));
      params.add(block_param(b, "phi", k), std::move(phi));
      params.add(block_param(b, "W_S", k), std::move(ws));
    }
    DenseArray wt({cout, cout, K});
    glorot(wt, cout * K, cout * K, rng);
    params.add(block_param(b, "W_T"), std::move(wt));
    cin = cout;
  }
  params.add("classifier", DenseArray({config_.feature_channels(), config_.class_count}, 0.0));
  return params;
}

ForwardVars Encoder::forward(const Bindings& params, const SkeletonSequence& seq) const {
  if (seq.frames.rank() != 3 || seq.joint_count() != config_.joints ||
      seq.channel_count() != config_.in_channels) {
    throw ShapeMismatch("sequence " + shape_str(seq.frames.shape()) +
                        " does not match encoder input (T, " + std::to_string(config_.joints) +
                        ", " + std::to_string(config_.in_channels) + ")");
  }
  Tape& tape = params.tape();
  std::vector<Var> adjacency;
  for (const auto& a : static_adjacency_) adjacency.push_back(tape.constant(a));

  Var x = tape.constant(joint_major(seq.frames));
  std::vector<Var> graphs;
  for (std::size_t b = 0; b < config_.blocks(); ++b) {
    graphs.clear();
    std::vector<Var> filters;
    for (std::size_t k = 0; k < kSubgraphs; ++k) {
      const SubgraphParams sp{adjacency[k], params[block_param(b, "B", k)],
                              params[block_param(b, "theta", k)], params[block_param(b, "phi", k)]};
      graphs.push_back(build_adaptive_graph(x, sp));
      filters.push_back(params[block_param(b, "W_S", k)]);
    }
    x = relu(graph_convolution(x, graphs, filters));
    x = relu(temporal_convolution(x, params[block_param(b, "W_T")]));
  }
  const std::size_t N = x.shape()[0], T = x.shape()[1], C = x.shape()[2];
  const Var feature = reshape(mean_axis(reshape(x, {N * T, C}), 0), {1, C});
  const Var logits = matmul(feature, params["classifier"]);
  return {logits, feature, stack(graphs)};
}

ForwardOutput Encoder::forward_values(const ParamSet& params, const SkeletonSequence& seq) const {
  Tape tape;
  Bindings bound(tape, params, false);
  const ForwardVars out = forward(bound, seq);
  return {out.logits.value(), out.feature.value(), AdaptiveGraph{out.graph.value()}};
}

}  // namespace skgcl
