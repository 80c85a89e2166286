#include "skgcl/projection.hpp"

#include <cmath>
#include <random>

#include "skgcl/error.hpp"

namespace skgcl {

Var project_graph(Var graph, Var projection) {
  const Shape& gs = graph.shape();
  const Shape& ws = projection.shape();
  if (gs.size() != 3 || gs[1] != gs[2] || ws.size() != 2 || ws[0] != gs[0] * gs[1] * gs[2]) {
    throw ShapeMismatch("project_graph: graph " + shape_str(gs) + " vs W_G " + shape_str(ws));
  }
  const Var flat = reshape(graph, {1, ws[0]});
  return reshape(matmul(flat, projection), {ws[1]});
}

DenseArray project_graph(const AdaptiveGraph& graph, const DenseArray& projection) {
  Tape tape;
  return project_graph(tape.constant(graph.strengths), tape.constant(projection)).value();
}

void init_projection(ParamSet& params, std::size_t joints, std::size_t embedding_dim,
                     std::uint64_t seed) {
  if (embedding_dim < 1) throw BadConfig("graph embedding size must be positive");
  const std::size_t rows = kSubgraphs * joints * joints;
  DenseArray w({rows, embedding_dim});
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + embedding_dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : w.data()) v = dist(rng);
  params.add(kProjectionParam, std::move(w));
}

}  // namespace skgcl
