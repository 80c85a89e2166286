#pragma once

#include <cstddef>
#include <cstdint>

#include "skgcl/dense_array.hpp"
#include "skgcl/encoder.hpp"
#include "skgcl/tape.hpp"

namespace skgcl {

inline constexpr const char* kProjectionParam = "projection.W_G";

/// v = flatten(g) · W_G, flatten ordered (k outer, i middle, j inner).
/// g: (K_S, N, N), W_G: (K_S·N², C_g). Returns (C_g). No bias, no activation.
Var project_graph(Var graph, Var projection);

/// Value-level projection of an encoder graph.
DenseArray project_graph(const AdaptiveGraph& graph, const DenseArray& projection);

/// Adds projection.W_G (K_S·N² × C_g), uniform in ±sqrt(6 / (K_S·N² + C_g)).
void init_projection(ParamSet& params, std::size_t joints, std::size_t embedding_dim,
                     std::uint64_t seed);

}  // namespace skgcl
