#pragma once

#include <string>
#include <vector>

#include "skgcl/tape.hpp"

namespace skgcl {

struct GradCheckEntry {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  bool passed() const;
  double max_relative_error() const;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor: the error of a scalar is |analytic - numeric| / max(|numeric|, floor).
  double floor = 1e-6;
};

/// Compares analytic gradients from forward_backward against central
/// differences (loss(θ+ε) - loss(θ-ε)) / 2ε for every scalar parameter.
GradCheckReport check_gradients(const GraphFn& graph_fn, const ParamSet& params,
                                const GradCheckOptions& options = {});

/// Same comparison against caller-supplied analytic gradients.
GradCheckReport compare_gradients(const GraphFn& graph_fn, const ParamSet& params,
                                  const ParamSet& analytic, const GradCheckOptions& options = {});

}  // namespace skgcl
