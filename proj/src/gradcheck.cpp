#include "skgcl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "skgcl/error.hpp"

namespace skgcl {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::max_relative_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_relative_error);
  return m;
}

GradCheckReport compare_gradients(const GraphFn& graph_fn, const ParamSet& params,
                                  const ParamSet& analytic, const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw BadConfig("gradient check epsilon must be positive");
  if (!(options.tolerance > 0.0)) throw BadConfig("gradient check tolerance must be positive");

  GradCheckReport report;
  report.tolerance = options.tolerance;
  ParamSet probe = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const DenseArray& grad = analytic[params.name(p)];
    GradCheckEntry entry{params.name(p), 0.0, true};
    DenseArray& theta = probe.at(p);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + options.epsilon;
      const double up = evaluate_loss(graph_fn, probe);
      theta[i] = saved - options.epsilon;
      const double down = evaluate_loss(graph_fn, probe);
      theta[i] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      if (!std::isfinite(numeric)) throw NonFinite("finite difference for " + entry.name);
      const double err =
          std::abs(grad[i] - numeric) / std::max(std::abs(numeric), options.floor);
      entry.max_relative_error = std::max(entry.max_relative_error, err);
    }
    entry.passed = entry.max_relative_error < options.tolerance;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

GradCheckReport check_gradients(const GraphFn& graph_fn, const ParamSet& params,
                                const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw BadConfig("gradient check epsilon must be positive");
  if (!(options.tolerance > 0.0)) throw BadConfig("gradient check tolerance must be positive");
  const LossAndGrads analytic = forward_backward(graph_fn, params);
  return compare_gradients(graph_fn, params, analytic.grads, options);
}

}  // namespace skgcl
