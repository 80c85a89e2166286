#include "skgcl/contrast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "skgcl/error.hpp"
#include "skgcl/instrumentation.hpp"

namespace skgcl {

std::string_view to_string(PositiveSampling s) {
  return s == PositiveSampling::kHard ? "hard" : "random";
}

std::string_view to_string(NegativeSampling s) {
  switch (s) {
    case NegativeSampling::kRandom:
      return "random";
    case NegativeSampling::kHard:
      return "hard";
    case NegativeSampling::kRandomHard:
      return "random+hard";
  }
  return "?";
}

std::string_view to_string(ContrastLossKind k) {
  return k == ContrastLossKind::kInfoNce ? "infonce" : "triplet";
}

PositiveSampling parse_positive_sampling(std::string_view s) {
  if (s == "hard" || s == "H") return PositiveSampling::kHard;
  if (s == "random" || s == "R") return PositiveSampling::kRandom;
  throw BadConfig("unknown positive sampling '" + std::string(s) + "'");
}

NegativeSampling parse_negative_sampling(std::string_view s) {
  if (s == "hard" || s == "H") return NegativeSampling::kHard;
  if (s == "random" || s == "R") return NegativeSampling::kRandom;
  if (s == "random+hard" || s == "R+H") return NegativeSampling::kRandomHard;
  throw BadConfig("unknown negative sampling '" + std::string(s) + "'");
}

ContrastLossKind parse_loss_kind(std::string_view s) {
  if (s == "infonce") return ContrastLossKind::kInfoNce;
  if (s == "triplet") return ContrastLossKind::kTriplet;
  throw BadConfig("unknown contrast loss '" + std::string(s) + "'");
}

PositiveAggregation parse_aggregation(std::string_view s) {
  if (s == "mean") return PositiveAggregation::kMean;
  if (s == "sum") return PositiveAggregation::kSum;
  throw BadConfig("unknown positive aggregation '" + std::string(s) + "'");
}

void ContrastConfig::validate() const {
  if (!(tau > 0.0)) throw BadConfig("temperature tau must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw BadConfig("momentum alpha must lie in (0, 1)");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw BadConfig("lambda must be non-negative");
  if (!std::isfinite(margin)) throw BadConfig("margin must be finite");
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("cosine_sim operands differ in length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (!(na >= 1e-12) || !(nb >= 1e-12)) throw ZeroVector("cosine_sim of a near-zero vector");
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

namespace {

struct Candidate {
  double sim;
  const BankEntry* entry;
};

// Orders by similarity (ascending when `lowest_first`), then older age, then lower class.
void rank(std::vector<Candidate>& c, bool lowest_first) {
  std::stable_sort(c.begin(), c.end(), [lowest_first](const Candidate& a, const Candidate& b) {
    if (a.sim != b.sim) return lowest_first ? a.sim < b.sim : a.sim > b.sim;
    if (a.entry->age != b.entry->age) return a.entry->age < b.entry->age;
    return a.entry->label < b.entry->label;
  });
}

// Moves `count` uniformly drawn candidates (without replacement) to the front.
void draw_front(std::vector<Candidate>& c, std::size_t count, std::mt19937_64& rng) {
  count = std::min(count, c.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, c.size() - 1);
    std::swap(c[i], c[pick(rng)]);
  }
}

std::vector<BankEntry> take(const std::vector<Candidate>& c, std::size_t from, std::size_t count) {
  std::vector<BankEntry> out;
  const std::size_t end = std::min(c.size(), from + count);
  for (std::size_t i = from; i < end; ++i) out.push_back(*c[i].entry);
  return out;
}

DenseArray unit_rows(const std::vector<std::vector<double>>& rows, std::size_t dim) {
  DenseArray out({rows.size(), dim});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != dim) throw ShapeMismatch("bank embedding size differs from anchor");
    const std::vector<double> u = unit_vector(rows[r]);
    std::copy(u.begin(), u.end(), out.data().begin() + r * dim);
  }
  return out;
}

// Cosine similarities (rows × 1) between the anchor and constant rows.
Var similarities(Var unit_anchor, const std::vector<std::vector<double>>& rows) {
  const std::size_t dim = unit_anchor.value().size();
  Tape& tape = *unit_anchor.tape();
  const Var table = tape.constant(unit_rows(rows, dim));
  return matmul(table, reshape(unit_anchor, {dim, 1}));
}

}  // namespace

std::optional<SampledSets> sample_sets(const InstanceSnapshot& instances,
                                       const SemanticSnapshot& semantic,
                                       std::span<const double> anchor, std::size_t label,
                                       const ContrastConfig& config, std::mt19937_64& rng) {
  note_contrast_op();
  std::vector<Candidate> same, other;
  for (const BankEntry& e : instances.entries) {
    const double s = cosine_sim(anchor, e.embedding);
    (e.label == label ? same : other).push_back({s, &e});
  }
  const bool has_proto = label < semantic.prototypes.size() && semantic.prototypes[label];
  if (same.empty() && !has_proto) return std::nullopt;

  SampledSets out;
  if (config.positive == PositiveSampling::kHard) {
    rank(same, true);
  } else {
    draw_front(same, config.hard_positives, rng);
  }
  out.inst_pos = take(same, 0, config.hard_positives);

  std::size_t hard = 0;
  if (config.negative != NegativeSampling::kRandom) {
    rank(other, false);
    hard = std::min(config.hard_negatives, other.size());
    out.inst_neg = take(other, 0, hard);
  }
  if (config.negative != NegativeSampling::kHard) {
    std::vector<Candidate> rest(other.begin() + static_cast<std::ptrdiff_t>(hard), other.end());
    draw_front(rest, config.random_negatives, rng);
    const auto drawn = take(rest, 0, config.random_negatives);
    out.inst_neg.insert(out.inst_neg.end(), drawn.begin(), drawn.end());
  }

  for (std::size_t c = 0; c < semantic.prototypes.size(); ++c) {
    const auto& proto = semantic.prototypes[c];
    if (!proto) continue;
    BankEntry e{static_cast<std::uint32_t>(c), 0, *proto};
    if (c == label) {
      out.sem_pos = std::move(e);
    } else {
      out.sem_neg.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<std::vector<double>> embeddings_of(const std::vector<BankEntry>& entries) {
  std::vector<std::vector<double>> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.embedding);
  return out;
}

Var info_nce_multi(Var anchor, const std::vector<std::vector<double>>& positives,
                   const std::vector<std::vector<double>>& negatives, double tau,
                   PositiveAggregation aggregation) {
  note_contrast_op();
  if (positives.empty()) throw EmptySet("info_nce_multi needs at least one positive");
  if (!(tau > 0.0)) throw BadConfig("temperature tau must be positive");
  const Var unit = l2_normalize(anchor);
  const Var pos_logits = scale(similarities(unit, positives), 1.0 / tau);
  if (negatives.empty()) return scale(sum(pos_logits), 0.0);
  const Var neg_mass = sum(exp(scale(similarities(unit, negatives), 1.0 / tau)));
  const Var terms = sub(log(add(exp(pos_logits), neg_mass)), pos_logits);
  return aggregation == PositiveAggregation::kMean ? mean(terms) : sum(terms);
}

double info_nce_multi(std::span<const double> anchor,
                      const std::vector<std::vector<double>>& positives,
                      const std::vector<std::vector<double>>& negatives, double tau,
                      PositiveAggregation aggregation) {
  Tape tape;
  const Var a = tape.constant(DenseArray::vector(anchor));
  return info_nce_multi(a, positives, negatives, tau, aggregation).value().item();
}

Var triplet_loss(Var anchor, const std::vector<std::vector<double>>& positives,
                 const std::vector<std::vector<double>>& negatives, double margin) {
  note_contrast_op();
  if (positives.empty() || negatives.empty()) {
    throw EmptySet("triplet_loss needs at least one positive and one negative");
  }
  Tape& tape = *anchor.tape();
  const Var unit = l2_normalize(anchor);
  const Var sp = similarities(unit, positives);  // (P, 1)
  const Var sn = similarities(unit, negatives);  // (Q, 1)
  const Var ones_p = tape.constant(DenseArray({positives.size(), 1}, 1.0));
  const Var ones_n = tape.constant(DenseArray({negatives.size(), 1}, 1.0));
  const Var pos_grid = matmul(sp, ones_n, false, true);  // [p][q] = s_p
  const Var neg_grid = matmul(ones_p, sn, false, true);  // [p][q] = s_q
  const Var hinge =
      relu(add(sub(neg_grid, pos_grid), tape.constant(DenseArray::scalar(margin))));
  return mean(hinge);
}

double triplet_loss(std::span<const double> anchor,
                    const std::vector<std::vector<double>>& positives,
                    const std::vector<std::vector<double>>& negatives, double margin) {
  Tape tape;
  const Var a = tape.constant(DenseArray::vector(anchor));
  return triplet_loss(a, positives, negatives, margin).value().item();
}

Var contrast_loss(Var anchor, const SampledSets& sets, const ContrastConfig& config) {
  note_contrast_op();
  std::vector<Var> terms;
  const auto inst_pos = embeddings_of(sets.inst_pos);
  const auto inst_neg = embeddings_of(sets.inst_neg);
  std::vector<std::vector<double>> sem_pos;
  if (sets.sem_pos) sem_pos.push_back(sets.sem_pos->embedding);
  const auto sem_neg = embeddings_of(sets.sem_neg);

  if (config.loss == ContrastLossKind::kInfoNce) {
    if (!inst_pos.empty()) {
      terms.push_back(info_nce_multi(anchor, inst_pos, inst_neg, config.tau, config.aggregation));
    }
    if (!sem_pos.empty()) {
      terms.push_back(info_nce_multi(anchor, sem_pos, sem_neg, config.tau, config.aggregation));
    }
  } else {
    if (!inst_pos.empty() && !inst_neg.empty()) {
      terms.push_back(triplet_loss(anchor, inst_pos, inst_neg, config.margin));
    }
    if (!sem_pos.empty() && !sem_neg.empty()) {
      terms.push_back(triplet_loss(anchor, sem_pos, sem_neg, config.margin));
    }
  }
  if (terms.empty()) return anchor.tape()->constant(DenseArray::scalar(0.0));
  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return total;
}

Var total_loss(Var cross_entropy, Var contrast, double lambda) {
  return add(cross_entropy, scale(contrast, lambda));
}

double total_loss(double cross_entropy, double contrast, double lambda) {
  return cross_entropy + lambda * contrast;
}

}  // namespace skgcl
