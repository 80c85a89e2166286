#pragma once

// Graph contrast losses over memory-bank samples.

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "skgcl/banks.hpp"
#include "skgcl/tape.hpp"

namespace skgcl {

enum class PositiveSampling { kRandom, kHard };
enum class NegativeSampling { kRandom, kHard, kRandomHard };
enum class ContrastLossKind { kInfoNce, kTriplet };
/// How the per-positive InfoNCE terms are combined.
enum class PositiveAggregation { kMean, kSum };

std::string_view to_string(PositiveSampling s);
std::string_view to_string(NegativeSampling s);
std::string_view to_string(ContrastLossKind k);
PositiveSampling parse_positive_sampling(std::string_view s);
NegativeSampling parse_negative_sampling(std::string_view s);
ContrastLossKind parse_loss_kind(std::string_view s);
PositiveAggregation parse_aggregation(std::string_view s);

struct ContrastConfig {
  double tau = 1.0;
  double alpha = 0.85;
  std::size_t hard_positives = 128;   // K_H^+
  std::size_t hard_negatives = 512;   // K_H^-
  std::size_t random_negatives = 512; // K_R^-
  double lambda = 1.0;
  double margin = 0.3;
  ContrastLossKind loss = ContrastLossKind::kInfoNce;
  PositiveSampling positive = PositiveSampling::kHard;
  NegativeSampling negative = NegativeSampling::kRandomHard;
  PositiveAggregation aggregation = PositiveAggregation::kMean;

  void validate() const;
  bool operator==(const ContrastConfig&) const = default;
};

struct SampledSets {
  std::vector<BankEntry> inst_pos;
  std::vector<BankEntry> inst_neg;
  /// m_sem of the anchor's class, when initialized.
  std::optional<BankEntry> sem_pos;
  /// Every initialized prototype of another class; age holds 0.
  std::vector<BankEntry> sem_neg;
};

/// a·b / (||a|| ||b||). Throws ZeroVector for norms below 1e-12.
double cosine_sim(std::span<const double> a, std::span<const double> b);

/// Draws the instance positives/negatives and the semantic sets for one anchor.
///
/// Hard positives are the same-class entries with the lowest similarity to
/// the anchor, hard negatives the other-class entries with the highest; ties
/// go to the older entry, then the lower class. Random draws are uniform
/// without replacement from the entries not already chosen. Counts larger than
/// the pool take the whole pool. Returns nullopt (EmptyClass) when the anchor's
/// class has neither instance entries nor a semantic prototype.
std::optional<SampledSets> sample_sets(const InstanceSnapshot& instances,
                                       const SemanticSnapshot& semantic,
                                       std::span<const double> anchor, std::size_t label,
                                       const ContrastConfig& config, std::mt19937_64& rng);

/// Multi-positive InfoNCE in exp form:
///   -agg_{p} log( e^{s_p/τ} / (e^{s_p/τ} + Σ_n e^{s_n/τ}) ),  s = cosine similarity.
/// Only `anchor` carries gradient. Zero when there are no negatives.
Var info_nce_multi(Var anchor, const std::vector<std::vector<double>>& positives,
                   const std::vector<std::vector<double>>& negatives, double tau,
                   PositiveAggregation aggregation = PositiveAggregation::kMean);
double info_nce_multi(std::span<const double> anchor,
                      const std::vector<std::vector<double>>& positives,
                      const std::vector<std::vector<double>>& negatives, double tau,
                      PositiveAggregation aggregation = PositiveAggregation::kMean);

/// Mean over (p, n) pairs of max(0, margin - s_p + s_n).
Var triplet_loss(Var anchor, const std::vector<std::vector<double>>& positives,
                 const std::vector<std::vector<double>>& negatives, double margin);
double triplet_loss(std::span<const double> anchor,
                    const std::vector<std::vector<double>>& positives,
                    const std::vector<std::vector<double>>& negatives, double margin);

/// L_NCE = instance term + semantic term; a term whose positives are missing contributes 0.
Var contrast_loss(Var anchor, const SampledSets& sets, const ContrastConfig& config);

/// L = L_CE + λ·L_NCE.
Var total_loss(Var cross_entropy, Var contrast, double lambda);
double total_loss(double cross_entropy, double contrast, double lambda);

std::vector<std::vector<double>> embeddings_of(const std::vector<BankEntry>& entries);

}  // namespace skgcl
