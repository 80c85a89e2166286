#pragma once

// Graph-distance statistics and per-class reporting.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace skgcl {

using Embedding = std::vector<double>;

struct ClassCentroids {
  /// s_c = mean of class c's embeddings; nullopt for classes without members.
  std::vector<std::optional<Embedding>> centroids;
  std::vector<std::size_t> counts;

  std::size_t class_count() const noexcept { return centroids.size(); }
};

ClassCentroids class_centroids(const std::vector<Embedding>& embeddings,
                               const std::vector<std::size_t>& labels, std::size_t class_count);

struct GraphDistances {
  double d_all = 0.0;
  double d_cor = 0.0;
  /// Present iff prediction != label.
  std::optional<double> d_mis;
  /// Squared distance to every class centroid.
  std::vector<double> per_class;
  /// 1-based position of the true class among per_class sorted ascending (ties by class index).
  std::size_t rank = 0;
};

/// Squared Euclidean distances to the class centroids:
/// d_all = mean_k ||g - s_k||², d_cor = ||g - s_label||², d_mis = ||g - s_prediction||².
GraphDistances graph_distances(std::span<const double> embedding, const ClassCentroids& centroids,
                               std::size_t label, std::size_t prediction);

struct SampleDistance {
  std::size_t sample_id = 0;
  std::size_t label = 0;
  std::size_t prediction = 0;
  GraphDistances distances;
};

struct DistanceAggregate {
  std::size_t count = 0;
  double mean_d_all = 0.0;
  double mean_d_cor = 0.0;
  double mean_d_mis = 0.0;  // incorrect samples only
};

struct DistanceReport {
  std::vector<SampleDistance> samples;
  DistanceAggregate correct;
  DistanceAggregate incorrect;
};

DistanceReport distance_report(const std::vector<Embedding>& embeddings,
                               const std::vector<std::size_t>& labels,
                               const std::vector<std::size_t>& predictions,
                               const ClassCentroids& centroids);

/// Inclusive rank interval [first, last].
struct RankBucket {
  std::size_t first = 1;
  std::size_t last = 1;
  std::size_t count = 0;
  std::size_t correct = 0;

  std::optional<double> accuracy() const;
};

/// {1}, {2..5}, {6..10}, {11..20}, {21..40}, {41..60}, then steps of 20, up to class_count.
std::vector<RankBucket> default_rank_buckets(std::size_t class_count);

/// Fills bucket populations from each sample's rank and correctness.
std::vector<RankBucket> rank_report(const DistanceReport& report, const std::vector<bool>& correct,
                                    std::vector<RankBucket> buckets);

/// correct_c / total_c; nullopt for classes absent from `labels`.
std::vector<std::optional<double>> per_class_accuracy(const std::vector<std::size_t>& predictions,
                                                      const std::vector<std::size_t>& labels,
                                                      std::size_t class_count);

/// Mean cosine similarity within classes minus mean cosine similarity across
/// classes, over all unordered sample pairs.
double cosine_separation(const std::vector<Embedding>& embeddings,
                         const std::vector<std::size_t>& labels);

/// TSV: header, then per sample label, prediction, graph embedding (g0..), feature (f0..).
void export_embeddings(const std::vector<Embedding>& embeddings,
                       const std::vector<Embedding>& features,
                       const std::vector<std::size_t>& labels,
                       const std::vector<std::size_t>& predictions,
                       const std::filesystem::path& path);

/// CSV: sample_id,label,prediction,d_all,d_cor,d_mis,rank (d_mis empty when correct).
void write_distance_csv(const DistanceReport& report, const std::filesystem::path& path);

}  // namespace skgcl
