#include "skgcl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "skgcl/contrast.hpp"
#include "skgcl/error.hpp"

namespace skgcl {

ClassCentroids class_centroids(const std::vector<Embedding>& embeddings,
                               const std::vector<std::size_t>& labels, std::size_t class_count) {
  if (embeddings.size() != labels.size()) throw LengthMismatch("embeddings and labels differ");
  if (embeddings.empty()) throw EmptySet("class_centroids needs at least one embedding");
  const std::size_t dim = embeddings.front().size();
  ClassCentroids out;
  out.centroids.resize(class_count);
  out.counts.assign(class_count, 0);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const std::size_t c = labels[i];
    if (c >= class_count) throw BadConfig("label outside class range");
    if (embeddings[i].size() != dim) throw ShapeMismatch("embeddings differ in length");
    auto& acc = out.centroids[c];
    if (!acc) acc = Embedding(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) (*acc)[d] += embeddings[i][d];
    ++out.counts[c];
  }
  for (std::size_t c = 0; c < class_count; ++c) {
    if (!out.centroids[c]) continue;
    const double n = static_cast<double>(out.counts[c]);
    for (double& v : *out.centroids[c]) v /= n;
  }
  return out;
}

namespace {

double squared_distance(std::span<const double> a, const Embedding& b) {
  if (a.size() != b.size()) throw ShapeMismatch("embedding and centroid differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

GraphDistances graph_distances(std::span<const double> embedding, const ClassCentroids& centroids,
                               std::size_t label, std::size_t prediction) {
  const std::size_t K = centroids.class_count();
  if (label >= K || prediction >= K) throw BadConfig("label or prediction outside class range");
  GraphDistances out;
  out.per_class.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    if (!centroids.centroids[k]) {
      throw MissingCentroid("no centroid for class " + std::to_string(k));
    }
    out.per_class[k] = squared_distance(embedding, *centroids.centroids[k]);
  }
  out.d_all = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) /
              static_cast<double>(K);
  out.d_cor = out.per_class[label];
  if (prediction != label) out.d_mis = out.per_class[prediction];
  std::size_t closer = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (out.per_class[k] < out.d_cor || (out.per_class[k] == out.d_cor && k < label)) ++closer;
  }
  out.rank = closer + 1;
  return out;
}

DistanceReport distance_report(const std::vector<Embedding>& embeddings,
                               const std::vector<std::size_t>& labels,
                               const std::vector<std::size_t>& predictions,
                               const ClassCentroids& centroids) {
  if (embeddings.size() != labels.size() || labels.size() != predictions.size()) {
    throw LengthMismatch("embeddings, labels and predictions differ in length");
  }
  DistanceReport out;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    SampleDistance s{i, labels[i], predictions[i],
                     graph_distances(embeddings[i], centroids, labels[i], predictions[i])};
    DistanceAggregate& agg = s.label == s.prediction ? out.correct : out.incorrect;
    ++agg.count;
    agg.mean_d_all += s.distances.d_all;
    agg.mean_d_cor += s.distances.d_cor;
    if (s.distances.d_mis) agg.mean_d_mis += *s.distances.d_mis;
    out.samples.push_back(std::move(s));
  }
  for (DistanceAggregate* agg : {&out.correct, &out.incorrect}) {
    if (agg->count == 0) continue;
    const double n = static_cast<double>(agg->count);
    agg->mean_d_all /= n;
    agg->mean_d_cor /= n;
    agg->mean_d_mis /= n;
  }
  return out;
}

std::optional<double> RankBucket::accuracy() const {
  if (count == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(count);
}

std::vector<RankBucket> default_rank_buckets(std::size_t class_count) {
  std::vector<std::size_t> starts{1, 2, 6, 11, 21, 41, 61};
  while (starts.back() <= class_count) starts.push_back(starts.back() + 20);
  std::vector<RankBucket> out;
  for (std::size_t i = 0; i + 1 < starts.size() && starts[i] <= class_count; ++i) {
    out.push_back({starts[i], std::min(starts[i + 1] - 1, class_count), 0, 0});
  }
  return out;
}

std::vector<RankBucket> rank_report(const DistanceReport& report, const std::vector<bool>& correct,
                                    std::vector<RankBucket> buckets) {
  if (correct.size() != report.samples.size()) {
    throw LengthMismatch("correctness flags and distance report differ in length");
  }
  for (std::size_t i = 0; i < report.samples.size(); ++i) {
    const std::size_t r = report.samples[i].distances.rank;
    for (auto& b : buckets) {
      if (r >= b.first && r <= b.last) {
        ++b.count;
        if (correct[i]) ++b.correct;
        break;
      }
    }
  }
  return buckets;
}

std::vector<std::optional<double>> per_class_accuracy(const std::vector<std::size_t>& predictions,
                                                      const std::vector<std::size_t>& labels,
                                                      std::size_t class_count) {
  if (predictions.size() != labels.size()) {
    throw LengthMismatch("predictions and labels differ in length");
  }
  std::vector<std::size_t> total(class_count, 0), hit(class_count, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) throw BadConfig("label outside class range");
    ++total[labels[i]];
    if (predictions[i] == labels[i]) ++hit[labels[i]];
  }
  std::vector<std::optional<double>> out(class_count);
  for (std::size_t c = 0; c < class_count; ++c) {
    if (total[c] > 0) out[c] = static_cast<double>(hit[c]) / static_cast<double>(total[c]);
  }
  return out;
}

double cosine_separation(const std::vector<Embedding>& embeddings,
                         const std::vector<std::size_t>& labels) {
  if (embeddings.size() != labels.size()) throw LengthMismatch("embeddings and labels differ");
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      const double s = cosine_sim(embeddings[i], embeddings[j]);
      if (labels[i] == labels[j]) {
        intra += s;
        ++n_intra;
      } else {
        inter += s;
        ++n_inter;
      }
    }
  }
  if (n_intra == 0 || n_inter == 0) throw EmptySet("cosine_separation needs intra and inter pairs");
  return intra / static_cast<double>(n_intra) - inter / static_cast<double>(n_inter);
}

void export_embeddings(const std::vector<Embedding>& embeddings,
                       const std::vector<Embedding>& features,
                       const std::vector<std::size_t>& labels,
                       const std::vector<std::size_t>& predictions,
                       const std::filesystem::path& path) {
  if (embeddings.size() != labels.size() || features.size() != labels.size() ||
      predictions.size() != labels.size()) {
    throw LengthMismatch("export_embeddings inputs differ in length");
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t gdim = embeddings.empty() ? 0 : embeddings.front().size();
  const std::size_t fdim = features.empty() ? 0 : features.front().size();
  f << "label\tprediction";
  for (std::size_t i = 0; i < gdim; ++i) f << "\tg" << i;
  for (std::size_t i = 0; i < fdim; ++i) f << "\tf" << i;
  f << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(v)));
    f << '\t' << buf;
  };
  for (std::size_t s = 0; s < labels.size(); ++s) {
    f << labels[s] << '\t' << predictions[s];
    for (double v : embeddings[s]) put(v);
    for (double v : features[s]) put(v);
    f << '\n';
  }
  if (!f) throw IoError("write failed for " + path.string());
}

void write_distance_csv(const DistanceReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << "sample_id,label,prediction,d_all,d_cor,d_mis,rank\n";
  char buf[64];
  for (const auto& s : report.samples) {
    f << s.sample_id << ',' << s.label << ',' << s.prediction << ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", s.distances.d_all, s.distances.d_cor);
    f << buf;
    if (s.distances.d_mis) {
      std::snprintf(buf, sizeof buf, "%.17g", *s.distances.d_mis);
      f << buf;
    }
    f << ',' << s.distances.rank << '\n';
  }
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace skgcl
