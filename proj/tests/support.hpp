#pragma once

// Random fixtures and scalar-loop reference implementations shared by the
// unit tests and the acceptance suite. Nothing here calls library math.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "skgcl/dense_array.hpp"

namespace oracle {

using skgcl::DenseArray;
using Vec = std::vector<double>;

inline DenseArray random_array(skgcl::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                               double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  DenseArray a(std::move(shape));
  for (double& v : a.data()) v = d(rng);
  return a;
}

inline Vec random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vec v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double cosine(const Vec& a, const Vec& b) { return dot(a, b) / (norm(a) * norm(b)); }

inline Vec unit(const Vec& a) {
  Vec out = a;
  const double n = norm(a);
  for (double& v : out) v /= n;
  return out;
}

// x: (N, T, C); graphs[k]: (N, N); filters[k]: (C, C').
inline DenseArray graph_conv(const DenseArray& x, const std::vector<DenseArray>& graphs,
                             const std::vector<DenseArray>& filters) {
  const std::size_t N = x.dim(0), T = x.dim(1), C = x.dim(2), Co = filters[0].dim(1);
  DenseArray out({N, T, Co}, 0.0);
  for (std::size_t k = 0; k < graphs.size(); ++k)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t o = 0; o < Co; ++o) {
          double s = 0.0;
          for (std::size_t j = 0; j < N; ++j)
            for (std::size_t c = 0; c < C; ++c)
              s += graphs[k].at(i, j) * x.at(j, t, c) * filters[k].at(c, o);
          out.at(i, t, o) += s;
        }
  return out;
}

// x: (N, T, C); w: (C', C, K); zero padding (K-1)/2.
inline DenseArray temporal_conv(const DenseArray& x, const DenseArray& w) {
  const std::size_t N = x.dim(0), T = x.dim(1), C = x.dim(2), Co = w.dim(0), K = w.dim(2);
  const long pad = static_cast<long>(K / 2);
  DenseArray out({N, T, Co}, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t o = 0; o < Co; ++o) {
        double s = 0.0;
        for (std::size_t d = 0; d < K; ++d) {
          const long src = static_cast<long>(t) + static_cast<long>(d) - pad;
          if (src < 0 || src >= static_cast<long>(T)) continue;
          for (std::size_t c = 0; c < C; ++c) s += w.at(o, c, d) * x.at(n, src, c);
        }
        out.at(n, t, o) = s;
      }
  return out;
}

// row_softmax((mean_t x θ)(mean_t x φ)^T / sqrt(C_e)), x: (N, T, C).
inline DenseArray attention(const DenseArray& x, const DenseArray& theta, const DenseArray& phi) {
  const std::size_t N = x.dim(0), T = x.dim(1), C = x.dim(2), E = theta.dim(1);
  std::vector<Vec> a(N, Vec(E, 0.0)), b(N, Vec(E, 0.0));
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      double m = 0.0;
      for (std::size_t t = 0; t < T; ++t) m += x.at(n, t, c);
      m /= static_cast<double>(T);
      for (std::size_t e = 0; e < E; ++e) {
        a[n][e] += m * theta.at(c, e);
        b[n][e] += m * phi.at(c, e);
      }
    }
  DenseArray out({N, N});
  for (std::size_t i = 0; i < N; ++i) {
    Vec row(N);
    for (std::size_t j = 0; j < N; ++j) row[j] = dot(a[i], b[j]) / std::sqrt(double(E));
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& r : row) z += (r = std::exp(r - mx));
    for (std::size_t j = 0; j < N; ++j) out.at(i, j) = row[j] / z;
  }
  return out;
}

// v[o] = Σ_{k,i,j} g[k][i][j] W[(k N + i) N + j][o].
inline Vec project(const DenseArray& g, const DenseArray& w) {
  const std::size_t K = g.dim(0), N = g.dim(1), Cg = w.dim(1);
  Vec v(Cg, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        for (std::size_t o = 0; o < Cg; ++o) v[o] += g.at(k, i, j) * w.at((k * N + i) * N + j, o);
  return v;
}

inline double info_nce(const Vec& anchor, const std::vector<Vec>& pos, const std::vector<Vec>& neg,
                       double tau, bool mean = true) {
  if (neg.empty()) return 0.0;
  double neg_mass = 0.0;
  for (const auto& n : neg) neg_mass += std::exp(cosine(anchor, n) / tau);
  double total = 0.0;
  for (const auto& p : pos) {
    const double e = std::exp(cosine(anchor, p) / tau);
    total += -std::log(e / (e + neg_mass));
  }
  return mean ? total / static_cast<double>(pos.size()) : total;
}

inline double triplet(const Vec& anchor, const std::vector<Vec>& pos, const std::vector<Vec>& neg,
                      double margin) {
  double total = 0.0;
  for (const auto& p : pos)
    for (const auto& n : neg)
      total += std::max(0.0, margin - cosine(anchor, p) + cosine(anchor, n));
  return total / static_cast<double>(pos.size() * neg.size());
}

inline std::vector<std::optional<Vec>> centroids(const std::vector<Vec>& xs,
                                                 const std::vector<std::size_t>& labels,
                                                 std::size_t K) {
  std::vector<std::optional<Vec>> out(K);
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto& c = out[labels[i]];
    if (!c) c = Vec(xs[i].size(), 0.0);
    for (std::size_t d = 0; d < xs[i].size(); ++d) (*c)[d] += xs[i][d];
    ++counts[labels[i]];
  }
  for (std::size_t k = 0; k < K; ++k)
    if (out[k])
      for (double& v : *out[k]) v /= static_cast<double>(counts[k]);
  return out;
}

inline double sqdist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// FIFO per class plus the momentum recurrence, coded from the definitions.
struct BankModel {
  std::size_t capacity;
  std::vector<std::deque<Vec>> fifo;
  std::vector<std::optional<Vec>> proto;

  BankModel(std::size_t classes, std::size_t cap) : capacity(cap), fifo(classes), proto(classes) {}

  void push(const Vec& v, std::size_t c) {
    fifo[c].push_back(unit(v));
    if (fifo[c].size() > capacity) fifo[c].pop_front();
  }

  void update(const Vec& v, std::size_t c, double alpha) {
    const Vec u = unit(v);
    if (!proto[c]) {
      proto[c] = u;
      return;
    }
    for (std::size_t i = 0; i < u.size(); ++i) (*proto[c])[i] = alpha * (*proto[c])[i] + (1 - alpha) * u[i];
  }
};

}  // namespace oracle
