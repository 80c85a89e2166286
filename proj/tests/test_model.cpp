#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "skgcl/encoder.hpp"
#include "skgcl/error.hpp"
#include "skgcl/gradcheck.hpp"
#include "skgcl/projection.hpp"
#include "support.hpp"

using namespace skgcl;

namespace {

std::vector<Var> constants(Tape& t, const std::vector<DenseArray>& arrays) {
  std::vector<Var> out;
  for (const auto& a : arrays) out.push_back(t.constant(a));
  return out;
}

DenseArray wave_frames(std::size_t T, std::size_t N, std::size_t C) {
  DenseArray f({T, N, C});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c) f.at(t, n, c) = std::sin(0.3 * t + 0.7 * n + 1.1 * c);
  return f;
}

DenseArray identity(std::size_t n) {
  DenseArray a({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  return a;
}

EncoderConfig toy_config() { return {4, 3, {4, 6}, 4, 3, 3}; }

double ce_value(std::vector<double> logits, std::size_t label) {
  Tape t;
  const std::size_t n = logits.size();
  const Var l = t.constant(DenseArray({1, n}, std::move(logits)));
  return cross_entropy(l, label).value().item();
}

}  // namespace

TEST_CASE("attention with zero projections is uniform") {
  std::mt19937_64 rng(1);
  Tape t;
  const Var x = t.constant(oracle::random_array({5, 4, 3}, rng));
  const Var zero = t.constant(DenseArray({3, 2}, 0.0));
  const DenseArray c = graph_attention(x, zero, zero).value();
  for (double v : c.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

  const DenseArray a = identity(5);
  const SubgraphParams p{t.constant(a), t.constant(DenseArray({5, 5}, 0.0)), zero, zero};
  const DenseArray g = build_adaptive_graph(x, p).value();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(g.at(i, j) == doctest::Approx(a.at(i, j) + 0.2));
}

TEST_CASE("attention over identical joints is uniform") {
  std::mt19937_64 rng(2);
  const DenseArray row = oracle::random_array({1, 6, 3}, rng);
  DenseArray x({4, 6, 3});
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t i = 0; i < 18; ++i) x[n * 18 + i] = row[i];
  Tape t;
  const DenseArray c = graph_attention(t.constant(x), t.constant(oracle::random_array({3, 2}, rng)),
                                       t.constant(oracle::random_array({3, 2}, rng)))
                           .value();
  for (double v : c.data()) CHECK(std::abs(v - 0.25) < 1e-12);
}

TEST_CASE("attention matches the oracle and rows sum to one") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseArray x = oracle::random_array({3, 5, 4}, rng);
    const DenseArray th = oracle::random_array({4, 3}, rng, -2.0, 2.0);
    const DenseArray ph = oracle::random_array({4, 3}, rng, -2.0, 2.0);
    Tape t;
    const DenseArray c = graph_attention(t.constant(x), t.constant(th), t.constant(ph)).value();
    CHECK(max_abs_diff(c, oracle::attention(x, th, ph)) < 1e-12);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(c.at(i, 0) + c.at(i, 1) + c.at(i, 2) - 1.0) < 1e-10);
  }
}

TEST_CASE("graph convolution examples") {
  Tape t;
  SUBCASE("swap permutation") {
    DenseArray x({2, 1, 1});
    x[0] = 1.0;
    x[1] = 2.0;
    DenseArray swap({2, 2}, 0.0);
    swap.at(0, 1) = swap.at(1, 0) = 1.0;
    const DenseArray y =
        graph_convolution(t.constant(x), {t.constant(swap)}, {t.constant(identity(1))}).value();
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 1.0);
  }
  SUBCASE("zero graph") {
    std::mt19937_64 rng(4);
    const DenseArray y = graph_convolution(t.constant(oracle::random_array({3, 4, 2}, rng)),
                                           {t.constant(DenseArray({3, 3}, 0.0))},
                                           {t.constant(oracle::random_array({2, 5}, rng))})
                             .value();
    CHECK(y == DenseArray({3, 4, 5}, 0.0));
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(graph_convolution(t.constant(DenseArray({3, 4, 2})), {t.constant(DenseArray({4, 4}))},
                                      {t.constant(DenseArray({2, 5}))}),
                    ShapeMismatch);
  }
}

TEST_CASE("graph convolution matches the loop oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseArray x = oracle::random_array({4, 3, 2}, rng);
    std::vector<DenseArray> g, w;
    for (int k = 0; k < 3; ++k) {
      g.push_back(oracle::random_array({4, 4}, rng));
      w.push_back(oracle::random_array({2, 5}, rng));
    }
    Tape t;
    const DenseArray y = graph_convolution(t.constant(x), constants(t, g), constants(t, w)).value();
    CHECK(max_abs_diff(y, oracle::graph_conv(x, g, w)) < 1e-12);
  }
}

TEST_CASE("temporal convolution examples") {
  std::mt19937_64 rng(6);
  Tape t;
  SUBCASE("centered delta is the identity") {
    const DenseArray x = oracle::random_array({3, 7, 2}, rng);
    DenseArray w({2, 2, 5}, 0.0);
    w.at(0, 0, 2) = w.at(1, 1, 2) = 1.0;
    CHECK(temporal_convolution(t.constant(x), t.constant(w)).value() == x);
  }
  SUBCASE("constant input: scaled interior, attenuated edges") {
    const DenseArray x({1, 8, 1}, 2.0);
    const DenseArray w({1, 1, 5}, 0.5);  // weights sum to 2.5
    const DenseArray y = temporal_convolution(t.constant(x), t.constant(w)).value();
    for (std::size_t s = 2; s < 6; ++s) CHECK(y[s] == doctest::Approx(5.0));
    CHECK(y[0] == doctest::Approx(3.0));
    CHECK(y[1] == doctest::Approx(4.0));
    CHECK(y[7] == doctest::Approx(3.0));
  }
  SUBCASE("even kernel is rejected") {
    CHECK_THROWS_AS(temporal_convolution(t.constant(DenseArray({1, 4, 1})), t.constant(DenseArray({1, 1, 4}))),
                    ShapeMismatch);
  }
}

TEST_CASE("temporal convolution matches the direct-summation oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseArray x = oracle::random_array({3, 8, 4}, rng);
    const DenseArray w = oracle::random_array({5, 4, 5}, rng);
    Tape t;
    CHECK(max_abs_diff(temporal_convolution(t.constant(x), t.constant(w)).value(),
                       oracle::temporal_conv(x, w)) < 1e-12);
  }
}

TEST_CASE("cross-entropy values") {
  CHECK(ce_value({0.3, 0.3, 0.3, 0.3}, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(ce_value({0.3, 0.3, 0.3, 0.3}, 2) == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(ce_value({0.0, 50.0, 0.0}, 1) < 1e-20);
  CHECK(ce_value({1.0, 2.0, 3.0}, 0) == doctest::Approx(-1.0 + std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0))));
  CHECK(ce_value({1.0, 2.0, 3.0}, 0) == doctest::Approx(2.4076).epsilon(1e-4));
}

TEST_CASE("cross-entropy is shift invariant") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> l = oracle::random_vec(5, rng);
    const double base = ce_value(l, 3);
    for (double& v : l) v += 7.25;
    CHECK(std::abs(ce_value(l, 3) - base) < 1e-12);
  }
}

TEST_CASE("static skeleton partitions are row-normalized") {
  const Encoder enc(toy_config(), SkeletonTopology::binary_tree(4));
  CHECK(enc.static_adjacency(0) == identity(4));
  const DenseArray& in = enc.static_adjacency(1);
  CHECK(in.at(0, 1) == 0.5);  // root receives from two children
  CHECK(in.at(1, 3) == 1.0);
  CHECK(in.at(3, 1) == 0.0);
  const DenseArray& out = enc.static_adjacency(2);
  CHECK(out.at(3, 1) == 1.0);
  CHECK(out.at(0, 1) == 0.0);
}

TEST_CASE("all-zero parameters give uniform predictions") {
  const Encoder enc(toy_config(), SkeletonTopology::binary_tree(4));
  ParamSet p = enc.init_params(1).zeros_like();
  const ForwardOutput o = enc.forward_values(p, {wave_frames(6, 4, 3), 0, Modality::kJoint});
  CHECK(o.logits == DenseArray({1, 3}, 0.0));
  Tape t;
  const DenseArray yhat = softmax_rows(t.constant(o.logits)).value();
  for (double v : yhat.data()) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("static sequences are unchanged by frame permutation") {
  const Encoder enc(toy_config(), SkeletonTopology::binary_tree(4));
  const ParamSet p = enc.init_params(3);
  std::mt19937_64 rng(9);
  const DenseArray pose = oracle::random_array({1, 4, 3}, rng);
  DenseArray frames({6, 4, 3});
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t i = 0; i < 12; ++i) frames[t * 12 + i] = pose[i];
  DenseArray shuffled({6, 4, 3});
  const std::size_t order[] = {3, 0, 5, 1, 4, 2};
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t i = 0; i < 12; ++i) shuffled[t * 12 + i] = frames[order[t] * 12 + i];
  const auto a = enc.forward_values(p, {frames, 0, Modality::kJoint});
  const auto b = enc.forward_values(p, {shuffled, 0, Modality::kJoint});
  CHECK(a.logits == b.logits);
  CHECK(a.feature == b.feature);
  CHECK(a.graph.strengths == b.graph.strengths);
}

TEST_CASE("forward is deterministic and matches recorded output") {
  const Encoder enc(toy_config(), SkeletonTopology::binary_tree(4));
  ParamSet p = enc.init_params(7);
  DenseArray& w = p["classifier"];
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.1 * std::cos(static_cast<double>(i));
  const SkeletonSequence seq{wave_frames(6, 4, 3), 0, Modality::kJoint};
  const ForwardOutput o = enc.forward_values(p, seq);
  const ForwardOutput again = enc.forward_values(p, seq);
  CHECK(o.logits == again.logits);
  CHECK(o.graph.strengths == again.graph.strengths);

  const std::vector<double> logits{-0.18018160405647118, -0.18072344232713328, -0.015108981171084578};
  const std::vector<double> feature{0.010858086312697579, 0.49486906750539328, 0.37449804063088316,
                                    1.128092461754107,    0.0022868799443358967, 0.86407846662420162};
  for (std::size_t i = 0; i < 3; ++i) CHECK(o.logits[i] == doctest::Approx(logits[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < 6; ++i) CHECK(o.feature[i] == doctest::Approx(feature[i]).epsilon(1e-12));
  double sq = 0.0;
  for (double v : o.graph.strengths.data()) sq += v * v;
  CHECK(sq == doctest::Approx(16.076015477685981).epsilon(1e-12));
  CHECK(o.graph.strengths.shape() == Shape{3, 4, 4});
}

TEST_CASE("encoder gradients through cross-entropy") {
  const Encoder enc(toy_config(), SkeletonTopology::binary_tree(4));
  ParamSet p = enc.init_params(5);
  std::mt19937_64 rng(10);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (double& v : p.at(i).data()) v += noise(rng);
  const SkeletonSequence seq{wave_frames(6, 4, 3), 2, Modality::kJoint};
  const GradCheckReport r = check_gradients(
      [&](Tape&, const Bindings& b) { return cross_entropy(enc.forward(b, seq).logits, seq.label); }, p);
  CHECK_MESSAGE(r.passed(), "max relative error " << r.max_relative_error());
}

TEST_CASE("projection examples and oracle") {
  std::mt19937_64 rng(11);
  Tape t;
  const DenseArray g = oracle::random_array({3, 4, 4}, rng);
  CHECK(project_graph(t.constant(g), t.constant(DenseArray({48, 8}, 0.0))).value() == DenseArray({8}, 0.0));
  CHECK(project_graph(t.constant(g), t.constant(identity(48))).value().storage() == g.storage());
  for (int trial = 0; trial < 20; ++trial) {
    const DenseArray gi = oracle::random_array({3, 4, 4}, rng);
    const DenseArray w = oracle::random_array({48, 8}, rng);
    const DenseArray v = project_graph(AdaptiveGraph{gi}, w);
    const oracle::Vec expect = oracle::project(gi, w);
    for (std::size_t o = 0; o < 8; ++o) CHECK(std::abs(v[o] - expect[o]) < 1e-12);
  }
  CHECK_THROWS_AS(project_graph(t.constant(g), t.constant(DenseArray({27, 8}))), ShapeMismatch);
}

TEST_CASE("projection is linear") {
  std::mt19937_64 rng(12);
  const DenseArray w = oracle::random_array({48, 8}, rng);
  const DenseArray g1 = oracle::random_array({3, 4, 4}, rng);
  const DenseArray g2 = oracle::random_array({3, 4, 4}, rng);
  DenseArray mix({3, 4, 4});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 1.5 * g1[i] - 0.25 * g2[i];
  const DenseArray v = project_graph(AdaptiveGraph{mix}, w);
  const DenseArray v1 = project_graph(AdaptiveGraph{g1}, w);
  const DenseArray v2 = project_graph(AdaptiveGraph{g2}, w);
  for (std::size_t o = 0; o < 8; ++o) CHECK(std::abs(v[o] - (1.5 * v1[o] - 0.25 * v2[o])) < 1e-10);
}

TEST_CASE("projection is vertex-aware") {
  std::mt19937_64 rng(13);
  const DenseArray w = oracle::random_array({48, 8}, rng);
  const DenseArray g = oracle::random_array({3, 4, 4}, rng);
  const std::size_t perm[] = {2, 0, 3, 1};
  DenseArray permuted({3, 4, 4});
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) permuted.at(k, perm[i], perm[j]) = g.at(k, i, j);
  CHECK(max_abs_diff(project_graph(AdaptiveGraph{g}, w), project_graph(AdaptiveGraph{permuted}, w)) > 1e-6);
}
