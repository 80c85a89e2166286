#include <cmath>
#include <random>

#include "doctest.h"
#include "skgcl/error.hpp"
#include "skgcl/gradcheck.hpp"
#include "skgcl/tape.hpp"
#include "support.hpp"

using namespace skgcl;

namespace {

ParamSet one(const std::string& name, DenseArray v) {
  ParamSet p;
  p.add(name, std::move(v));
  return p;
}

// Values in [0.1, 1] or [-1, -0.1] so relu stays away from its kink.
DenseArray off_kink(Shape shape, std::mt19937_64& rng) {
  DenseArray a = oracle::random_array(std::move(shape), rng, 0.1, 1.0);
  std::bernoulli_distribution flip(0.5);
  for (double& v : a.data())
    if (flip(rng)) v = -v;
  return a;
}

void expect_grad_ok(const GraphFn& fn, const ParamSet& p) {
  const GradCheckReport r = check_gradients(fn, p);
  CHECK_MESSAGE(r.passed(), "max relative error " << r.max_relative_error());
}

}  // namespace

TEST_CASE("sum of squares has gradient 2p") {
  const auto r = forward_backward(
      [](Tape&, const Bindings& b) { return sum(mul(b["p"], b["p"])); },
      one("p", DenseArray::vector({1.0, 2.0})));
  CHECK(r.loss == 5.0);
  CHECK(r.grads["p"] == DenseArray::vector({2.0, 4.0}));
}

TEST_CASE("unused parameter gets a zero gradient") {
  const auto r = forward_backward(
      [](Tape& t, const Bindings&) { return t.constant(DenseArray::scalar(3.0)); },
      one("p", DenseArray({2, 3}, 1.5)));
  CHECK(r.loss == 3.0);
  CHECK(r.grads["p"] == DenseArray({2, 3}, 0.0));
}

TEST_CASE("backward of sum is all ones") {
  std::mt19937_64 rng(3);
  const auto r = forward_backward([](Tape&, const Bindings& b) { return sum(b["x"]); },
                                  one("x", oracle::random_array({3, 4, 2}, rng)));
  CHECK(r.grads["x"] == DenseArray({3, 4, 2}, 1.0));
}

TEST_CASE("linear model passes a tight gradient check") {
  std::mt19937_64 rng(5);
  const DenseArray x = oracle::random_array({4, 3}, rng);
  GradCheckOptions opt;
  opt.tolerance = 1e-6;
  const auto report = check_gradients(
      [&](Tape& t, const Bindings& b) { return sum(matmul(t.constant(x), b["w"])); },
      one("w", oracle::random_array({3, 2}, rng)), opt);
  CHECK(report.passed());
}

TEST_CASE("relu away from the kink passes") {
  std::mt19937_64 rng(9);
  DenseArray x({5}, 0.0);
  for (double& v : x.data()) v = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
  expect_grad_ok([](Tape&, const Bindings& b) { return sum(mul(relu(b["x"]), relu(b["x"]))); },
                 one("x", x));
}

TEST_CASE("corrupted gradient fails with relative error near one") {
  std::mt19937_64 rng(11);
  const ParamSet p = one("x", oracle::random_array({6}, rng));
  const GraphFn fn = [](Tape&, const Bindings& b) { return sum(exp(b["x"])); };
  ParamSet bad = forward_backward(fn, p).grads;
  for (double& g : bad["x"].data()) g *= 2.0;
  const GradCheckReport r = compare_gradients(fn, p, bad);
  CHECK_FALSE(r.passed());
  CHECK(r.max_relative_error() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("every primitive matches central differences") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    ParamSet p;
    p.add("a", off_kink({3, 4}, rng));
    p.add("b", off_kink({4, 2}, rng));
    p.add("c", off_kink({3, 4}, rng));
    p.add("x", off_kink({2, 5, 3}, rng));
    p.add("w", off_kink({2, 3, 3}, rng));
    p.add("s", off_kink({1}, rng));
    const DenseArray weights = oracle::random_array({3, 2}, rng);

    // matmul, all transpose forms
    expect_grad_ok(
        [&](Tape& t, const Bindings& b) {
          const Var ab = matmul(b["a"], b["b"]);                   // 3x2
          const Var atc = matmul(b["a"], b["c"], true, false);     // 4x4
          const Var act = matmul(b["a"], b["c"], false, true);     // 3x3
          const Var btat = matmul(b["b"], b["a"], true, true);     // 2x3
          return add(add(sum(mul(ab, t.constant(weights))), scale(sum(mul(atc, atc)), 0.1)),
                     add(sum(exp(scale(act, 0.2))), sum(mul(btat, btat))));
        },
        p);
    // elementwise ops and broadcasting scalars
    expect_grad_ok(
        [](Tape&, const Bindings& b) {
          const Var e = add(mul(b["a"], b["c"]), sub(b["a"], b["s"]));
          return sum(mul(relu(e), add(e, mul(b["s"], b["s"]))));
        },
        p);
    // exp, log, softmax_rows, mean, mean_axis
    expect_grad_ok(
        [](Tape& t, const Bindings& b) {
          const Var sm = softmax_rows(b["a"]);
          const Var l = log(add(exp(b["c"]), t.constant(DenseArray::scalar(1.0))));
          return add(add(sum(mul(sm, b["c"])), mean(l)), sum(mean_axis(mul(b["x"], b["x"]), 1)));
        },
        p);
    // temporal_conv1d, l2_normalize, gather, reshape, stack
    expect_grad_ok(
        [](Tape&, const Bindings& b) {
          const Var y = temporal_conv1d(b["x"], b["w"]);          // 2x5x2
          const Var u = l2_normalize(reshape(y, {20}));
          const Var g = gather(b["a"], {0, 5, 11, 5}, {2, 2});
          const Var st = stack({b["a"], b["c"]});
          return add(add(sum(mul(u, u)), sum(mul(g, g))), add(sum(mul(st, st)), sum(exp(u))));
        },
        p);
  }
}

TEST_CASE("backward visits ops in reverse order and accumulates additively") {
  Tape t;
  const Var x = t.parameter(DenseArray::vector({1.0, -2.0}));
  const Var y = mul(x, x);
  const Var z = add(sum(y), sum(x));  // x used twice
  t.backward(z);
  CHECK(t.grad(x) == DenseArray::vector({3.0, -3.0}));
  const auto names = t.op_names();
  REQUIRE(names.size() == 4);
  CHECK(names.front() == "mul");
  CHECK(names.back() == "add");
}

TEST_CASE("gradient accumulation is independent of branch order") {
  std::mt19937_64 rng(4);
  const ParamSet p = one("x", oracle::random_array({4}, rng));
  const auto r1 = forward_backward(
      [](Tape&, const Bindings& b) { return add(sum(exp(b["x"])), sum(mul(b["x"], b["x"]))); }, p);
  const auto r2 = forward_backward(
      [](Tape&, const Bindings& b) { return add(sum(mul(b["x"], b["x"])), sum(exp(b["x"]))); }, p);
  CHECK(max_abs_diff(r1.grads["x"], r2.grads["x"]) < 1e-12);
}

TEST_CASE("non-finite intermediates raise NonFinite") {
  Tape t;
  const Var x = t.constant(DenseArray::vector({-1.0}));
  CHECK_THROWS_AS(log(x), NonFinite);
  const Var big = t.constant(DenseArray::vector({1000.0}));
  CHECK_THROWS_AS(exp(big), NonFinite);
}

TEST_CASE("incompatible shapes raise ShapeMismatch") {
  Tape t;
  const Var a = t.constant(DenseArray({2, 3}));
  const Var b = t.constant(DenseArray({2, 3}));
  CHECK_THROWS_AS(matmul(a, b), ShapeMismatch);
  CHECK_THROWS_AS(add(a, t.constant(DenseArray({3, 2}))), ShapeMismatch);
  CHECK_THROWS_AS(reshape(a, {5}), ShapeMismatch);
}

TEST_CASE("l2_normalize rejects the zero vector") {
  Tape t;
  CHECK_THROWS_AS(l2_normalize(t.constant(DenseArray({3}, 0.0))), ZeroVector);
}
