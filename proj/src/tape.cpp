#include "skgcl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skgcl/error.hpp"

namespace skgcl {

const DenseArray& Var::value() const { return tape_->value(id_); }

// ---- tape ----------------------------------------------------------------

Var Tape::push(std::string_view op, DenseArray value, bool requires_grad, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NonFinite(std::string("non-finite value produced by ") + std::string(op));
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(DenseArray value) { return push("constant", std::move(value), false, {}); }

Var Tape::parameter(DenseArray value) { return push("parameter", std::move(value), true, {}); }

Var Tape::record(std::string_view op, DenseArray value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw Error("operand recorded on a different tape");
    needs = needs || requires_grad(v.id());
  }
  ++op_count_;
  return push(op, std::move(value), needs, std::move(backward));
}

Var Tape::record(std::string_view op, DenseArray value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw Error("operand recorded on a different tape");
    needs = needs || requires_grad(v.id());
  }
  ++op_count_;
  return push(op, std::move(value), needs, std::move(backward));
}

DenseArray& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    node.grad = DenseArray(node.value.shape(), 0.0);
    node.has_grad = true;
  }
  return node.grad;
}

DenseArray Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.has_grad) return node.grad;
  return DenseArray(node.value.shape(), 0.0);
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw Error("backward root belongs to a different tape");
  if (value(root.id()).size() != 1) {
    throw ShapeMismatch("backward root must be a scalar, got " + shape_str(value(root.id()).shape()));
  }
  grad_buffer(root.id())[0] += 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward || !node.has_grad) continue;
    node.backward(*this, id);
    if (!node.grad.all_finite()) {
      throw NonFinite(std::string("non-finite gradient flowing out of ") + std::string(node.op));
    }
  }
}

std::vector<std::string> Tape::op_names() const {
  std::vector<std::string> out;
  for (const Node& n : nodes_) {
    if (n.op != "constant" && n.op != "parameter") out.emplace_back(n.op);
  }
  return out;
}

// ---- kernels -------------------------------------------------------------

namespace {

// C (m x n) += op(A) op(B). A is m x k (or k x m when ta), B is k x n (or n x k when tb).
void gemm(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
          std::size_t n, bool ta, bool tb) {
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      double* c = C + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double a = A[i * k + p];
        const double* b = B + p * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
      }
    }
  } else if (ta && !tb) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* b = B + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = A[p * m + i];
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* a = A + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* b = B + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a[p] * b[p];
        C[i * n + j] += s;
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += A[p * m + i] * B[j * k + p];
        C[i * n + j] += s;
      }
    }
  }
}

void require_rank(const DenseArray& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ShapeMismatch(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                        shape_str(a.shape()));
  }
}

enum class Broadcast { kNone, kLeftScalar, kRightScalar };

Broadcast check_elementwise(const DenseArray& a, const DenseArray& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (b.size() == 1) return Broadcast::kRightScalar;
  if (a.size() == 1) return Broadcast::kLeftScalar;
  throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

const Shape& result_shape(const DenseArray& a, const DenseArray& b, Broadcast mode) {
  return mode == Broadcast::kLeftScalar ? b.shape() : a.shape();
}

// Adds `g` into the gradient of `target`, reducing to a scalar when `target`
// was broadcast.
void accumulate(Tape& t, std::size_t target, const DenseArray& g, bool reduce) {
  if (!t.requires_grad(target)) return;
  DenseArray& dst = t.grad_buffer(target);
  if (reduce) {
    double s = 0.0;
    for (double x : g.data()) s += x;
    dst[0] += s;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
}

}  // namespace

// ---- primitives ----------------------------------------------------------

Var matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  const DenseArray& A = a.value();
  const DenseArray& B = b.value();
  require_rank(A, 2, "matmul");
  require_rank(B, 2, "matmul");
  const std::size_t m = transpose_a ? A.dim(1) : A.dim(0);
  const std::size_t k = transpose_a ? A.dim(0) : A.dim(1);
  const std::size_t kb = transpose_b ? B.dim(1) : B.dim(0);
  const std::size_t n = transpose_b ? B.dim(0) : B.dim(1);
  if (k != kb) {
    throw ShapeMismatch("matmul: " + shape_str(A.shape()) + (transpose_a ? "^T" : "") + " x " +
                        shape_str(B.shape()) + (transpose_b ? "^T" : ""));
  }
  DenseArray out({m, n}, 0.0);
  gemm(A.data().data(), B.data().data(), out.data().data(), m, k, n, transpose_a, transpose_b);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b},
                          [=](Tape& t, std::size_t self) {
                            const DenseArray& G = t.grad_buffer(self);
                            const DenseArray& Av = t.value(ia);
                            const DenseArray& Bv = t.value(ib);
                            if (t.requires_grad(ia)) {
                              double* dA = t.grad_buffer(ia).data().data();
                              if (!transpose_a) {
                                // dA (m x k) = G (m x n) op(B)^T
                                gemm(G.data().data(), Bv.data().data(), dA, m, n, k, false,
                                     !transpose_b);
                              } else {
                                // dA (k x m) = op(B) G^T
                                gemm(Bv.data().data(), G.data().data(), dA, k, n, m, transpose_b,
                                     true);
                              }
                            }
                            if (t.requires_grad(ib)) {
                              double* dB = t.grad_buffer(ib).data().data();
                              if (!transpose_b) {
                                // dB (k x n) = op(A)^T G
                                gemm(Av.data().data(), G.data().data(), dB, k, m, n, !transpose_a,
                                     false);
                              } else {
                                // dB (n x k) = G^T op(A)
                                gemm(G.data().data(), Av.data().data(), dB, n, m, k, true,
                                     transpose_a);
                              }
                            }
                          });
}

Var add(Var a, Var b) {
  const DenseArray& A = a.value();
  const DenseArray& B = b.value();
  const Broadcast mode = check_elementwise(A, B, "add");
  DenseArray out(result_shape(A, B, mode));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = A[mode == Broadcast::kLeftScalar ? 0 : i] + B[mode == Broadcast::kRightScalar ? 0 : i];
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("add", std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    accumulate(t, ia, G, mode == Broadcast::kLeftScalar);
    accumulate(t, ib, G, mode == Broadcast::kRightScalar);
  });
}

Var sub(Var a, Var b) {
  const DenseArray& A = a.value();
  const DenseArray& B = b.value();
  const Broadcast mode = check_elementwise(A, B, "sub");
  DenseArray out(result_shape(A, B, mode));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = A[mode == Broadcast::kLeftScalar ? 0 : i] - B[mode == Broadcast::kRightScalar ? 0 : i];
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("sub", std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    accumulate(t, ia, G, mode == Broadcast::kLeftScalar);
    if (t.requires_grad(ib)) {
      DenseArray neg = G;
      for (double& x : neg.data()) x = -x;
      accumulate(t, ib, neg, mode == Broadcast::kRightScalar);
    }
  });
}

Var mul(Var a, Var b) {
  const DenseArray& A = a.value();
  const DenseArray& B = b.value();
  const Broadcast mode = check_elementwise(A, B, "mul");
  DenseArray out(result_shape(A, B, mode));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = A[mode == Broadcast::kLeftScalar ? 0 : i] * B[mode == Broadcast::kRightScalar ? 0 : i];
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("mul", std::move(out), {a, b}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    const DenseArray& Av = t.value(ia);
    const DenseArray& Bv = t.value(ib);
    if (t.requires_grad(ia)) {
      DenseArray g(G.shape());
      for (std::size_t i = 0; i < G.size(); ++i) {
        g[i] = G[i] * Bv[mode == Broadcast::kRightScalar ? 0 : i];
      }
      accumulate(t, ia, g, mode == Broadcast::kLeftScalar);
    }
    if (t.requires_grad(ib)) {
      DenseArray g(G.shape());
      for (std::size_t i = 0; i < G.size(); ++i) {
        g[i] = G[i] * Av[mode == Broadcast::kLeftScalar ? 0 : i];
      }
      accumulate(t, ib, g, mode == Broadcast::kRightScalar);
    }
  });
}

Var scale(Var x, double factor) {
  DenseArray out = x.value();
  for (double& v : out.data()) v *= factor;
  const std::size_t ix = x.id();
  return x.tape()->record("scale", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < G.size(); ++i) dx[i] += factor * G[i];
  });
}

Var relu(Var x) {
  DenseArray out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id();
  return x.tape()->record("relu", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    const DenseArray& X = t.value(ix);
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < G.size(); ++i) {
      if (X[i] > 0.0) dx[i] += G[i];
    }
  });
}

Var exp(Var x) {
  DenseArray out = x.value();
  for (double& v : out.data()) v = std::exp(v);
  const std::size_t ix = x.id();
  return x.tape()->record("exp", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    const DenseArray& Y = t.value(self);
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i] * Y[i];
  });
}

Var log(Var x) {
  DenseArray out = x.value();
  for (double& v : out.data()) v = std::log(v);
  const std::size_t ix = x.id();
  return x.tape()->record("log", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    const DenseArray& X = t.value(ix);
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i] / X[i];
  });
}

Var softmax_rows(Var x) {
  const DenseArray& X = x.value();
  if (X.rank() == 0) throw ShapeMismatch("softmax_rows on rank-0 array");
  const std::size_t cols = X.shape().back();
  const std::size_t rows = X.size() / cols;
  DenseArray out(X.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = X.data().data() + r * cols;
    double* o = out.data().data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
  const std::size_t ix = x.id();
  return x.tape()->record("softmax_rows", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    const DenseArray& Y = t.value(self);
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t off = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += G[off + c] * Y[off + c];
      for (std::size_t c = 0; c < cols; ++c) dx[off + c] += Y[off + c] * (G[off + c] - dot);
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.tape()->record("sum", DenseArray::scalar(s), {x}, [=](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0];
    for (double& d : t.grad_buffer(ix).data()) d += g;
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.tape()->record("mean", DenseArray::scalar(s / n), {x}, [=](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0] / n;
    for (double& d : t.grad_buffer(ix).data()) d += g;
  });
}

Var mean_axis(Var x, std::size_t axis) {
  const DenseArray& X = x.value();
  if (axis >= X.rank()) {
    throw ShapeMismatch("mean_axis: axis " + std::to_string(axis) + " out of range for " +
                        shape_str(X.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= X.dim(i);
  for (std::size_t i = axis + 1; i < X.rank(); ++i) inner *= X.dim(i);
  const std::size_t len = X.dim(axis);
  Shape shape = X.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (shape.empty()) shape = {1};
  DenseArray out(shape, 0.0);
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      const double* in = X.data().data() + (o * len + l) * inner;
      double* dst = out.data().data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += in[i];
    }
  }
  for (double& v : out.data()) v *= inv;
  const std::size_t ix = x.id();
  return x.tape()->record("mean_axis", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t l = 0; l < len; ++l) {
        double* dst = dx.data().data() + (o * len + l) * inner;
        const double* g = G.data().data() + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += g[i] * inv;
      }
    }
  });
}

Var temporal_conv1d(Var x, Var weight) {
  const DenseArray& X = x.value();
  const DenseArray& W = weight.value();
  require_rank(X, 3, "temporal_conv1d");
  require_rank(W, 3, "temporal_conv1d");
  const std::size_t N = X.dim(0), T = X.dim(1), Cin = X.dim(2);
  const std::size_t Cout = W.dim(0), K = W.dim(2);
  if (W.dim(1) != Cin) {
    throw ShapeMismatch("temporal_conv1d: input " + shape_str(X.shape()) + " vs weight " +
                        shape_str(W.shape()));
  }
  if (K % 2 == 0) throw ShapeMismatch("temporal_conv1d: kernel size must be odd");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(K / 2);

  // Wk[d][c][o] = W[o][c][d], so the innermost loop runs over contiguous outputs.
  std::vector<double> Wk(K * Cin * Cout);
  for (std::size_t o = 0; o < Cout; ++o)
    for (std::size_t c = 0; c < Cin; ++c)
      for (std::size_t d = 0; d < K; ++d) Wk[(d * Cin + c) * Cout + o] = W.at(o, c, d);

  DenseArray out({N, T, Cout}, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      double* o = out.data().data() + (n * T + t) * Cout;
      for (std::size_t d = 0; d < K; ++d) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + d) - pad;
        if (s < 0 || s >= static_cast<std::ptrdiff_t>(T)) continue;
        const double* in = X.data().data() + (n * T + static_cast<std::size_t>(s)) * Cin;
        const double* wd = Wk.data() + d * Cin * Cout;
        for (std::size_t c = 0; c < Cin; ++c) {
          const double xv = in[c];
          const double* w = wd + c * Cout;
          for (std::size_t q = 0; q < Cout; ++q) o[q] += xv * w[q];
        }
      }
    }
  }

  const std::size_t ix = x.id(), iw = weight.id();
  return x.tape()->record(
      "temporal_conv1d", std::move(out), {x, weight},
      [=, Wk = std::move(Wk)](Tape& t, std::size_t self) {
        const DenseArray& G = t.grad_buffer(self);
        const DenseArray& Xv = t.value(ix);
        const bool need_x = t.requires_grad(ix);
        const bool need_w = t.requires_grad(iw);
        std::vector<double> dWk(need_w ? K * Cin * Cout : 0, 0.0);
        double* dX = need_x ? t.grad_buffer(ix).data().data() : nullptr;
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t tt = 0; tt < T; ++tt) {
            const double* g = G.data().data() + (n * T + tt) * Cout;
            for (std::size_t d = 0; d < K; ++d) {
              const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(tt + d) - pad;
              if (s < 0 || s >= static_cast<std::ptrdiff_t>(T)) continue;
              const std::size_t row = (n * T + static_cast<std::size_t>(s)) * Cin;
              const double* in = Xv.data().data() + row;
              for (std::size_t c = 0; c < Cin; ++c) {
                const double* w = Wk.data() + (d * Cin + c) * Cout;
                if (need_x) {
                  double acc = 0.0;
                  for (std::size_t q = 0; q < Cout; ++q) acc += g[q] * w[q];
                  dX[row + c] += acc;
                }
                if (need_w) {
                  double* dw = dWk.data() + (d * Cin + c) * Cout;
                  const double xv = in[c];
                  for (std::size_t q = 0; q < Cout; ++q) dw[q] += xv * g[q];
                }
              }
            }
          }
        }
        if (need_w) {
          DenseArray& dW = t.grad_buffer(iw);
          for (std::size_t o = 0; o < Cout; ++o)
            for (std::size_t c = 0; c < Cin; ++c)
              for (std::size_t d = 0; d < K; ++d) dW.at(o, c, d) += dWk[(d * Cin + c) * Cout + o];
        }
      });
}

Var l2_normalize(Var x) {
  const DenseArray& X = x.value();
  double sq = 0.0;
  for (double v : X.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm < 1e-12) throw ZeroVector("l2_normalize: vector norm below 1e-12");
  DenseArray out = X;
  for (double& v : out.data()) v /= norm;
  const std::size_t ix = x.id();
  return x.tape()->record("l2_normalize", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    const DenseArray& Y = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < G.size(); ++i) dot += G[i] * Y[i];
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < G.size(); ++i) dx[i] += (G[i] - Y[i] * dot) / norm;
  });
}

Var gather(Var x, std::vector<std::size_t> indices, Shape shape) {
  const DenseArray& X = x.value();
  if (shape_size(shape) != indices.size()) {
    throw ShapeMismatch("gather: " + std::to_string(indices.size()) + " indices for shape " +
                        shape_str(shape));
  }
  DenseArray out(std::move(shape));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= X.size()) throw ShapeMismatch("gather: index out of range");
    out[i] = X[indices[i]];
  }
  const std::size_t ix = x.id();
  return x.tape()->record("gather", std::move(out), {x},
                          [=, idx = std::move(indices)](Tape& t, std::size_t self) {
                            const DenseArray& G = t.grad_buffer(self);
                            DenseArray& dx = t.grad_buffer(ix);
                            for (std::size_t i = 0; i < idx.size(); ++i) dx[idx[i]] += G[i];
                          });
}

Var reshape(Var x, Shape shape) {
  DenseArray out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return x.tape()->record("reshape", std::move(out), {x}, [=](Tape& t, std::size_t self) {
    const DenseArray& G = t.grad_buffer(self);
    DenseArray& dx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i];
  });
}

Var stack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeMismatch("stack of zero arrays");
  const Shape& inner = parts.front().shape();
  const std::size_t chunk = shape_size(inner);
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  DenseArray out(shape);
  std::vector<std::size_t> ids;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (parts[p].shape() != inner) {
      throw ShapeMismatch("stack: " + shape_str(parts[p].shape()) + " vs " + shape_str(inner));
    }
    std::copy_n(parts[p].value().data().begin(), chunk, out.data().begin() + p * chunk);
    ids.push_back(parts[p].id());
  }
  return parts.front().tape()->record(
      "stack", std::move(out), parts, [=, ids = std::move(ids)](Tape& t, std::size_t self) {
        const DenseArray& G = t.grad_buffer(self);
        for (std::size_t p = 0; p < ids.size(); ++p) {
          if (!t.requires_grad(ids[p])) continue;
          DenseArray& dx = t.grad_buffer(ids[p]);
          for (std::size_t i = 0; i < chunk; ++i) dx[i] += G[p * chunk + i];
        }
      });
}

// ---- parameters ----------------------------------------------------------

void ParamSet::add(std::string name, DenseArray value) {
  if (index_.contains(name)) throw Error("duplicate parameter name: " + name);
  index_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

bool ParamSet::contains(std::string_view name) const { return index_.contains(std::string(name)); }

std::size_t ParamSet::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("unknown parameter: " + std::string(name));
  return it->second;
}

DenseArray& ParamSet::operator[](std::string_view name) { return values_[index_of(name)]; }

const DenseArray& ParamSet::operator[](std::string_view name) const {
  return values_[index_of(name)];
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], DenseArray(values_[i].shape(), 0.0));
  return out;
}

Bindings::Bindings(Tape& tape, const ParamSet& params, bool trainable)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars_.push_back(trainable ? tape.parameter(params.at(i)) : tape.constant(params.at(i)));
  }
}

Var Bindings::operator[](std::string_view name) const { return vars_[params_->index_of(name)]; }

LossAndGrads forward_backward(const GraphFn& graph_fn, const ParamSet& params) {
  Tape tape;
  Bindings bound(tape, params, true);
  Var loss = graph_fn(tape, bound);
  tape.backward(loss);
  LossAndGrads out;
  out.loss = loss.value().item();
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.grads.add(params.name(i), tape.grad(bound.at(i)));
  }
  return out;
}

double evaluate_loss(const GraphFn& graph_fn, const ParamSet& params) {
  Tape tape;
  Bindings bound(tape, params, false);
  return graph_fn(tape, bound).value().item();
}

}  // namespace skgcl
