#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "wattcast/nn/tape.hpp"
#include "wattcast/random.hpp"

namespace wattcast::nn {

namespace detail {

inline void require_same_tape(const char* op, Var a, Var b) {
  if (a.tape != b.tape) throw ShapeError(std::string(op) + ": operands live on different tapes");
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

/// (outer, axis length, inner) decomposition of a shape around `axis`.
struct AxisView {
  std::size_t outer = 1, length = 1, inner = 1;
};

inline AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.length = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

inline bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

template <typename F, typename DF>
Var unary(Var a, F f, DF df_from_out_and_in) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id;
  return a.tape->record(std::move(y), {a}, [ia, df_from_out_and_in, out_id = a.tape->size()](Tape& t, const Tensor& g) {
    const Tensor& xin = t.value(Var{&t, ia});
    const Tensor& yout = t.value(Var{&t, out_id});
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df_from_out_and_in(yout[i], xin[i]);
  });
}

}  // namespace detail

// --- linear algebra -------------------------------------------------------------

/// (..., K) x (K, N) -> (..., N). Leading axes of `a` are flattened into rows.
inline Var matmul(Var a, Var b) {
  detail::require_same_tape("matmul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() < 1 || B.rank() != 2 || A.shape().back() != B.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(A.shape()) + " x " + shape_str(B.shape()));
  const std::size_t K = B.dim(0), N = B.dim(1), M = A.size() / K;
  Shape out_shape = A.shape();
  out_shape.back() = N;
  Tensor C(out_shape);
  const double* pa = A.raw();
  const double* pb = B.raw();
  double* pc = C.raw();
  for (std::size_t m = 0; m < M; ++m) {
    double* crow = pc + m * N;
    for (std::size_t k = 0; k < K; ++k) {
      const double av = pa[m * K + k];
      if (av == 0.0) continue;
      const double* brow = pb + k * N;
      for (std::size_t n = 0; n < N; ++n) crow[n] += av * brow[n];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {a, b}, [ia, ib, M, K, N](Tape& t, const Tensor& g) {
    const Tensor& A = t.value(Var{&t, ia});
    const Tensor& B = t.value(Var{&t, ib});
    const double* pg = g.raw();
    if (t.requires_grad(ia)) {
      double* ga = t.grad_slot(ia).raw();
      const double* pb = B.raw();
      for (std::size_t m = 0; m < M; ++m) {
        const double* grow = pg + m * N;
        for (std::size_t k = 0; k < K; ++k) {
          const double* brow = pb + k * N;
          double s = 0.0;
          for (std::size_t n = 0; n < N; ++n) s += grow[n] * brow[n];
          ga[m * K + k] += s;
        }
      }
    }
    if (t.requires_grad(ib)) {
      double* gb = t.grad_slot(ib).raw();
      const double* pa = A.raw();
      for (std::size_t m = 0; m < M; ++m) {
        const double* grow = pg + m * N;
        for (std::size_t k = 0; k < K; ++k) {
          const double av = pa[m * K + k];
          if (av == 0.0) continue;
          double* gbrow = gb + k * N;
          for (std::size_t n = 0; n < N; ++n) gbrow[n] += av * grow[n];
        }
      }
    }
  });
}

/// Elementwise a + b. When shapes differ, b's shape must be a trailing
/// suffix of a's and b is broadcast over the leading axes.
inline Var add(Var a, Var b) {
  detail::require_same_tape("add", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!detail::is_suffix(B.shape(), A.shape()))
    throw ShapeError("add: cannot broadcast " + shape_str(B.shape()) + " onto " + shape_str(A.shape()));
  Tensor C = A;
  const std::size_t inner = B.size(), outer = A.size() / inner;
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) C[o * inner + i] += B[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {a, b}, [ia, ib, inner, outer](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) t.grad_slot(ia) += g;
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_slot(ib);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) gb[i] += g[o * inner + i];
    }
  });
}

inline Var sub(Var a, Var b) {
  detail::require_same_tape("sub", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require_same_shape("sub", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] -= B[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) t.grad_slot(ia) += g;
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

/// Elementwise product of equally shaped tensors.
inline Var mul(Var a, Var b) {
  detail::require_same_tape("mul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  detail::require_same_shape("mul", A, B);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(std::move(C), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor& A = t.value(Var{&t, ia});
    const Tensor& B = t.value(Var{&t, ib});
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

inline Var scale(Var a, double c) {
  const Tensor& A = a.value();
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * c;
  const std::size_t ia = a.id;
  return a.tape->record(std::move(C), {a}, [ia, c](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
}

// --- activations ------------------------------------------------------------------

inline double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var sigmoid(Var a) {
  return detail::unary(a, sigmoid_scalar, [](double y, double) { return y * (1.0 - y); });
}

inline Var tanh(Var a) {
  return detail::unary(a, [](double x) { return std::tanh(x); }, [](double y, double) { return 1.0 - y * y; });
}

inline Var relu(Var a) {
  return detail::unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                       [](double, double x) { return x > 0.0 ? 1.0 : 0.0; });
}

/// Inverted dropout: kept units are scaled by 1 / (1 - rate) at train time so
/// that inference is the identity.
inline Var dropout(Var a, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ShapeError("dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return a;
  const Tensor& A = a.value();
  auto mask = std::make_shared<std::vector<double>>(A.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    C[i] = A[i] * (*mask)[i];
  }
  const std::size_t ia = a.id;
  return a.tape->record(std::move(C), {a}, [ia, mask](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*mask)[i];
  });
}

// --- shape manipulation -------------------------------------------------------------

inline Var reshape(Var a, Shape shape) {
  Tensor C = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id;
  return a.tape->record(std::move(C), {a}, [ia](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

/// Elements [start, start + length) along `axis`.
inline Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length) {
  const Tensor& A = a.value();
  if (axis >= A.rank() || length == 0 || start + length > A.dim(axis))
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") on axis " + std::to_string(axis) + " of " + shape_str(A.shape()));
  const auto v = detail::axis_view(A.shape(), axis);
  Shape out_shape = A.shape();
  out_shape[axis] = length;
  Tensor C(out_shape);
  const std::size_t chunk = length * v.inner;
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(A.raw() + (o * v.length + start) * v.inner, chunk, C.raw() + o * chunk);
  const std::size_t ia = a.id;
  return a.tape->record(std::move(C), {a}, [ia, v, start, chunk](Tape& t, const Tensor& g) {
    double* ga = t.grad_slot(ia).raw();
    for (std::size_t o = 0; o < v.outer; ++o) {
      double* dst = ga + (o * v.length + start) * v.inner;
      const double* src = g.raw() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

/// Index `index` along `axis`, removing that axis.
inline Var select(Var a, std::size_t axis, std::size_t index) {
  Var s = slice(a, axis, index, 1);
  Shape shape = a.shape();
  if (shape.size() == 1) return s;
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  // Reuse the sliced buffer under the reduced shape.
  return reshape(s, std::move(shape));
}

/// Joins tensors along `axis`; all other axes must agree.
inline Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> lengths;
  for (const Var& p : parts) {
    detail::require_same_tape("concat", parts.front(), p);
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) throw ShapeError("concat: " + shape_str(s) + " incompatible with " + shape_str(first));
    out_shape[axis] += s[axis];
    lengths.push_back(s[axis]);
  }
  const auto v = detail::axis_view(out_shape, axis);
  Tensor C(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& P = parts[p].value();
    const std::size_t chunk = lengths[p] * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o)
      std::copy_n(P.raw() + o * chunk, chunk, C.raw() + (o * v.length + offset) * v.inner);
    offset += lengths[p];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id);
  return parts.front().tape->record(std::move(C), parts, [ids, lengths, v](Tape& t, const Tensor& g) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      const std::size_t chunk = lengths[p] * v.inner;
      if (t.requires_grad(ids[p])) {
        double* gp = t.grad_slot(ids[p]).raw();
        for (std::size_t o = 0; o < v.outer; ++o) {
          const double* src = g.raw() + (o * v.length + offset) * v.inner;
          for (std::size_t i = 0; i < chunk; ++i) gp[o * chunk + i] += src[i];
        }
      }
      offset += lengths[p];
    }
  });
}

/// Stacks equally shaped tensors along a new axis.
inline Var stack(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  Shape expanded = parts.front().shape();
  if (axis > expanded.size()) throw ShapeError("stack: axis out of range");
  expanded.insert(expanded.begin() + static_cast<std::ptrdiff_t>(axis), 1);
  std::vector<Var> views;
  views.reserve(parts.size());
  for (const Var& p : parts) {
    if (p.shape() != parts.front().shape())
      throw ShapeError("stack: " + shape_str(p.shape()) + " vs " + shape_str(parts.front().shape()));
    views.push_back(reshape(p, expanded));
  }
  return concat(views, axis);
}

// --- convolution and pooling ----------------------------------------------------------

enum class Padding {
  causal,  ///< left zero-padding of (K-1)*dilation; output length equals input length
  valid,   ///< no padding; output length T - (K-1)*dilation
};

/// 1-D convolution over time, stride 1.
/// x: (B, T, C_in), w: (K, C_in, C_out) -> (B, T', C_out), where tap k reads
/// x[t + k*dilation - pad]. No bias; add one with add().
inline Var conv1d(Var x, Var w, std::size_t dilation = 1, Padding padding = Padding::causal) {
  detail::require_same_tape("conv1d", x, w);
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  if (X.rank() != 3 || W.rank() != 3 || X.dim(2) != W.dim(1) || dilation == 0)
    throw ShapeError("conv1d: input " + shape_str(X.shape()) + " incompatible with kernel " + shape_str(W.shape()));
  const std::size_t B = X.dim(0), T = X.dim(1), Cin = X.dim(2), K = W.dim(0), Cout = W.dim(2);
  const std::size_t span = (K - 1) * dilation;
  const std::size_t pad = padding == Padding::causal ? span : 0;
  if (padding == Padding::valid && span >= T)
    throw ShapeError("conv1d: receptive span " + std::to_string(span + 1) + " exceeds sequence length " +
                     std::to_string(T));
  const std::size_t Tout = padding == Padding::causal ? T : T - span;
  Tensor Y({B, Tout, Cout});
  const double* px = X.raw();
  const double* pw = W.raw();
  double* py = Y.raw();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < Tout; ++t) {
      double* yrow = py + (b * Tout + t) * Cout;
      for (std::size_t k = 0; k < K; ++k) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k * dilation) - static_cast<std::ptrdiff_t>(pad);
        if (src < 0) continue;
        const double* xrow = px + (b * T + static_cast<std::size_t>(src)) * Cin;
        const double* wk = pw + k * Cin * Cout;
        for (std::size_t c = 0; c < Cin; ++c) {
          const double xv = xrow[c];
          if (xv == 0.0) continue;
          const double* wrow = wk + c * Cout;
          for (std::size_t o = 0; o < Cout; ++o) yrow[o] += xv * wrow[o];
        }
      }
    }
  const std::size_t ix = x.id, iw = w.id;
  return x.tape->record(std::move(Y), {x, w}, [=](Tape& tp, const Tensor& g) {
    const Tensor& X = tp.value(Var{&tp, ix});
    const Tensor& W = tp.value(Var{&tp, iw});
    const bool need_x = tp.requires_grad(ix), need_w = tp.requires_grad(iw);
    double* gx = need_x ? tp.grad_slot(ix).raw() : nullptr;
    double* gw = need_w ? tp.grad_slot(iw).raw() : nullptr;
    const double* px = X.raw();
    const double* pw = W.raw();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < Tout; ++t) {
        const double* grow = g.raw() + (b * Tout + t) * Cout;
        for (std::size_t k = 0; k < K; ++k) {
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t + k * dilation) - static_cast<std::ptrdiff_t>(pad);
          if (src < 0) continue;
          const std::size_t xoff = (b * T + static_cast<std::size_t>(src)) * Cin;
          const std::size_t woff = k * Cin * Cout;
          for (std::size_t c = 0; c < Cin; ++c) {
            const double* wrow = pw + woff + c * Cout;
            if (need_x) {
              double s = 0.0;
              for (std::size_t o = 0; o < Cout; ++o) s += wrow[o] * grow[o];
              gx[xoff + c] += s;
            }
            if (need_w) {
              const double xv = px[xoff + c];
              if (xv == 0.0) continue;
              double* gwrow = gw + woff + c * Cout;
              for (std::size_t o = 0; o < Cout; ++o) gwrow[o] += xv * grow[o];
            }
          }
        }
      }
  });
}

/// Non-overlapping max pool over time: (B, T, C) -> (B, floor(T / p), C).
inline Var max_pool1d(Var x, std::size_t pool) {
  const Tensor& X = x.value();
  if (X.rank() != 3 || pool == 0 || X.dim(1) / pool == 0)
    throw ShapeError("max_pool1d: pool " + std::to_string(pool) + " collapses input " + shape_str(X.shape()));
  const std::size_t B = X.dim(0), T = X.dim(1), C = X.dim(2), To = T / pool;
  Tensor Y({B, To, C});
  auto argmax = std::make_shared<std::vector<std::size_t>>(Y.size());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < To; ++t)
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = (b * T + t * pool) * C + c;
        for (std::size_t j = 1; j < pool; ++j) {
          const std::size_t idx = (b * T + t * pool + j) * C + c;
          if (X[idx] > X[best]) best = idx;
        }
        const std::size_t o = (b * To + t) * C + c;
        Y[o] = X[best];
        (*argmax)[o] = best;
      }
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [ix, argmax](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_slot(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[(*argmax)[i]] += g[i];
  });
}

/// Non-overlapping average pool over time: (B, T, C) -> (B, floor(T / p), C).
inline Var avg_pool1d(Var x, std::size_t pool) {
  const Tensor& X = x.value();
  if (X.rank() != 3 || pool == 0 || X.dim(1) / pool == 0)
    throw ShapeError("avg_pool1d: pool " + std::to_string(pool) + " collapses input " + shape_str(X.shape()));
  const std::size_t B = X.dim(0), T = X.dim(1), C = X.dim(2), To = T / pool;
  const double inv = 1.0 / static_cast<double>(pool);
  Tensor Y({B, To, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < To; ++t)
      for (std::size_t j = 0; j < pool; ++j)
        for (std::size_t c = 0; c < C; ++c) Y[(b * To + t) * C + c] += inv * X[(b * T + t * pool + j) * C + c];
  const std::size_t ix = x.id;
  return x.tape->record(std::move(Y), {x}, [=](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_slot(ix);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < To; ++t)
        for (std::size_t j = 0; j < pool; ++j)
          for (std::size_t c = 0; c < C; ++c) gx[(b * T + t * pool + j) * C + c] += inv * g[(b * To + t) * C + c];
  });
}

// --- reductions and losses -----------------------------------------------------------------

inline Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id;
  return a.tape->record(Tensor::scalar(s), {a}, [ia](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_slot(ia);
    const double gv = g[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gv;
  });
}

inline Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

/// mean((pred - target)^2) over all elements.
inline Var mse_loss(Var pred, Var target) {
  detail::require_same_tape("mse_loss", pred, target);
  const Tensor& P = pred.value();
  const Tensor& Y = target.value();
  if (P.size() != Y.size())
    throw ShapeError("mse_loss: prediction " + shape_str(P.shape()) + " vs target " + shape_str(Y.shape()));
  const double n = static_cast<double>(P.size());
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double d = P[i] - Y[i];
    s += d * d;
  }
  const std::size_t ip = pred.id, iy = target.id;
  return pred.tape->record(Tensor::scalar(s / n), {pred, target}, [ip, iy, n](Tape& t, const Tensor& g) {
    const Tensor& P = t.value(Var{&t, ip});
    const Tensor& Y = t.value(Var{&t, iy});
    const double c = 2.0 * g[0] / n;
    if (t.requires_grad(ip)) {
      Tensor& gp = t.grad_slot(ip);
      for (std::size_t i = 0; i < P.size(); ++i) gp[i] += c * (P[i] - Y[i]);
    }
    if (t.requires_grad(iy)) {
      Tensor& gy = t.grad_slot(iy);
      for (std::size_t i = 0; i < P.size(); ++i) gy[i] -= c * (P[i] - Y[i]);
    }
  });
}

inline Var mse_loss(Var pred, const Tensor& target) { return mse_loss(pred, pred.tape->constant(target)); }

}  // namespace wattcast::nn
