#include "layoutgen/tensor.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace layoutgen::ag {

namespace {

// Small desk-scale matrices: a single BLAS thread is both faster and keeps
// results reproducible.
std::once_flag g_blas_once;
void init_blas() {
  std::call_once(g_blas_once, [] {
    if (openblas_set_num_threads) openblas_set_num_threads(1);
  });
}

// C[M,N] = alpha * op(A)[M,K] * op(B)[K,N] + beta * C, row-major.
void gemm(bool ta, bool tb, int M, int N, int K, const float* A, const float* B, float* C,
          float alpha = 1.f, float beta = 0.f) {
  init_blas();
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              M, N, K, alpha, A, ta ? M : K, B, tb ? K : N, beta, C, N);
}
void gemm(bool ta, bool tb, int M, int N, int K, const double* A, const double* B, double* C,
          double alpha = 1.0, double beta = 0.0) {
  init_blas();
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              M, N, K, alpha, A, ta ? M : K, B, tb ? K : N, beta, C, N);
}

std::string shape_to_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape != b.shape)
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_str(a.shape) +
                     " vs " + shape_to_str(b.shape));
}

template <class T>
size_t row_width(const Tensor<T>& a) {
  return a.shape.empty() ? 0 : a.numel() / static_cast<size_t>(a.shape[0]);
}

// Records `out` on the tape when any parent participates. The backward
// closure receives (tape, self) and accumulates into parent grad buffers.
template <class T>
void record(Tape<T>& tp, Tensor<T>& out, std::initializer_list<int> parents,
            typename Tape<T>::BackFn back) {
  bool tracked = false;
  for (int p : parents)
    if (p >= 0) tracked = true;
  if (!tracked) return;
  out.node = tp.add_node(out.numel(), std::vector<int>(parents), std::move(back));
}

}  // namespace

template <class T>
std::string Tensor<T>::shape_str() const {
  return shape_to_str(shape);
}

template <class T>
Tensor<T> matmul(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
    throw ShapeError("matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor<T> out = Tensor<T>::zeros({m, n});
  gemm(false, false, m, n, k, a.ptr(), b.ptr(), out.ptr());
  record(tp, out, {a.node, b.node}, [a, b, m, n, k](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    if (a.node >= 0) gemm(false, true, m, k, n, g.data(), b.ptr(), t.grad_buf(a.node).data(), T(1), T(1));
    if (b.node >= 0) gemm(true, false, k, n, m, a.ptr(), g.data(), t.grad_buf(b.node).data(), T(1), T(1));
  });
  return out;
}

template <class T>
Tensor<T> matmul_nt(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[1])
    throw ShapeError("matmul_nt: incompatible shapes " + a.shape_str() + " x " +
                     b.shape_str() + "^T");
  const int m = a.shape[0], k = a.shape[1], n = b.shape[0];
  Tensor<T> out = Tensor<T>::zeros({m, n});
  gemm(false, true, m, n, k, a.ptr(), b.ptr(), out.ptr());
  record(tp, out, {a.node, b.node}, [a, b, m, n, k](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    if (a.node >= 0) gemm(false, false, m, k, n, g.data(), b.ptr(), t.grad_buf(a.node).data(), T(1), T(1));
    if (b.node >= 0) gemm(true, false, n, k, m, g.data(), a.ptr(), t.grad_buf(b.node).data(), T(1), T(1));
  });
  return out;
}

template <class T>
Tensor<T> add(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
  record(tp, out, {a.node, b.node}, [an = a.node, bn = b.node, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    if (an >= 0) {
      std::vector<T>& ga = t.grad_buf(an);
      for (size_t i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (bn >= 0) {
      std::vector<T>& gb = t.grad_buf(bn);
      for (size_t i = 0; i < n; ++i) gb[i] += g[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> sub(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] - (*b.data)[i];
  record(tp, out, {a.node, b.node}, [an = a.node, bn = b.node, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    if (an >= 0) {
      std::vector<T>& ga = t.grad_buf(an);
      for (size_t i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (bn >= 0) {
      std::vector<T>& gb = t.grad_buf(bn);
      for (size_t i = 0; i < n; ++i) gb[i] -= g[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> add_bias(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b) {
  if (b.shape.size() != 1 || a.shape.empty() || a.shape.back() != b.shape[0])
    throw ShapeError("add_bias: " + a.shape_str() + " + " + b.shape_str());
  const size_t n = a.numel(), w = static_cast<size_t>(b.shape[0]);
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] + (*b.data)[i % w];
  record(tp, out, {a.node, b.node}, [an = a.node, bn = b.node, n, w](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    if (an >= 0) {
      std::vector<T>& ga = t.grad_buf(an);
      for (size_t i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (bn >= 0) {
      std::vector<T>& gb = t.grad_buf(bn);
      for (size_t i = 0; i < n; ++i) gb[i % w] += g[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> mul(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
  record(tp, out, {a.node, b.node}, [a, b, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    if (a.node >= 0) {
      std::vector<T>& ga = t.grad_buf(a.node);
      for (size_t i = 0; i < n; ++i) ga[i] += g[i] * (*b.data)[i];
    }
    if (b.node >= 0) {
      std::vector<T>& gb = t.grad_buf(b.node);
      for (size_t i = 0; i < n; ++i) gb[i] += g[i] * (*a.data)[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> scale(Tape<T>& tp, const Tensor<T>& a, double s) {
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = static_cast<T>((*a.data)[i] * s);
  record(tp, out, {a.node}, [an = a.node, s, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t i = 0; i < n; ++i) ga[i] += static_cast<T>(g[i] * s);
  });
  return out;
}

template <class T>
Tensor<T> transpose2d(Tape<T>& tp, const Tensor<T>& a) {
  if (a.shape.size() != 2) throw ShapeError("transpose2d: rank-2 required, got " + a.shape_str());
  const int m = a.shape[0], n = a.shape[1];
  Tensor<T> out = Tensor<T>::zeros({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  record(tp, out, {a.node}, [an = a.node, m, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(j) * m + i];
  });
  return out;
}

template <class T>
Tensor<T> reshape(Tape<T>& tp, const Tensor<T>& a, std::vector<int> shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  if (n != a.numel())
    throw ShapeError("reshape: cannot view " + a.shape_str() + " as " + shape_to_str(shape));
  Tensor<T> out;
  out.shape = std::move(shape);
  out.data = a.data;  // same storage
  record(tp, out, {a.node}, [an = a.node, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t i = 0; i < n; ++i) ga[i] += g[i];
  });
  return out;
}

template <class T>
Tensor<T> slice_rows(Tape<T>& tp, const Tensor<T>& a, int r0, int r1) {
  if (a.shape.empty() || r0 < 0 || r1 > a.shape[0] || r0 >= r1)
    throw ShapeError("slice_rows: bad range on " + a.shape_str());
  const size_t w = row_width(a);
  std::vector<int> shape = a.shape;
  shape[0] = r1 - r0;
  Tensor<T> out = Tensor<T>::zeros(shape);
  std::copy(a.ptr() + r0 * w, a.ptr() + r1 * w, out.ptr());
  record(tp, out, {a.node}, [an = a.node, r0, w, n = out.numel()](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t i = 0; i < n; ++i) ga[r0 * w + i] += g[i];
  });
  return out;
}

template <class T>
Tensor<T> slice_cols(Tape<T>& tp, const Tensor<T>& a, int c0, int c1) {
  if (a.shape.size() != 2 || c0 < 0 || c1 > a.shape[1] || c0 >= c1)
    throw ShapeError("slice_cols: bad range on " + a.shape_str());
  const int m = a.shape[0], n = a.shape[1], w = c1 - c0;
  Tensor<T> out = Tensor<T>::zeros({m, w});
  for (int i = 0; i < m; ++i)
    std::copy(a.ptr() + static_cast<size_t>(i) * n + c0, a.ptr() + static_cast<size_t>(i) * n + c1,
              out.ptr() + static_cast<size_t>(i) * w);
  record(tp, out, {a.node}, [an = a.node, m, n, w, c0](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j) ga[static_cast<size_t>(i) * n + c0 + j] += g[static_cast<size_t>(i) * w + j];
  });
  return out;
}

template <class T>
Tensor<T> concat_rows(Tape<T>& tp, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  std::vector<int> shape = parts[0].shape;
  size_t total_rows = 0;
  for (const Tensor<T>& p : parts) {
    if (p.shape.size() != shape.size())
      throw ShapeError("concat_rows: rank mismatch");
    for (size_t d = 1; d < shape.size(); ++d)
      if (p.shape[d] != shape[d]) throw ShapeError("concat_rows: trailing dim mismatch");
    total_rows += static_cast<size_t>(p.shape[0]);
  }
  shape[0] = static_cast<int>(total_rows);
  Tensor<T> out = Tensor<T>::zeros(shape);
  size_t off = 0;
  std::vector<int> parent_nodes;
  std::vector<size_t> offsets, counts;
  for (const Tensor<T>& p : parts) {
    std::copy(p.ptr(), p.ptr() + p.numel(), out.ptr() + off);
    parent_nodes.push_back(p.node);
    offsets.push_back(off);
    counts.push_back(p.numel());
    off += p.numel();
  }
  bool tracked = false;
  for (int n : parent_nodes)
    if (n >= 0) tracked = true;
  if (tracked) {
    out.node = tp.add_node(out.numel(), parent_nodes,
                           [parent_nodes, offsets, counts](Tape<T>& t, int self) {
                             const std::vector<T>& g = t.grad(self);
                             for (size_t p = 0; p < parent_nodes.size(); ++p) {
                               if (parent_nodes[p] < 0) continue;
                               std::vector<T>& gp = t.grad_buf(parent_nodes[p]);
                               for (size_t i = 0; i < counts[p]; ++i) gp[i] += g[offsets[p] + i];
                             }
                           });
  }
  return out;
}

template <class T>
Tensor<T> concat_cols(Tape<T>& tp, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const int m = parts[0].shape[0];
  int total = 0;
  for (const Tensor<T>& p : parts) {
    if (p.shape.size() != 2 || p.shape[0] != m) throw ShapeError("concat_cols: shape mismatch");
    total += p.shape[1];
  }
  Tensor<T> out = Tensor<T>::zeros({m, total});
  int coff = 0;
  std::vector<int> parent_nodes;
  std::vector<int> col_offs, col_ws;
  for (const Tensor<T>& p : parts) {
    const int w = p.shape[1];
    for (int i = 0; i < m; ++i)
      std::copy(p.ptr() + static_cast<size_t>(i) * w, p.ptr() + static_cast<size_t>(i + 1) * w,
                out.ptr() + static_cast<size_t>(i) * total + coff);
    parent_nodes.push_back(p.node);
    col_offs.push_back(coff);
    col_ws.push_back(w);
    coff += w;
  }
  bool tracked = false;
  for (int n : parent_nodes)
    if (n >= 0) tracked = true;
  if (tracked) {
    out.node = tp.add_node(out.numel(), parent_nodes,
                           [parent_nodes, col_offs, col_ws, m, total](Tape<T>& t, int self) {
                             const std::vector<T>& g = t.grad(self);
                             for (size_t p = 0; p < parent_nodes.size(); ++p) {
                               if (parent_nodes[p] < 0) continue;
                               std::vector<T>& gp = t.grad_buf(parent_nodes[p]);
                               const int w = col_ws[p];
                               for (int i = 0; i < m; ++i)
                                 for (int j = 0; j < w; ++j)
                                   gp[static_cast<size_t>(i) * w + j] +=
                                       g[static_cast<size_t>(i) * total + col_offs[p] + j];
                             }
                           });
  }
  return out;
}

template <class T>
Tensor<T> embedding(Tape<T>& tp, const Tensor<T>& table, const std::vector<int>& ids) {
  if (table.shape.size() != 2) throw ShapeError("embedding: table must be rank-2");
  const int V = table.shape[0], d = table.shape[1];
  for (int id : ids)
    if (id < 0 || id >= V) throw RangeError("embedding id " + std::to_string(id) + " outside table");
  Tensor<T> out = Tensor<T>::zeros({static_cast<int>(ids.size()), d});
  for (size_t i = 0; i < ids.size(); ++i)
    std::copy(table.ptr() + static_cast<size_t>(ids[i]) * d,
              table.ptr() + static_cast<size_t>(ids[i] + 1) * d, out.ptr() + i * d);
  record(tp, out, {table.node}, [tn = table.node, ids, d](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& gt = t.grad_buf(tn);
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < d; ++j) gt[static_cast<size_t>(ids[i]) * d + j] += g[i * d + j];
  });
  return out;
}

template <class T>
Tensor<T> gather_rows(Tape<T>& tp, const Tensor<T>& a, const std::vector<int>& ids) {
  if (a.shape.empty()) throw ShapeError("gather_rows: rank-0 input");
  const int Rn = a.shape[0];
  const size_t w = row_width(a);
  for (int id : ids)
    if (id < 0 || id >= Rn) throw RangeError("gather_rows id outside input");
  std::vector<int> shape = a.shape;
  shape[0] = static_cast<int>(ids.size());
  Tensor<T> out = Tensor<T>::zeros(shape);
  for (size_t i = 0; i < ids.size(); ++i)
    std::copy(a.ptr() + ids[i] * w, a.ptr() + (ids[i] + 1) * w, out.ptr() + i * w);
  record(tp, out, {a.node}, [an = a.node, ids, w](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t i = 0; i < ids.size(); ++i)
      for (size_t j = 0; j < w; ++j) ga[ids[i] * w + j] += g[i * w + j];
  });
  return out;
}

template <class T>
Tensor<T> softmax_rows(Tape<T>& tp, const Tensor<T>& a) {
  if (a.shape.empty()) throw ShapeError("softmax_rows: rank-0 input");
  const size_t w = static_cast<size_t>(a.shape.back());
  const size_t rows = a.numel() / w;
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  for (size_t r = 0; r < rows; ++r) {
    const T* x = a.ptr() + r * w;
    T* y = out.ptr() + r * w;
    T maxv = x[0];
    for (size_t j = 1; j < w; ++j) maxv = std::max(maxv, x[j]);
    if (!(maxv > -std::numeric_limits<T>::infinity())) continue;  // fully masked row
    T sum = 0;
    for (size_t j = 0; j < w; ++j) {
      y[j] = std::exp(x[j] - maxv);
      sum += y[j];
    }
    for (size_t j = 0; j < w; ++j) y[j] /= sum;
  }
  record(tp, out, {a.node}, [an = a.node, out, rows, w](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t r = 0; r < rows; ++r) {
      const T* p = out.ptr() + r * w;
      T dot = 0;
      for (size_t j = 0; j < w; ++j) dot += g[r * w + j] * p[j];
      for (size_t j = 0; j < w; ++j) ga[r * w + j] += p[j] * (g[r * w + j] - dot);
    }
  });
  return out;
}

template <class T>
Tensor<T> masked_fill(Tape<T>& tp, const Tensor<T>& a, const std::vector<uint8_t>& mask,
                      T value) {
  if (mask.size() != a.numel()) throw ShapeError("masked_fill: mask size mismatch");
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  const size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) (*out.data)[i] = mask[i] ? value : (*a.data)[i];
  record(tp, out, {a.node}, [an = a.node, mask, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t i = 0; i < n; ++i)
      if (!mask[i]) ga[i] += g[i];
  });
  return out;
}

template <class T>
Tensor<T> layer_norm(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps) {
  if (a.shape.empty() || gamma.shape.size() != 1 || beta.shape.size() != 1 ||
      gamma.shape[0] != a.shape.back() || beta.shape[0] != a.shape.back())
    throw ShapeError("layer_norm: " + a.shape_str() + " with gamma " + gamma.shape_str());
  const size_t w = static_cast<size_t>(a.shape.back());
  const size_t rows = a.numel() / w;
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  auto xhat = std::make_shared<std::vector<T>>(a.numel());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  for (size_t r = 0; r < rows; ++r) {
    const T* x = a.ptr() + r * w;
    T mu = 0;
    for (size_t j = 0; j < w; ++j) mu += x[j];
    mu /= static_cast<T>(w);
    T var = 0;
    for (size_t j = 0; j < w; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<T>(w);
    const T is = T(1) / std::sqrt(var + static_cast<T>(eps));
    (*inv_std)[r] = is;
    for (size_t j = 0; j < w; ++j) {
      (*xhat)[r * w + j] = (x[j] - mu) * is;
      out.ptr()[r * w + j] = (*xhat)[r * w + j] * gamma.ptr()[j] + beta.ptr()[j];
    }
  }
  record(tp, out, {a.node, gamma.node, beta.node},
         [an = a.node, gn = gamma.node, bn = beta.node, gamma, xhat, inv_std, rows,
          w](Tape<T>& t, int self) {
           const std::vector<T>& g = t.grad(self);
           for (size_t r = 0; r < rows; ++r) {
             const T* xh = xhat->data() + r * w;
             const T* gr = g.data() + r * w;
             if (gn >= 0) {
               std::vector<T>& gg = t.grad_buf(gn);
               for (size_t j = 0; j < w; ++j) gg[j] += gr[j] * xh[j];
             }
             if (bn >= 0) {
               std::vector<T>& gb = t.grad_buf(bn);
               for (size_t j = 0; j < w; ++j) gb[j] += gr[j];
             }
             if (an >= 0) {
               std::vector<T>& ga = t.grad_buf(an);
               T sum_gy = 0, sum_gyx = 0;
               for (size_t j = 0; j < w; ++j) {
                 const T gy = gr[j] * gamma.ptr()[j];
                 sum_gy += gy;
                 sum_gyx += gy * xh[j];
               }
               const T is = (*inv_std)[r];
               for (size_t j = 0; j < w; ++j) {
                 const T gy = gr[j] * gamma.ptr()[j];
                 ga[r * w + j] += is * (gy - (sum_gy + xh[j] * sum_gyx) / static_cast<T>(w));
               }
             }
           }
         });
  return out;
}

template <class T>
Tensor<T> gelu(Tape<T>& tp, const Tensor<T>& a) {
  // Exact erf formulation: x/2 * (1 + erf(x / sqrt(2))).
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  const size_t n = a.numel();
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  for (size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>((*a.data)[i]);
    (*out.data)[i] = static_cast<T>(0.5 * x * (1.0 + std::erf(x * kInvSqrt2)));
  }
  record(tp, out, {a.node}, [a, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(a.node);
    for (size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>((*a.data)[i]);
      const double d = 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
                       x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ga[i] += static_cast<T>(g[i] * d);
    }
  });
  return out;
}

template <class T>
Tensor<T> dropout(Tape<T>& tp, const Tensor<T>& a, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return a;
  if (p >= 1.0) throw RangeError("dropout probability must be < 1");
  const size_t n = a.numel();
  auto mask = std::make_shared<std::vector<uint8_t>>(n);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  Tensor<T> out = Tensor<T>::zeros(a.shape);
  for (size_t i = 0; i < n; ++i) {
    (*mask)[i] = rng.uniform() >= p;
    (*out.data)[i] = (*mask)[i] ? (*a.data)[i] * keep_scale : T(0);
  }
  record(tp, out, {a.node}, [an = a.node, mask, keep_scale, n](Tape<T>& t, int self) {
    const std::vector<T>& g = t.grad(self);
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t i = 0; i < n; ++i)
      if ((*mask)[i]) ga[i] += g[i] * keep_scale;
  });
  return out;
}

template <class T>
Tensor<T> sum_all(Tape<T>& tp, const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::zeros({1});
  T s = 0;
  for (size_t i = 0; i < a.numel(); ++i) s += (*a.data)[i];
  (*out.data)[0] = s;
  record(tp, out, {a.node}, [an = a.node, n = a.numel()](Tape<T>& t, int self) {
    const T g = t.grad(self)[0];
    std::vector<T>& ga = t.grad_buf(an);
    for (size_t i = 0; i < n; ++i) ga[i] += g;
  });
  return out;
}

template <class T>
Tensor<T> cross_entropy_sum(Tape<T>& tp, const Tensor<T>& logits,
                            const std::vector<int>& targets, int ignore_index, int* count) {
  if (logits.shape.size() != 2 || targets.size() != static_cast<size_t>(logits.shape[0]))
    throw ShapeError("cross_entropy_sum: logits " + logits.shape_str() + " with " +
                     std::to_string(targets.size()) + " targets");
  const int m = logits.shape[0], V = logits.shape[1];
  auto probs = std::make_shared<std::vector<T>>(static_cast<size_t>(m) * V);
  T loss = 0;
  int scored = 0;
  for (int r = 0; r < m; ++r) {
    if (targets[r] == ignore_index) continue;
    if (targets[r] < 0 || targets[r] >= V) throw RangeError("cross_entropy target outside vocab");
    const T* x = logits.ptr() + static_cast<size_t>(r) * V;
    T* pr = probs->data() + static_cast<size_t>(r) * V;
    T maxv = x[0];
    for (int j = 1; j < V; ++j) maxv = std::max(maxv, x[j]);
    T sum = 0;
    for (int j = 0; j < V; ++j) {
      pr[j] = std::exp(x[j] - maxv);
      sum += pr[j];
    }
    for (int j = 0; j < V; ++j) pr[j] /= sum;
    loss += std::log(sum) + maxv - x[targets[r]];
    ++scored;
  }
  if (count) *count = scored;
  Tensor<T> out = Tensor<T>::zeros({1});
  (*out.data)[0] = loss;
  record(tp, out, {logits.node},
         [ln = logits.node, probs, targets, ignore_index, m, V](Tape<T>& t, int self) {
           const T g = t.grad(self)[0];
           std::vector<T>& gl = t.grad_buf(ln);
           for (int r = 0; r < m; ++r) {
             if (targets[r] == ignore_index) continue;
             const T* pr = probs->data() + static_cast<size_t>(r) * V;
             for (int j = 0; j < V; ++j) gl[static_cast<size_t>(r) * V + j] += g * pr[j];
             gl[static_cast<size_t>(r) * V + targets[r]] -= g;
           }
         });
  return out;
}

template <class T>
void adam_step(std::vector<Tensor<T>*>& params, const std::vector<const std::vector<T>*>& grads,
               AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  ++state.step;
  const double eff_lr = state.effective_lr();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t p = 0; p < params.size(); ++p) {
    T* w = params[p]->ptr();
    const size_t n = params[p]->numel();
    if (state.m[p].size() != n) throw ShapeError("adam_step: moment shape mismatch");
    const std::vector<T>* g = grads[p];
    for (size_t i = 0; i < n; ++i) {
      const double gi = (g && !g->empty()) ? static_cast<double>((*g)[i]) : 0.0;
      state.m[p][i] = static_cast<T>(state.beta1 * state.m[p][i] + (1.0 - state.beta1) * gi);
      state.v[p][i] = static_cast<T>(state.beta2 * state.v[p][i] + (1.0 - state.beta2) * gi * gi);
      const double mhat = state.m[p][i] / bc1;
      const double vhat = state.v[p][i] / bc2;
      w[i] -= static_cast<T>(eff_lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

template <class T>
double grad_check(const std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)>& f,
                  const Tensor<T>& x, double fd_step) {
  Tape<T> tape;
  Tensor<T> xw = tape.watch(x);
  Tensor<T> loss = f(tape, xw);
  if (loss.numel() != 1) throw ShapeError("grad_check: f must be scalar-valued");
  if (!std::isfinite(static_cast<double>(loss.item())))
    throw NumericError("grad_check: non-finite loss");
  tape.backward(loss);
  std::vector<T> g_ad = tape.grad(xw.node);
  if (g_ad.empty()) g_ad.assign(x.numel(), T(0));

  auto eval = [&](const Tensor<T>& xv) {
    Tape<T> t2;
    const double v = static_cast<double>(f(t2, xv).item());
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite probe value");
    return v;
  };

  double max_err = 0;
  Tensor<T> probe = x;
  probe.data = std::make_shared<std::vector<T>>(*x.data);
  for (size_t i = 0; i < x.numel(); ++i) {
    const T orig = (*probe.data)[i];
    (*probe.data)[i] = orig + static_cast<T>(fd_step);
    const double fp = eval(probe);
    (*probe.data)[i] = orig - static_cast<T>(fd_step);
    const double fm = eval(probe);
    (*probe.data)[i] = orig;
    const double g_fd = (fp - fm) / (2.0 * fd_step);
    const double err =
        std::abs(static_cast<double>(g_ad[i]) - g_fd) / std::max(1.0, std::abs(g_fd));
    max_err = std::max(max_err, err);
    if (!std::isfinite(err)) throw NumericError("grad_check: non-finite gradient error");
  }
  return max_err;
}

// Explicit instantiations: float for training, double for checks.
#define LGINST(T)                                                                              \
  template struct Tensor<T>;                                                                   \
  template Tensor<T> matmul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> matmul_nt(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> sub(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> add_bias(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> scale(Tape<T>&, const Tensor<T>&, double);                               \
  template Tensor<T> transpose2d(Tape<T>&, const Tensor<T>&);                                 \
  template Tensor<T> reshape(Tape<T>&, const Tensor<T>&, std::vector<int>);                   \
  template Tensor<T> slice_rows(Tape<T>&, const Tensor<T>&, int, int);                        \
  template Tensor<T> slice_cols(Tape<T>&, const Tensor<T>&, int, int);                        \
  template Tensor<T> concat_rows(Tape<T>&, const std::vector<Tensor<T>>&);                    \
  template Tensor<T> concat_cols(Tape<T>&, const std::vector<Tensor<T>>&);                    \
  template Tensor<T> embedding(Tape<T>&, const Tensor<T>&, const std::vector<int>&);          \
  template Tensor<T> gather_rows(Tape<T>&, const Tensor<T>&, const std::vector<int>&);        \
  template Tensor<T> softmax_rows(Tape<T>&, const Tensor<T>&);                                \
  template Tensor<T> masked_fill(Tape<T>&, const Tensor<T>&, const std::vector<uint8_t>&, T); \
  template Tensor<T> layer_norm(Tape<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                                const Tensor<T>&, double);                                    \
  template Tensor<T> gelu(Tape<T>&, const Tensor<T>&);                                        \
  template Tensor<T> dropout(Tape<T>&, const Tensor<T>&, double, bool, Rng&);                 \
  template Tensor<T> sum_all(Tape<T>&, const Tensor<T>&);                                     \
  template Tensor<T> cross_entropy_sum(Tape<T>&, const Tensor<T>&, const std::vector<int>&,   \
                                       int, int*);                                            \
  template void adam_step(std::vector<Tensor<T>*>&, const std::vector<const std::vector<T>*>&,\
                          AdamState<T>&);                                                      \
  template double grad_check(const std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)>&,     \
                             const Tensor<T>&, double);

LGINST(float)
LGINST(double)
#undef LGINST

}  // namespace layoutgen::ag
