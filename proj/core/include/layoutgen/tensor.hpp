#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "layoutgen/errors.hpp"
#include "layoutgen/rng.hpp"

namespace layoutgen::ag {

// Dense row-major tensor. `node` links the tensor to a Tape when it
// participates in a recorded computation; -1 means constant. Data is shared,
// ops always allocate fresh outputs.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::shared_ptr<std::vector<T>> data;
  int node = -1;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<T> d)
      : shape(std::move(s)), data(std::make_shared<std::vector<T>>(std::move(d))) {}

  static Tensor zeros(std::vector<int> s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return Tensor(std::move(s), std::vector<T>(n, T(0)));
  }
  static Tensor full(std::vector<int> s, T v) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return Tensor(std::move(s), std::vector<T>(n, v));
  }

  size_t numel() const { return data ? data->size() : 0; }
  int rows() const { return shape.empty() ? 0 : shape.front(); }
  int cols() const { return shape.empty() ? 0 : shape.back(); }
  T* ptr() { return data->data(); }
  const T* ptr() const { return data->data(); }
  T& at(int r, int c) { return (*data)[static_cast<size_t>(r) * cols() + c]; }
  T at(int r, int c) const { return (*data)[static_cast<size_t>(r) * cols() + c]; }
  T item() const {
    if (numel() != 1) throw ShapeError("item() on a non-scalar tensor");
    return (*data)[0];
  }
  std::string shape_str() const;
};

// Reverse-mode tape. Nodes are appended in execution order; backward() walks
// them exactly once in reverse. Single-threaded during recording.
template <class T>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int self)>;

  int add_node(size_t numel, std::vector<int> parents, BackFn back) {
    nodes_.push_back({std::move(parents), std::move(back), numel});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Registers a leaf (parameter or differentiated input).
  Tensor<T> watch(const Tensor<T>& t) {
    Tensor<T> out = t;
    out.node = add_node(t.numel(), {}, nullptr);
    return out;
  }

  void backward(const Tensor<T>& loss) {
    if (loss.node < 0) throw ShapeError("backward() on a tensor without a tape node");
    if (loss.numel() != 1) throw ShapeError("backward() requires a scalar loss");
    grads_.assign(nodes_.size(), {});
    grad_buf(loss.node).assign(1, T(1));
    for (int i = loss.node; i >= 0; --i) {
      if (grads_[i].empty() || !nodes_[i].back) continue;
      nodes_[i].back(*this, i);
    }
  }

  // Gradient accumulation buffer, allocated on first touch.
  std::vector<T>& grad_buf(int node) {
    if (grads_[node].empty()) grads_[node].assign(nodes_[node].numel, T(0));
    return grads_[node];
  }
  // Read-only view; empty if the node never received gradient.
  const std::vector<T>& grad(int node) const { return grads_[node]; }
  bool has_grad(int node) const { return !grads_[node].empty(); }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<int> parents;
    BackFn back;
    size_t numel;
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<T>> grads_;
};

// --- Core ops ---------------------------------------------------------------
// Forward values follow the standard definitions; each op records an exact
// analytic backward rule when any input is on the tape.

template <class T> Tensor<T> matmul(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b);
// a [m,k] x b[n,k]^T -> [m,n]
template <class T> Tensor<T> matmul_nt(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> add(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> sub(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b);
// a [..., n] + bias [n]
template <class T> Tensor<T> add_bias(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> mul(Tape<T>& tp, const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> scale(Tape<T>& tp, const Tensor<T>& a, double s);
template <class T> Tensor<T> transpose2d(Tape<T>& tp, const Tensor<T>& a);
template <class T> Tensor<T> reshape(Tape<T>& tp, const Tensor<T>& a, std::vector<int> shape);
template <class T> Tensor<T> slice_rows(Tape<T>& tp, const Tensor<T>& a, int r0, int r1);
template <class T> Tensor<T> slice_cols(Tape<T>& tp, const Tensor<T>& a, int c0, int c1);
template <class T> Tensor<T> concat_rows(Tape<T>& tp, const std::vector<Tensor<T>>& parts);
template <class T> Tensor<T> concat_cols(Tape<T>& tp, const std::vector<Tensor<T>>& parts);
template <class T> Tensor<T> embedding(Tape<T>& tp, const Tensor<T>& table, const std::vector<int>& ids);
template <class T> Tensor<T> gather_rows(Tape<T>& tp, const Tensor<T>& a, const std::vector<int>& ids);
template <class T> Tensor<T> softmax_rows(Tape<T>& tp, const Tensor<T>& a);
template <class T> Tensor<T> masked_fill(Tape<T>& tp, const Tensor<T>& a,
                                         const std::vector<uint8_t>& mask, T value);
template <class T> Tensor<T> layer_norm(Tape<T>& tp, const Tensor<T>& a,
                                        const Tensor<T>& gamma, const Tensor<T>& beta,
                                        double eps = 1e-5);
template <class T> Tensor<T> gelu(Tape<T>& tp, const Tensor<T>& a);
// Scales kept activations by 1/(1-p); identity when !training or p == 0.
template <class T> Tensor<T> dropout(Tape<T>& tp, const Tensor<T>& a, double p,
                                     bool training, Rng& rng);
template <class T> Tensor<T> sum_all(Tape<T>& tp, const Tensor<T>& a);

// Sum of per-position negative log likelihoods; positions whose target equals
// ignore_index contribute nothing. `count` (optional) receives the number of
// scored positions.
template <class T> Tensor<T> cross_entropy_sum(Tape<T>& tp, const Tensor<T>& logits,
                                               const std::vector<int>& targets,
                                               int ignore_index = -1, int* count = nullptr);

// --- Adam -------------------------------------------------------------------

template <class T>
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long warmup_steps = 500;
  long step = 0;
  std::vector<std::vector<T>> m, v;

  void init(const std::vector<size_t>& sizes) {
    m.clear();
    v.clear();
    for (size_t n : sizes) {
      m.emplace_back(n, T(0));
      v.emplace_back(n, T(0));
    }
  }
  // Linear warmup, then constant.
  double effective_lr() const {
    return lr * std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup_steps));
  }
};

// One Adam update over all parameters; missing (empty) gradients leave the
// parameter untouched but still advance its moments with g = 0.
template <class T>
void adam_step(std::vector<Tensor<T>*>& params,
               const std::vector<const std::vector<T>*>& grads, AdamState<T>& state);

// --- Verification harness ----------------------------------------------------

// Compares the tape gradient of a scalar-valued function against central
// finite differences (step per coordinate); returns the max over coordinates
// of |g_ad - g_fd| / max(1, |g_fd|). Meant for 64-bit precision.
template <class T>
double grad_check(const std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)>& f,
                  const Tensor<T>& x, double fd_step = 1e-5);

}  // namespace layoutgen::ag
