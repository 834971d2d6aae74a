// Copyright 2026 The EdgeRank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "edgerank/common.hpp"

// Minimal reverse-mode automatic differentiation over small dense row-major
// matrices. A Tape records one forward computation; backward() sweeps it in
// reverse and accumulates into node gradients, writing parameter gradients
// straight into an external gradient buffer.
//
// Storage is an arena that keeps its capacity across reset(), so repeated
// forward passes of the same network do not allocate.
namespace edgerank::autodiff {

struct Var {
  int id = -1;
};

template <class T>
class Tape {
 public:
  void reset() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
    ints_.clear();
  }

  // ---- leaves -------------------------------------------------------------

  // A parameter tensor living outside the tape. grad may be null (inference).
  Var param(const T* data, T* grad, int rows, int cols) {
    Node n;
    n.op = Op::kParam;
    n.rows = rows;
    n.cols = cols;
    n.ext_value = data;
    n.ext_grad = grad;
    return push(n, false);
  }

  Var constant(int rows, int cols, std::span<const T> data) {
    Node n;
    n.op = Op::kConstant;
    n.rows = rows;
    n.cols = cols;
    Var v = push(n, true);
    std::copy(data.begin(), data.end(), mut(v));
    return v;
  }

  Var zeros(int rows, int cols) {
    Node n;
    n.op = Op::kConstant;
    n.rows = rows;
    n.cols = cols;
    return push(n, true);
  }

  // ---- ops ----------------------------------------------------------------

  // (m x k) * (k x n)
  Var matmul(Var a, Var b) {
    const Node& A = nodes_[a.id];
    const Node& B = nodes_[b.id];
    assert(A.cols == B.rows);
    Var v = binary(Op::kMatMul, a, b, A.rows, B.cols);
    const int m = rows(a), k = cols(a), n = cols(b);
    const T* pa = val(a);
    const T* pb = val(b);
    T* out = mut(v);
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) {
        const T s = pa[i * k + p];
        if (s == T(0)) continue;
        const T* rb = pb + p * n;
        T* ro = out + i * n;
        for (int j = 0; j < n; ++j) ro[j] += s * rb[j];
      }
    }
    return v;
  }

  // (m x k) * (n x k)^T
  Var matmul_bt(Var a, Var b) {
    assert(cols(a) == cols(b));
    Var v = binary(Op::kMatMulBT, a, b, rows(a), rows(b));
    const int m = rows(a), k = cols(a), n = rows(b);
    const T* pa = val(a);
    const T* pb = val(b);
    T* out = mut(v);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        T acc = 0;
        for (int p = 0; p < k; ++p) acc += pa[i * k + p] * pb[j * k + p];
        out[i * n + j] = acc;
      }
    }
    return v;
  }

  Var add(Var a, Var b) {
    assert(rows(a) == rows(b) && cols(a) == cols(b));
    Var v = binary(Op::kAdd, a, b, rows(a), cols(a));
    const std::size_t n = size(v);
    const T* pa = val(a);
    const T* pb = val(b);
    T* out = mut(v);
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] + pb[i];
    return v;
  }

  // a (m x n) + bias (1 x n) broadcast over rows.
  Var add_bias(Var a, Var bias) {
    assert(rows(bias) == 1 && cols(bias) == cols(a));
    Var v = binary(Op::kAddBias, a, bias, rows(a), cols(a));
    const int m = rows(a), n = cols(a);
    const T* pa = val(a);
    const T* pb = val(bias);
    T* out = mut(v);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) out[i * n + j] = pa[i * n + j] + pb[j];
    }
    return v;
  }

  Var mul(Var a, Var b) {
    assert(rows(a) == rows(b) && cols(a) == cols(b));
    Var v = binary(Op::kMul, a, b, rows(a), cols(a));
    const std::size_t n = size(v);
    const T* pa = val(a);
    const T* pb = val(b);
    T* out = mut(v);
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] * pb[i];
    return v;
  }

  Var scale(Var a, double c) {
    Var v = unary(Op::kScale, a, rows(a), cols(a));
    nodes_[v.id].aux = c;
    const std::size_t n = size(v);
    const T* pa = val(a);
    T* out = mut(v);
    for (std::size_t i = 0; i < n; ++i) out[i] = T(c) * pa[i];
    return v;
  }

  Var relu(Var a) { return leaky_relu(a, 0.0); }

  Var leaky_relu(Var a, double slope) {
    Var v = unary(Op::kLeakyRelu, a, rows(a), cols(a));
    nodes_[v.id].aux = slope;
    const std::size_t n = size(v);
    const T* pa = val(a);
    T* out = mut(v);
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] > T(0) ? pa[i] : T(slope) * pa[i];
    return v;
  }

  Var sigmoid(Var a) {
    Var v = unary(Op::kSigmoid, a, rows(a), cols(a));
    const std::size_t n = size(v);
    const T* pa = val(a);
    T* out = mut(v);
    for (std::size_t i = 0; i < n; ++i) out[i] = T(1) / (T(1) + std::exp(-pa[i]));
    return v;
  }

  // Row-wise softmax of (a * inv_temperature). Columns with mask == 0 get
  // exactly zero weight; a row with no unmasked column is all zeros.
  Var softmax_rows(Var a, double inv_temperature = 1.0,
                   std::span<const std::uint8_t> column_mask = {}) {
    Var v = unary(Op::kSoftmaxRows, a, rows(a), cols(a));
    nodes_[v.id].aux = inv_temperature;
    const int m = rows(a), n = cols(a);
    if (!column_mask.empty()) {
      assert(static_cast<int>(column_mask.size()) == n);
      nodes_[v.id].int_off = static_cast<int>(ints_.size());
      nodes_[v.id].int_len = n;
      for (auto bit : column_mask) ints_.push_back(bit ? 1 : 0);
    }
    const int* mask = mask_of(v);
    const T* pa = val(a);
    T* out = mut(v);
    for (int i = 0; i < m; ++i) {
      const T* row = pa + i * n;
      T* o = out + i * n;
      T mx = T(0);
      bool any = false;
      for (int j = 0; j < n; ++j) {
        if (mask && !mask[j]) continue;
        const T z = row[j] * T(inv_temperature);
        if (!any || z > mx) mx = z;
        any = true;
      }
      if (!any) continue;
      T total = 0;
      for (int j = 0; j < n; ++j) {
        if (mask && !mask[j]) continue;
        o[j] = std::exp(row[j] * T(inv_temperature) - mx);
        total += o[j];
      }
      for (int j = 0; j < n; ++j) o[j] /= total;
    }
    return v;
  }

  Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
  }

  Var concat_cols(std::span<const Var> parts) {
    assert(!parts.empty());
    const int m = rows(parts[0]);
    int n = 0;
    for (Var p : parts) {
      assert(rows(p) == m);
      n += cols(p);
    }
    Node node;
    node.op = Op::kConcatCols;
    node.rows = m;
    node.cols = n;
    node.int_off = static_cast<int>(ints_.size());
    node.int_len = static_cast<int>(parts.size());
    for (Var p : parts) ints_.push_back(p.id);
    Var v = push(node, true);
    T* out = mut(v);
    int offset = 0;
    for (Var p : parts) {
      const int c = cols(p);
      const T* src = val(p);
      for (int i = 0; i < m; ++i) {
        std::copy(src + i * c, src + (i + 1) * c, out + i * n + offset);
      }
      offset += c;
    }
    return v;
  }

  Var slice_cols(Var a, int begin, int len) {
    assert(begin >= 0 && begin + len <= cols(a));
    Var v = unary(Op::kSliceCols, a, rows(a), len);
    nodes_[v.id].aux = begin;
    const int m = rows(a), n = cols(a);
    const T* src = val(a);
    T* out = mut(v);
    for (int i = 0; i < m; ++i) {
      std::copy(src + i * n + begin, src + i * n + begin + len, out + i * len);
    }
    return v;
  }

  // Row lookup: out[i] = table[ids[i]].
  Var gather_rows(Var table, std::span<const int> ids) {
    const int n = cols(table);
    Var v = unary(Op::kGatherRows, table, static_cast<int>(ids.size()), n);
    nodes_[v.id].int_off = static_cast<int>(ints_.size());
    nodes_[v.id].int_len = static_cast<int>(ids.size());
    for (int id : ids) {
      assert(id >= 0 && id < rows(table));
      ints_.push_back(id);
    }
    const T* src = val(table);
    T* out = mut(v);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::copy(src + ids[i] * n, src + (ids[i] + 1) * n, out + i * n);
    }
    return v;
  }

  // Same data, new shape.
  Var reshape(Var a, int rows_, int cols_) {
    assert(static_cast<std::size_t>(rows_) * cols_ == size(a));
    Var v = unary(Op::kReshape, a, rows_, cols_);
    std::copy(val(a), val(a) + size(a), mut(v));
    return v;
  }

  // ---- access -------------------------------------------------------------

  int rows(Var v) const { return nodes_[v.id].rows; }
  int cols(Var v) const { return nodes_[v.id].cols; }
  std::size_t size(Var v) const {
    return static_cast<std::size_t>(nodes_[v.id].rows) * nodes_[v.id].cols;
  }
  std::span<const T> value(Var v) const { return {val(v), size(v)}; }
  T scalar(Var v, int i = 0) const { return val(v)[i]; }
  std::size_t node_count() const { return nodes_.size(); }

  // Gradient slot of a non-parameter node; valid after begin_backward().
  std::span<T> grad(Var v) {
    assert(nodes_[v.id].op != Op::kParam);
    return {grads_.data() + nodes_[v.id].off, size(v)};
  }

  // Zeroes node gradients. Seed output gradients via grad(), then call
  // backward().
  void begin_backward() { grads_.assign(values_.size(), T(0)); }

  void backward() {
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) backprop(id);
  }

 private:
  enum class Op : std::uint8_t {
    kParam,
    kConstant,
    kMatMul,
    kMatMulBT,
    kAdd,
    kAddBias,
    kMul,
    kScale,
    kLeakyRelu,
    kSigmoid,
    kSoftmaxRows,
    kConcatCols,
    kSliceCols,
    kGatherRows,
    kReshape,
  };

  struct Node {
    Op op = Op::kConstant;
    int rows = 0;
    int cols = 0;
    std::size_t off = 0;
    const T* ext_value = nullptr;
    T* ext_grad = nullptr;
    int a = -1;
    int b = -1;
    int int_off = -1;
    int int_len = 0;
    double aux = 0.0;
  };

  Var push(Node n, bool owns_storage) {
    if (owns_storage) {
      n.off = values_.size();
      values_.resize(values_.size() + static_cast<std::size_t>(n.rows) * n.cols, T(0));
    }
    nodes_.push_back(n);
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var unary(Op op, Var a, int r, int c) {
    Node n;
    n.op = op;
    n.rows = r;
    n.cols = c;
    n.a = a.id;
    return push(n, true);
  }

  Var binary(Op op, Var a, Var b, int r, int c) {
    Node n;
    n.op = op;
    n.rows = r;
    n.cols = c;
    n.a = a.id;
    n.b = b.id;
    return push(n, true);
  }

  const T* val(Var v) const { return val(v.id); }
  const T* val(int id) const {
    const Node& n = nodes_[id];
    return n.op == Op::kParam ? n.ext_value : values_.data() + n.off;
  }
  T* mut(Var v) { return values_.data() + nodes_[v.id].off; }

  // Null for non-trainable parameters and constants.
  T* gslot(int id) {
    const Node& n = nodes_[id];
    if (n.op == Op::kParam) return n.ext_grad;
    if (n.op == Op::kConstant) return nullptr;
    return grads_.data() + n.off;
  }

  const int* mask_of(Var v) const {
    const Node& n = nodes_[v.id];
    return n.int_len > 0 ? ints_.data() + n.int_off : nullptr;
  }

  void backprop(int id) {
    const Node& n = nodes_[id];
    if (n.op == Op::kParam || n.op == Op::kConstant) return;
    const T* g = grads_.data() + n.off;
    const T* y = values_.data() + n.off;
    const std::size_t len = static_cast<std::size_t>(n.rows) * n.cols;
    switch (n.op) {
      case Op::kMatMul: {
        const int m = n.rows, k = nodes_[n.a].cols, c = n.cols;
        const T* pa = val(n.a);
        const T* pb = val(n.b);
        if (T* ga = gslot(n.a)) {
          for (int i = 0; i < m; ++i)
            for (int p = 0; p < k; ++p) {
              T acc = 0;
              for (int j = 0; j < c; ++j) acc += g[i * c + j] * pb[p * c + j];
              ga[i * k + p] += acc;
            }
        }
        if (T* gb = gslot(n.b)) {
          for (int i = 0; i < m; ++i)
            for (int p = 0; p < k; ++p) {
              const T s = pa[i * k + p];
              if (s == T(0)) continue;
              for (int j = 0; j < c; ++j) gb[p * c + j] += s * g[i * c + j];
            }
        }
        break;
      }
      case Op::kMatMulBT: {
        const int m = n.rows, c = n.cols, k = nodes_[n.a].cols;
        const T* pa = val(n.a);
        const T* pb = val(n.b);
        T* ga = gslot(n.a);
        T* gb = gslot(n.b);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < c; ++j) {
            const T gij = g[i * c + j];
            if (gij == T(0)) continue;
            if (ga)
              for (int p = 0; p < k; ++p) ga[i * k + p] += gij * pb[j * k + p];
            if (gb)
              for (int p = 0; p < k; ++p) gb[j * k + p] += gij * pa[i * k + p];
          }
        break;
      }
      case Op::kAdd: {
        if (T* ga = gslot(n.a))
          for (std::size_t i = 0; i < len; ++i) ga[i] += g[i];
        if (T* gb = gslot(n.b))
          for (std::size_t i = 0; i < len; ++i) gb[i] += g[i];
        break;
      }
      case Op::kAddBias: {
        if (T* ga = gslot(n.a))
          for (std::size_t i = 0; i < len; ++i) ga[i] += g[i];
        if (T* gb = gslot(n.b))
          for (int i = 0; i < n.rows; ++i)
            for (int j = 0; j < n.cols; ++j) gb[j] += g[i * n.cols + j];
        break;
      }
      case Op::kMul: {
        const T* pa = val(n.a);
        const T* pb = val(n.b);
        if (T* ga = gslot(n.a))
          for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] * pb[i];
        if (T* gb = gslot(n.b))
          for (std::size_t i = 0; i < len; ++i) gb[i] += g[i] * pa[i];
        break;
      }
      case Op::kScale: {
        if (T* ga = gslot(n.a))
          for (std::size_t i = 0; i < len; ++i) ga[i] += T(n.aux) * g[i];
        break;
      }
      case Op::kLeakyRelu: {
        const T* pa = val(n.a);
        if (T* ga = gslot(n.a))
          for (std::size_t i = 0; i < len; ++i) ga[i] += pa[i] > T(0) ? g[i] : T(n.aux) * g[i];
        break;
      }
      case Op::kSigmoid: {
        if (T* ga = gslot(n.a))
          for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
        break;
      }
      case Op::kSoftmaxRows: {
        T* ga = gslot(n.a);
        if (!ga) break;
        const int c = n.cols;
        for (int i = 0; i < n.rows; ++i) {
          T dot = 0;
          for (int j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
          for (int j = 0; j < c; ++j)
            ga[i * c + j] += T(n.aux) * y[i * c + j] * (g[i * c + j] - dot);
        }
        break;
      }
      case Op::kConcatCols: {
        int offset = 0;
        for (int p = 0; p < n.int_len; ++p) {
          const int src = ints_[n.int_off + p];
          const int c = nodes_[src].cols;
          if (T* gs = gslot(src)) {
            for (int i = 0; i < n.rows; ++i)
              for (int j = 0; j < c; ++j) gs[i * c + j] += g[i * n.cols + offset + j];
          }
          offset += c;
        }
        break;
      }
      case Op::kSliceCols: {
        if (T* ga = gslot(n.a)) {
          const int src_cols = nodes_[n.a].cols;
          const int begin = static_cast<int>(n.aux);
          for (int i = 0; i < n.rows; ++i)
            for (int j = 0; j < n.cols; ++j) ga[i * src_cols + begin + j] += g[i * n.cols + j];
        }
        break;
      }
      case Op::kGatherRows: {
        if (T* ga = gslot(n.a)) {
          for (int i = 0; i < n.int_len; ++i) {
            const int row = ints_[n.int_off + i];
            for (int j = 0; j < n.cols; ++j) ga[row * n.cols + j] += g[i * n.cols + j];
          }
        }
        break;
      }
      case Op::kReshape: {
        if (T* ga = gslot(n.a))
          for (std::size_t i = 0; i < len; ++i) ga[i] += g[i];
        break;
      }
      case Op::kParam:
      case Op::kConstant:
        break;
    }
  }

  std::vector<Node> nodes_;
  std::vector<T> values_;
  std::vector<T> grads_;
  std::vector<int> ints_;
};

}  // namespace edgerank::autodiff
