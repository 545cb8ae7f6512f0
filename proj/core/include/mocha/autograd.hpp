/* Copyright 2026 The mocha-ctcst Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Tape-based reverse-mode differentiation over 2-D tensors.
//
// A Graph records every operation applied to its Vars in creation order, so
// the tape is already topologically sorted and backward() is a single
// reverse sweep. Model parameters enter through Graph::param(); their
// gradients stay on the tape until accumulate_param_grads() adds them into
// the parameter tensors' own grad buffers. One Graph per utterance keeps
// batch reduction order fixed and explicit.

#ifndef MOCHA_AUTOGRAD_HPP_
#define MOCHA_AUTOGRAD_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "mocha/numerics.hpp"
#include "mocha/tensor.hpp"

namespace mocha {

class Graph;

class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const { return *graph_; }
  int id() const { return id_; }

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  // Value of a 1 x 1 Var.
  double item() const;

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  // Receives the gradient of the node being visited; accumulates into its
  // parents through Graph::grad().
  using Backward = std::function<void(Graph&, std::span<const double>)>;

  Graph() = default;
  // With tracking off, parameters enter as plain leaves and nothing is
  // recorded for the backward sweep.
  explicit Graph(bool track_gradients) : track_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a parameter tensor; repeated calls reuse one node.
  Var param(Tensor& tensor);
  // Records a computed node. `backward` may be empty when no parent
  // requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward);
  Var record(Tensor value, std::span<const Var> parents, Backward backward);

  const Tensor& value(Var v) const { return nodes_[v.id_].value; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  // Zero-initialized on first access.
  std::span<double> grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v.id_].grad.empty(); }

  // Seeds d loss / d loss = seed and sweeps the tape once in reverse.
  void backward(Var loss, double seed = 1.0);
  // Adds leaf gradients into the bound parameters' grad buffers.
  void accumulate_param_grads();

  std::size_t size() const { return nodes_.size(); }
  bool tracking() const { return track_; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Backward backward;
    Tensor* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> param_ids_;
  bool track_ = true;
};

// ---- elementwise and shape ops ------------------------------------------

Var matmul(Var a, Var b);            // [m x k] * [k x n]
Var matmul_nt(Var a, Var b);         // [m x k] * [n x k]^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);               // Hadamard
Var add_row(Var a, Var row);         // a[r, :] + row for every r
Var scale(Var a, double c);
Var shift(Var a, double c);          // a + c
Var mul_scalar(Var a, Var s);        // a * s, s is 1 x 1
Var add_scalar(Var a, Var s);        // a + s, s is 1 x 1
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);
Var clamp(Var a, double lo, double hi);  // zero gradient outside [lo, hi]
Var sum(Var a);                      // -> 1 x 1
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var log_softmax_rows(Var a);
Var normalize(Var a);                // a / ||a||_2 over all entries

// Inverted dropout: zeroes entries with probability `rate` and rescales the
// survivors by 1 / (1 - rate). Identity when rate == 0.
Var dropout(Var a, double rate, Rng& rng);

// Fused LSTM cell. `gates` is 1 x 4H pre-activations in (i, f, g, o) order,
// `cell` is 1 x H. Returns 1 x 2H holding [h | c].
Var lstm_cell(Var gates, Var cell);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace mocha

#endif  // MOCHA_AUTOGRAD_HPP_
