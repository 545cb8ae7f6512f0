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

#include "mocha/autograd.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mocha/numerics.hpp"

namespace mocha {

const Tensor& Var::value() const { return graph_->value(*this); }

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) throw Error("item() on non-scalar Var of shape " + t.shape_string());
  return t[0];
}

Var Graph::constant(Tensor value) {
  if (value.rank() != 2) value = Tensor({value.rows(), value.cols()}, value.storage());
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::param(Tensor& tensor) {
  if (auto it = param_ids_.find(&tensor); it != param_ids_.end()) {
    return Var(this, it->second);
  }
  Tensor v({tensor.rows(), tensor.cols()}, tensor.storage());
  nodes_.push_back(Node{std::move(v), {}, {}, &tensor, track_});
  const int id = static_cast<int>(nodes_.size() - 1);
  param_ids_.emplace(&tensor, id);
  return Var(this, id);
}

Var Graph::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Graph::record(Tensor value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.graph_ != this) throw Error("Var used with a foreign graph");
    needs = needs || nodes_[p.id_].requires_grad;
  }
  if (value.rank() != 2) value = Tensor({value.rows(), value.cols()}, value.storage());
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{},
                        nullptr, needs});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

std::span<double> Graph::grad(Var v) {
  Node& n = nodes_[v.id_];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss, double seed) {
  if (loss.graph_ != this) throw Error("backward() on a foreign Var");
  if (nodes_[loss.id_].value.size() != 1) throw Error("backward() expects a scalar loss");
  if (!nodes_[loss.id_].requires_grad) return;
  grad(loss)[0] += seed;
  for (int i = loss.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

void Graph::accumulate_param_grads() {
  for (Node& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    auto g = n.param->grad();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
  }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(fmt::format("{}: shape mismatch {} vs {}", op, a.shape_string(),
                            b.shape_string()));
  }
}

// Elementwise unary op with derivative expressed via (input, output).
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  Tensor out({av.rows(), av.cols()});
  for (std::size_t k = 0; k < av.size(); ++k) out[k] = fwd(av[k]);
  return g.record(std::move(out), {a}, [a, deriv](Graph& g, std::span<const double> go) {
    const Tensor& x = g.value(a);
    auto ga = g.grad(a);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += go[k] * deriv(x[k]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw Error(fmt::format("matmul: {} x {}", A.shape_string(), B.shape_string()));
  }
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* o = &out.at(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A.at(i, p);
      if (aip == 0.0) continue;
      const double* brow = &B.at(p, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += aip * brow[j];
    }
  }
  return a.graph().record(std::move(out), {a, b}, [a, b, m, k, n](Graph& g, std::span<const double> go) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    if (g.requires_grad(a)) {
      auto ga = g.grad(a);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = &B.at(p, 0);
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += go[i * n + j] * brow[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (g.requires_grad(b)) {
      auto gb = g.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.at(i, p);
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * go[i * n + j];
        }
      }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  if (B.cols() != k) {
    throw Error(fmt::format("matmul_nt: {} x {}^T", A.shape_string(), B.shape_string()));
  }
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = &A.at(i, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = &B.at(j, 0);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      out.at(i, j) = s;
    }
  }
  return a.graph().record(std::move(out), {a, b}, [a, b, m, k, n](Graph& g, std::span<const double> go) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    if (g.requires_grad(a)) {
      auto ga = g.grad(a);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = go[i * n + j];
          if (gij == 0.0) continue;
          const double* brow = &B.at(j, 0);
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * brow[p];
        }
      }
    }
    if (g.requires_grad(b)) {
      auto gb = g.grad(b);
      for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &A.at(i, 0);
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = go[i * n + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * arow[p];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  check_same_shape(A, B, "add");
  Tensor out = A;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += B[k];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, std::span<const double> go) {
    for (Var p : {a, b}) {
      if (!g.requires_grad(p)) continue;
      auto gp = g.grad(p);
      for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += go[k];
    }
  });
}

Var sub(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  check_same_shape(A, B, "sub");
  Tensor out = A;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= B[k];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, std::span<const double> go) {
    if (g.requires_grad(a)) {
      auto ga = g.grad(a);
      for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += go[k];
    }
    if (g.requires_grad(b)) {
      auto gb = g.grad(b);
      for (std::size_t k = 0; k < gb.size(); ++k) gb[k] -= go[k];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  check_same_shape(A, B, "mul");
  Tensor out = A;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= B[k];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, std::span<const double> go) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    if (g.requires_grad(a)) {
      auto ga = g.grad(a);
      for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += go[k] * B[k];
    }
    if (g.requires_grad(b)) {
      auto gb = g.grad(b);
      for (std::size_t k = 0; k < gb.size(); ++k) gb[k] += go[k] * A[k];
    }
  });
}

Var add_row(Var a, Var row) {
  const Tensor& A = a.value();
  const Tensor& R = row.value();
  const std::size_t m = A.rows(), n = A.cols();
  if (R.rows() != 1 || R.cols() != n) {
    throw Error(fmt::format("add_row: {} + {}", A.shape_string(), R.shape_string()));
  }
  Tensor out = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += R[j];
  return a.graph().record(std::move(out), {a, row}, [a, row, m, n](Graph& g, std::span<const double> go) {
    if (g.requires_grad(a)) {
      auto ga = g.grad(a);
      for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += go[k];
    }
    if (g.requires_grad(row)) {
      auto gr = g.grad(row);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += go[i * n + j];
    }
  });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

Var shift(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var mul_scalar(Var a, Var s) {
  const Tensor& A = a.value();
  if (s.value().size() != 1) throw Error("mul_scalar: scalar operand expected");
  const double sv = s.value()[0];
  Tensor out = A;
  for (double& v : out.storage()) v *= sv;
  return a.graph().record(std::move(out), {a, s}, [a, s](Graph& g, std::span<const double> go) {
    const Tensor& A = g.value(a);
    const double sv = g.value(s)[0];
    if (g.requires_grad(a)) {
      auto ga = g.grad(a);
      for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += go[k] * sv;
    }
    if (g.requires_grad(s)) {
      double acc = 0.0;
      for (std::size_t k = 0; k < A.size(); ++k) acc += go[k] * A[k];
      g.grad(s)[0] += acc;
    }
  });
}

Var add_scalar(Var a, Var s) {
  const Tensor& A = a.value();
  if (s.value().size() != 1) throw Error("add_scalar: scalar operand expected");
  const double sv = s.value()[0];
  Tensor out = A;
  for (double& v : out.storage()) v += sv;
  return a.graph().record(std::move(out), {a, s}, [a, s](Graph& g, std::span<const double> go) {
    if (g.requires_grad(a)) {
      auto ga = g.grad(a);
      for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += go[k];
    }
    if (g.requires_grad(s)) {
      double acc = 0.0;
      for (double v : go) acc += v;
      g.grad(s)[0] += acc;
    }
  });
}

Var sigmoid(Var a) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  Tensor out({av.rows(), av.cols()});
  for (std::size_t k = 0; k < av.size(); ++k) out[k] = mocha::sigmoid(av[k]);
  return g.record(std::move(out), {a}, [a](Graph& g, std::span<const double> go) {
    const Tensor& x = g.value(a);
    auto ga = g.grad(a);
    for (std::size_t k = 0; k < ga.size(); ++k) {
      const double s = mocha::sigmoid(x[k]);
      ga[k] += go[k] * s * (1.0 - s);
    }
  });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double x) {
                 const double t = std::tanh(x);
                 return 1.0 - t * t;
               });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var abs(Var a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  const Tensor& A = a.value();
  double s = 0.0;
  for (double v : A.storage()) s += v;
  return a.graph().record(Tensor::scalar(s), {a}, [a](Graph& g, std::span<const double> go) {
    auto ga = g.grad(a);
    for (double& v : ga) v += go[0];
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& A = a.value();
  const std::size_t n = A.cols();
  if (begin + count > A.rows()) {
    throw Error(fmt::format("slice_rows [{}, {}) out of range for {}", begin, begin + count,
                            A.shape_string()));
  }
  Tensor out = Tensor::matrix(count, n);
  std::copy_n(A.storage().begin() + static_cast<std::ptrdiff_t>(begin * n), count * n,
              out.storage().begin());
  return a.graph().record(std::move(out), {a}, [a, begin, n](Graph& g, std::span<const double> go) {
    auto ga = g.grad(a);
    for (std::size_t k = 0; k < go.size(); ++k) ga[begin * n + k] += go[k];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& A = a.value();
  const std::size_t m = A.rows(), n = A.cols();
  if (begin + count > n) {
    throw Error(fmt::format("slice_cols [{}, {}) out of range for {}", begin, begin + count,
                            A.shape_string()));
  }
  Tensor out = Tensor::matrix(m, count);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = A.at(i, begin + j);
  return a.graph().record(std::move(out), {a}, [a, begin, count, m, n](Graph& g, std::span<const double> go) {
    auto ga = g.grad(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) ga[i * n + begin + j] += go[i * count + j];
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_rows of nothing");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const Var& p : parts) {
    if (p.cols() != n) throw Error("concat_rows: column mismatch");
    m += p.rows();
  }
  Tensor out = Tensor::matrix(m, n);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const auto& src = p.value().storage();
    std::copy(src.begin(), src.end(), out.storage().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += src.size();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return parts[0].graph().record(std::move(out), parts, [ps](Graph& g, std::span<const double> go) {
    std::size_t offset = 0;
    for (const Var& p : ps) {
      const std::size_t len = g.value(p).size();
      if (g.requires_grad(p)) {
        auto gp = g.grad(p);
        for (std::size_t k = 0; k < len; ++k) gp[k] += go[offset + k];
      }
      offset += len;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_cols of nothing");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const Var& p : parts) {
    if (p.rows() != m) throw Error("concat_cols: row mismatch");
    n += p.cols();
  }
  Tensor out = Tensor::matrix(m, n);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out.at(i, offset + j) = v.at(i, j);
    offset += v.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return parts[0].graph().record(std::move(out), parts, [ps, m, n](Graph& g, std::span<const double> go) {
    std::size_t offset = 0;
    for (const Var& p : ps) {
      const std::size_t c = g.value(p).cols();
      if (g.requires_grad(p)) {
        auto gp = g.grad(p);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j) gp[i * c + j] += go[i * n + offset + j];
      }
      offset += c;
    }
  });
}

Var log_softmax_rows(Var a) {
  const Tensor& A = a.value();
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double lse = logsumexp(A.row_span(i));
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = A.at(i, j) - lse;
  }
  Tensor probs = out;
  for (double& v : probs.storage()) v = std::exp(v);
  return a.graph().record(std::move(out), {a},
                          [a, m, n, probs = std::move(probs)](Graph& g, std::span<const double> go) {
                            auto ga = g.grad(a);
                            for (std::size_t i = 0; i < m; ++i) {
                              double total = 0.0;
                              for (std::size_t j = 0; j < n; ++j) total += go[i * n + j];
                              for (std::size_t j = 0; j < n; ++j)
                                ga[i * n + j] += go[i * n + j] - probs.at(i, j) * total;
                            }
                          });
}

Var normalize(Var a) {
  const Tensor& A = a.value();
  double sq = 0.0;
  for (double v : A.storage()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0)) throw Error("normalize: zero-norm vector");
  Tensor out = A;
  for (double& v : out.storage()) v /= norm;
  Tensor unit = out;
  return a.graph().record(std::move(out), {a},
                          [a, norm, unit = std::move(unit)](Graph& g, std::span<const double> go) {
                            double dot = 0.0;
                            for (std::size_t k = 0; k < go.size(); ++k) dot += go[k] * unit[k];
                            auto ga = g.grad(a);
                            for (std::size_t k = 0; k < ga.size(); ++k)
                              ga[k] += (go[k] - unit[k] * dot) / norm;
                          });
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw Error("dropout rate must be < 1");
  const Tensor& A = a.value();
  Tensor mask({A.rows(), A.cols()});
  std::bernoulli_distribution keep(1.0 - rate);
  for (double& m : mask.storage()) m = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return mul(a, a.graph().constant(std::move(mask)));
}

Var lstm_cell(Var gates, Var cell) {
  const Tensor& G = gates.value();
  const Tensor& C = cell.value();
  const std::size_t h = C.cols();
  if (G.rows() != 1 || C.rows() != 1 || G.cols() != 4 * h) {
    throw Error(fmt::format("lstm_cell: gates {} vs cell {}", G.shape_string(), C.shape_string()));
  }
  // act = [i | f | g | o] after nonlinearities, plus tanh(c).
  std::vector<double> act(5 * h);
  Tensor out = Tensor::matrix(1, 2 * h);
  for (std::size_t k = 0; k < h; ++k) {
    const double i = mocha::sigmoid(G[k]);
    const double f = mocha::sigmoid(G[h + k]);
    const double gg = std::tanh(G[2 * h + k]);
    const double o = mocha::sigmoid(G[3 * h + k]);
    const double c = f * C[k] + i * gg;
    const double tc = std::tanh(c);
    act[k] = i;
    act[h + k] = f;
    act[2 * h + k] = gg;
    act[3 * h + k] = o;
    act[4 * h + k] = tc;
    out[k] = o * tc;
    out[h + k] = c;
  }
  return gates.graph().record(
      std::move(out), {gates, cell},
      [gates, cell, h, act = std::move(act)](Graph& g, std::span<const double> go) {
        const Tensor& C = g.value(cell);
        const bool need_gates = g.requires_grad(gates);
        const bool need_cell = g.requires_grad(cell);
        std::span<double> gg_out = need_gates ? g.grad(gates) : std::span<double>{};
        std::span<double> gc_out = need_cell ? g.grad(cell) : std::span<double>{};
        for (std::size_t k = 0; k < h; ++k) {
          const double i = act[k], f = act[h + k], gv = act[2 * h + k], o = act[3 * h + k],
                       tc = act[4 * h + k];
          const double gh = go[k];
          const double gc = go[h + k] + gh * o * (1.0 - tc * tc);
          if (need_gates) {
            gg_out[k] += gc * gv * i * (1.0 - i);
            gg_out[h + k] += gc * C[k] * f * (1.0 - f);
            gg_out[2 * h + k] += gc * i * (1.0 - gv * gv);
            gg_out[3 * h + k] += gh * tc * o * (1.0 - o);
          }
          if (need_cell) gc_out[k] += gc * f;
        }
      });
}

}  // namespace mocha
