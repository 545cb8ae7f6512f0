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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mocha/autograd.hpp"
#include "mocha/numerics.hpp"
#include "mocha/oracles/brute_force.hpp"
#include "mocha/train.hpp"
#include "test_util.hpp"

namespace mocha {
namespace {

using testing::check_op_gradient;
using testing::random_tensor;
using testing::random_uniform;

TEST(Tensor, DataLengthMatchesShapeVolume) {
  const Tensor t({3, 4}, 1.5);
  EXPECT_EQ(t.size(), 12u);
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.cols(), 4u);
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), Error);
}

TEST(Tensor, RankOneIsASingleRow) {
  const Tensor t({5}, 0.0);
  EXPECT_EQ(t.rows(), 1u);
  EXPECT_EQ(t.cols(), 5u);
}

TEST(ExclusiveCumprod, HalvesGiveGeometricSequence) {
  const std::vector<double> x{0.5, 0.5, 0.5};
  EXPECT_EQ(exclusive_cumprod(x), (std::vector<double>{1.0, 0.5, 0.25}));
}

TEST(ExclusiveCumprod, EmptyInputGivesEmptyOutput) {
  EXPECT_TRUE(exclusive_cumprod(std::vector<double>{}).empty());
}

TEST(ExclusiveCumprod, MatchesNaiveLoopOnRandomInputs) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_uniform(rng, 1, 8, -1.5, 1.5);
    const auto fast = exclusive_cumprod(x.data());
    const auto slow = oracles::naive_exclusive_cumprod(x.data());
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(fast[j], slow[j], 1e-15);
  }
}

TEST(MovingSum, UnitBackwardWindow) {
  const std::vector<double> x{1, 1, 1, 1};
  EXPECT_EQ(moving_sum(x, 1, 0), (std::vector<double>{1, 2, 2, 2}));
}

TEST(MovingSum, ZeroWindowIsIdentity) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(moving_sum(x, 0, 0), x);
}

TEST(MovingSum, MatchesPaddedLoopOracle) {
  Rng rng(2);
  for (std::size_t back : {0u, 1u, 3u, 5u}) {
    for (std::size_t forward : {0u, 2u, 4u}) {
      const Tensor x = random_tensor(rng, 1, 16);
      const auto fast = moving_sum(x.data(), back, forward);
      const auto slow = oracles::naive_moving_sum(x.data(), back, forward);
      for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(fast[j], slow[j], 1e-14);
    }
  }
}

TEST(Cumsum, InclusivePrefix) {
  EXPECT_EQ(cumsum(std::vector<double>{1, 2, 3}), (std::vector<double>{1, 3, 6}));
}

TEST(Logsumexp, TwoHalvesSumToOne) {
  const std::vector<LogProb> x{{std::log(0.5)}, {std::log(0.5)}};
  EXPECT_NEAR(logsumexp(x).value, 0.0, 1e-15);
}

TEST(Logsumexp, NegativeInfinityIsTheAdditiveIdentity) {
  const std::vector<LogProb> x{LogProb::zero(), {std::log(0.3)}};
  EXPECT_DOUBLE_EQ(logsumexp(x).value, std::log(0.3));
}

TEST(Logsumexp, AllNegativeInfinityStaysNegativeInfinity) {
  const std::vector<double> x{kNegInf, kNegInf};
  EXPECT_EQ(logsumexp(x), kNegInf);
}

TEST(Logsumexp, HundredCopiesOfOnePercentSumToOne) {
  const std::vector<double> x(100, std::log(0.01));
  EXPECT_NEAR(logsumexp(x), 0.0, 1e-12);
}

TEST(Logsumexp, EmptyInputThrows) {
  EXPECT_THROW(logsumexp(std::vector<double>{}), Error);
}

TEST(Logsumexp, LargeMagnitudesDoNotOverflow) {
  const std::vector<double> x{1000.0, 1000.0};
  EXPECT_NEAR(logsumexp(x), 1000.0 + std::log(2.0), 1e-12);
}

TEST(Logsumexp, PermutationInvariantAndShiftEquivariant) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor t = random_tensor(rng, 1, 7, 5.0);
    std::vector<double> x(t.data().begin(), t.data().end());
    const double base = logsumexp(x);
    std::shuffle(x.begin(), x.end(), rng);
    EXPECT_NEAR(logsumexp(x), base, 1e-12);
    const double c = std::uniform_real_distribution<double>(-50, 50)(rng);
    for (double& v : x) v += c;
    EXPECT_NEAR(logsumexp(x), base + c, 1e-12);
  }
}

TEST(LogAdd, AgreesWithLogsumexp) {
  EXPECT_NEAR(log_add(std::log(0.2), std::log(0.3)), std::log(0.5), 1e-15);
  EXPECT_EQ(log_add(kNegInf, -1.0), -1.0);
  EXPECT_EQ(log_add(-1.0, kNegInf), -1.0);
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(-4.0), 0.01798620996209156, 1e-15);
  EXPECT_GT(sigmoid(-800.0), -1e-300);
  EXPECT_EQ(sigmoid(800.0), 1.0);
}

TEST(ClampProb, KeepsProbabilitiesInsideTheFloor) {
  EXPECT_EQ(clamp_prob(0.0), kProbFloor);
  EXPECT_EQ(clamp_prob(1.0), 1.0 - kProbFloor);
  EXPECT_EQ(clamp_prob(0.3), 0.3);
}

TEST(GradCheck, SumOfSquaresIsExact) {
  Rng rng(4);
  Tensor x = random_tensor(rng, 2, 3);
  const Objective f = [&](bool with_grad) {
    double acc = 0.0;
    for (double v : x.data()) acc += v * v;
    if (with_grad) {
      auto g = x.grad();
      for (std::size_t k = 0; k < x.size(); ++k) g[k] = 2.0 * x[k];
    }
    return acc;
  };
  const NamedParam params[] = {{"x", &x}};
  EXPECT_LT(grad_check(f, params).max_rel_error, 1e-8);
}

TEST(GradCheck, ConstantHasZeroError) {
  Tensor x = Tensor::matrix(1, 3, 0.7);
  const Objective f = [&](bool with_grad) {
    if (with_grad) x.zero_grad();
    return 4.2;
  };
  const NamedParam params[] = {{"x", &x}};
  const GradCheckResult r = grad_check(f, params);
  EXPECT_EQ(r.max_rel_error, 0.0);
  EXPECT_EQ(r.checked, 3u);
}

TEST(GradCheck, NonFiniteObjectiveThrows) {
  Tensor x = Tensor::matrix(1, 1, 0.0);
  const Objective f = [&](bool with_grad) {
    if (with_grad) x.zero_grad();
    return std::log(x[0]);
  };
  const NamedParam params[] = {{"x", &x}};
  EXPECT_THROW(grad_check(f, params), Error);
}

TEST(GradCheck, DetectsAWrongGradient) {
  Tensor x = Tensor::matrix(1, 2, 1.0);
  const Objective f = [&](bool with_grad) {
    if (with_grad) {
      x.grad()[0] = 3.0 * x[0] * x[0];
      x.grad()[1] = -3.0 * x[1] * x[1];  // wrong sign
    }
    return x[0] * x[0] * x[0] + x[1] * x[1] * x[1];
  };
  const NamedParam params[] = {{"x", &x}};
  EXPECT_GT(grad_check(f, params).max_rel_error, 1.0);
}

// Total objective on utterances short enough for three encoder frames. No
// ReLU input of this draw lies within a difference step of zero.
TEST(GradCheck, TotalLossOnThreeFrameBatch) {
  ToyTaskSpec task = testing::tiny_task();
  ModelConfig config = testing::tiny_model(task);
  Rng rng(2);
  Model model = Model::random(config, rng);
  std::vector<Utterance> data(2);
  data[0] = {"a", random_tensor(rng, 6, task.feature_dim), {2, 3}, {1, 4}};
  data[1] = {"b", random_tensor(rng, 5, task.feature_dim), {4}, {1}};
  const std::vector<const Utterance*> batch{&data[0], &data[1]};
  ForwardOptions options;
  options.weights = {0.3, 2.0, 1.0};
  const auto params = model.parameters();
  const Objective f = [&](bool with_grad) {
    if (with_grad) {
      for (const auto& p : params) p.tensor->zero_grad();
    }
    return batch_objective(model, batch, options, with_grad).total;
  };
  const GradCheckResult r = grad_check(f, params, 1e-5, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
}

// ---- autograd operations ---------------------------------------------------

struct OpCase {
  const char* name;
  std::function<Var(Var)> op;
  std::size_t rows;
  std::size_t cols;
  double lo;
  double hi;
};

class AutogradOp : public ::testing::TestWithParam<OpCase> {};

TEST_P(AutogradOp, GradientMatchesFiniteDifferences) {
  const OpCase& c = GetParam();
  Rng rng(6);
  const Tensor input = random_uniform(rng, c.rows, c.cols, c.lo, c.hi);
  const GradCheckResult r = check_op_gradient(c.op, input);
  EXPECT_LT(r.max_rel_error, 1e-6) << c.name << " worst " << r.worst_index;
}

Var constant_like(Var a, std::uint64_t seed, std::size_t rows, std::size_t cols) {
  Rng rng(seed);
  return a.graph().constant(random_tensor(rng, rows, cols));
}

const OpCase kOpCases[] = {
    {"matmul_left", [](Var a) { return matmul(a, constant_like(a, 1, 4, 2)); }, 3, 4, -1, 1},
    {"matmul_right", [](Var a) { return matmul(constant_like(a, 1, 2, 3), a); }, 3, 4, -1, 1},
    {"matmul_nt", [](Var a) { return matmul_nt(a, a); }, 3, 4, -1, 1},
    {"add", [](Var a) { return add(a, constant_like(a, 2, 2, 3)); }, 2, 3, -1, 1},
    {"sub", [](Var a) { return sub(constant_like(a, 2, 2, 3), a); }, 2, 3, -1, 1},
    {"mul", [](Var a) { return mul(a, a); }, 2, 3, -1, 1},
    {"add_row", [](Var a) { return add_row(constant_like(a, 3, 4, 3), a); }, 1, 3, -1, 1},
    {"add_row_matrix", [](Var a) { return add_row(a, constant_like(a, 3, 1, 3)); }, 4, 3, -1, 1},
    {"scale", [](Var a) { return scale(a, -2.5); }, 2, 2, -1, 1},
    {"shift", [](Var a) { return mul(shift(a, 0.5), a); }, 2, 2, -1, 1},
    {"mul_scalar", [](Var a) { return mul_scalar(a, slice_cols(slice_rows(a, 0, 1), 0, 1)); }, 2, 3, -1, 1},
    {"add_scalar", [](Var a) { return mul(add_scalar(a, slice_cols(slice_rows(a, 1, 1), 2, 1)), a); }, 2, 3, -1, 1},
    {"sigmoid", [](Var a) { return sigmoid(a); }, 2, 3, -4, 4},
    {"tanh", [](Var a) { return tanh(a); }, 2, 3, -3, 3},
    {"relu", [](Var a) { return relu(a); }, 2, 3, 0.1, 2},
    {"relu_negative", [](Var a) { return relu(scale(a, -1.0)); }, 2, 3, 0.1, 2},
    {"exp", [](Var a) { return exp(a); }, 2, 3, -2, 2},
    {"log", [](Var a) { return log(a); }, 2, 3, 0.2, 3},
    {"abs", [](Var a) { return abs(a); }, 2, 3, 0.1, 2},
    {"abs_negative", [](Var a) { return abs(scale(a, -1.0)); }, 2, 3, 0.1, 2},
    {"clamp_inside", [](Var a) { return clamp(a, -5.0, 5.0); }, 2, 3, -1, 1},
    {"sum", [](Var a) { return sum(mul(a, a)); }, 2, 3, -1, 1},
    {"slice_rows", [](Var a) { return slice_rows(a, 1, 2); }, 4, 3, -1, 1},
    {"slice_cols", [](Var a) { return slice_cols(a, 1, 2); }, 3, 4, -1, 1},
    {"concat_rows",
     [](Var a) {
       const Var parts[] = {a, mul(a, a)};
       return concat_rows(parts);
     },
     2, 3, -1, 1},
    {"concat_cols",
     [](Var a) {
       const Var parts[] = {mul(a, a), a};
       return concat_cols(parts);
     },
     2, 3, -1, 1},
    {"log_softmax_rows", [](Var a) { return log_softmax_rows(a); }, 3, 5, -3, 3},
    {"normalize", [](Var a) { return normalize(a); }, 1, 5, -2, 2},
    {"lstm_cell",
     [](Var a) { return lstm_cell(slice_cols(a, 0, 12), slice_cols(a, 12, 3)); }, 1, 15, -2, 2},
};

INSTANTIATE_TEST_SUITE_P(AllOps, AutogradOp, ::testing::ValuesIn(kOpCases),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Autograd, ClampBlocksGradientOutsideRange) {
  Graph g;
  Tensor x = Tensor::matrix(1, 3, std::vector<double>{-2.0, 0.5, 2.0});
  const Var out = sum(clamp(g.param(x), -1.0, 1.0));
  x.zero_grad();
  g.backward(out);
  g.accumulate_param_grads();
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 1.0);
  EXPECT_EQ(x.grad()[2], 0.0);
}

TEST(Autograd, UntrackedGraphRecordsNoGradients) {
  Graph g(false);
  Tensor x = Tensor::matrix(1, 2, 1.0);
  const Var v = g.param(x);
  EXPECT_FALSE(g.requires_grad(v));
  EXPECT_FALSE(g.tracking());
  EXPECT_EQ(sum(mul(v, v)).value()[0], 2.0);
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  Graph g;
  Tensor x = Tensor::matrix(1, 1, 3.0);
  const Var v = g.param(x);
  const Var out = add(mul(v, v), v);  // x^2 + x
  x.zero_grad();
  g.backward(out);
  g.accumulate_param_grads();
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(Autograd, DropoutZeroRateIsIdentityAndRescalesOtherwise) {
  Rng rng(7);
  Graph g(false);
  const Tensor x = random_tensor(rng, 4, 50);
  const Var v = g.constant(x);
  EXPECT_EQ(dropout(v, 0.0, rng).value(), x);
  const Tensor y = dropout(v, 0.5, rng).value();
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_TRUE(y[k] == 0.0 || std::abs(y[k] - 2.0 * x[k]) < 1e-15);
  }
}

TEST(Autograd, ShapeMismatchThrows) {
  Graph g;
  const Var a = g.constant(Tensor::matrix(2, 3));
  const Var b = g.constant(Tensor::matrix(2, 2));
  EXPECT_THROW(matmul(a, b), Error);
  EXPECT_THROW(add(a, b), Error);
}

}  // namespace
}  // namespace mocha
