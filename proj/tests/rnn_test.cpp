/*
 * Copyright 2026 The privcoll Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "privcoll/rnn.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "privcoll/model.hpp"
#include "test_util.hpp"

namespace privcoll {
namespace {

using testing::RandomMatrix;
using testing::RelErr;

double Sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Toy {
  std::vector<RealMatrix> x, y;  // per step
  RealMatrix w;                  // n x H
  RnnAggState agg;
  RnnConfig cfg;
};

Toy MakeToy(size_t steps, size_t m, size_t n, size_t hidden, size_t k,
            uint64_t seed) {
  Toy t;
  t.cfg.steps = steps;
  t.cfg.hidden = hidden;
  for (size_t c = 0; c < steps; ++c) {
    t.x.push_back(RandomMatrix(m, n, seed + 10 * c, -1.5, 1.5));
    t.y.push_back(RandomMatrix(m, k, seed + 10 * c + 1, 0.0, 1.0));
  }
  t.w = RandomMatrix(n, hidden, seed + 100);
  t.agg.u = RandomMatrix(hidden, hidden, seed + 101);
  t.agg.v = RandomMatrix(hidden, k, seed + 102);
  t.agg.b_h = RandomMatrix(1, hidden, seed + 103, -0.2, 0.2);
  t.agg.b_y = RandomMatrix(1, k, seed + 104, -0.2, 0.2);
  return t;
}

// Scalar oracle: per-sample recurrence with explicit loops, sigmoid both
// layers, returns per-step predictions and the summed loss.
double ScalarForward(const Toy& t, const RealMatrix& w, const RealMatrix& u,
                     const RealMatrix& v, const RealMatrix& bh,
                     const RealMatrix& by,
                     std::vector<RealMatrix>* y_hat = nullptr) {
  const size_t m = t.x[0].rows(), n = w.rows(), hd = w.cols(), k = v.cols();
  double total = 0.0;
  if (y_hat) y_hat->assign(t.x.size(), RealMatrix(m, k));
  for (size_t i = 0; i < m; ++i) {
    std::vector<double> h(hd, 0.0);
    for (size_t c = 0; c < t.x.size(); ++c) {
      std::vector<double> next(hd);
      for (size_t j = 0; j < hd; ++j) {
        double z = bh(0, j);
        for (size_t f = 0; f < n; ++f) z += t.x[c](i, f) * w(f, j);
        if (c > 0) {
          for (size_t q = 0; q < hd; ++q) z += h[q] * u(q, j);
        }
        next[j] = Sig(z);
      }
      h = next;
      for (size_t o = 0; o < k; ++o) {
        double z = by(0, o);
        for (size_t q = 0; q < hd; ++q) z += h[q] * v(q, o);
        const double p = Sig(z);
        if (y_hat) (*y_hat)[c](i, o) = p;
        total += 0.5 * (p - t.y[c](i, o)) * (p - t.y[c](i, o)) / double(m);
      }
    }
  }
  return total;
}

std::vector<RealMatrix> XwSteps(const Toy& t, const RealMatrix& w) {
  std::vector<RealMatrix> out;
  for (const auto& x : t.x) out.push_back(Matmul(x, w));
  return out;
}

TEST(RnnTest, ZeroParametersGiveHalf) {
  RnnConfig cfg;
  cfg.steps = 2;
  cfg.hidden = 3;
  RnnAggState agg{RealMatrix(3, 3), RealMatrix(3, 2), RealMatrix(1, 3),
                  RealMatrix(1, 2), {}, {}, {}, {}};
  auto& y = RnnForward(agg, cfg, {RealMatrix(4, 3), RealMatrix(4, 3)});
  ASSERT_EQ(y.size(), 2u);
  for (const auto& step : y) {
    for (double v : step.data()) EXPECT_EQ(v, 0.5);
  }
}

TEST(RnnTest, ForwardMatchesScalarOracle) {
  Toy t = MakeToy(3, 2, 5, 4, 2, 1);
  std::vector<RealMatrix> want;
  const double loss =
      ScalarForward(t, t.w, t.agg.u, t.agg.v, t.agg.b_h, t.agg.b_y, &want);
  auto& got = RnnForward(t.agg, t.cfg, XwSteps(t, t.w));
  for (size_t c = 0; c < 3; ++c) EXPECT_LE(MaxAbsDiff(got[c], want[c]), 1e-14);
  EXPECT_LE(RelErr(RnnLoss(t.agg, t.y), loss), 1e-13);
}

TEST(RnnTest, SingleStepMatchesFeedForwardPass) {
  Toy t = MakeToy(1, 5, 4, 3, 2, 2);
  ModelSpec spec;
  spec.kind = ModelKind::kFeedForward;
  spec.hidden_layers = {3};
  spec.outputs = 2;
  spec.output_activation = Activation::kSigmoid;
  ModelHead head;
  head.shared_bias = t.agg.b_h;
  head.layers.push_back({t.agg.v, t.agg.b_y});
  RealMatrix ff = Predict(spec, head, Matmul(t.x[0], t.w));
  EXPECT_EQ(RnnForward(t.agg, t.cfg, XwSteps(t, t.w))[0], ff);
}

TEST(RnnTest, GradientEdgeCases) {
  Toy t = MakeToy(3, 3, 4, 3, 2, 3);
  RnnForward(t.agg, t.cfg, XwSteps(t, t.w));
  BpttSignals sig = RnnSignals(t.agg, t.cfg, t.y);
  // Zero loss signal: every gradient vanishes.
  BpttSignals quiet = sig;
  for (auto& d : quiet.delta_loss) d = RealMatrix(d.rows(), d.cols());
  for (size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(MaxAbs(RnnGradV(t.agg, quiet, c)), 0.0);
    EXPECT_EQ(MaxAbs(RnnGradU(t.agg, quiet, c)), 0.0);
    EXPECT_EQ(MaxAbs(RnnGradWLocal(t.x, quiet, t.agg.v, t.agg.u, c)), 0.0);
  }
  // h = 0 kills the V gradient.
  RnnAggState zero_h = t.agg;
  for (auto& h : zero_h.h) h = RealMatrix(h.rows(), h.cols());
  EXPECT_EQ(MaxAbs(RnnGradV(zero_h, sig, 1)), 0.0);
  // c = 0: U gradient is empty (h(-1) = 0), W gradient is the single term.
  EXPECT_EQ(MaxAbs(RnnGradU(t.agg, sig, 0)), 0.0);
  RealMatrix single = MatmulTransposedLeft(
      t.x[0], Hadamard(MatmulTransposedRight(OutputSignal(sig, 0), t.agg.v),
                       sig.delta_h[0]));
  EXPECT_EQ(RnnGradWLocal(t.x, sig, t.agg.v, t.agg.u, 0), single);
  // U = 0: only the k = c term survives.
  RealMatrix u0(3, 3);
  RealMatrix only_last = MatmulTransposedLeft(
      t.x[2], PulledBackSignal(sig, t.agg.v, u0, 2, 2));
  EXPECT_EQ(RnnGradWLocal(t.x, sig, t.agg.v, u0, 2), only_last);
}

TEST(RnnTest, SingleStepLocalUpdateMatchesFeedForward) {
  Toy t = MakeToy(1, 4, 3, 2, 1, 4);
  RnnForward(t.agg, t.cfg, XwSteps(t, t.w));
  BpttSignals sig = RnnSignals(t.agg, t.cfg, t.y);
  RealMatrix delta =
      Hadamard(MatmulTransposedRight(OutputSignal(sig, 0), t.agg.v),
               sig.delta_h[0]);
  RealMatrix w_rnn = t.w, w_ff = t.w;
  RnnLocalUpdate(w_rnn, t.x, sig, t.agg.v, RandomMatrix(2, 2, 99), 0.3);
  LocalUpdate(w_ff, t.x[0], delta, 0.3, 0.0);
  EXPECT_EQ(w_rnn, w_ff);
}

// Every analytic gradient against central differences of the scalar
// oracle's total loss on small instances.
TEST(RnnTest, GradientsMatchFiniteDifferences) {
  for (size_t steps : {1u, 2u, 3u}) {
    SCOPED_TRACE("T=" + std::to_string(steps));
    Toy t = MakeToy(steps, 4, 3, 5, 2, 10 + steps);
    RnnAggState agg = t.agg;
    RealMatrix w = t.w;
    RnnForward(agg, t.cfg, XwSteps(t, w));
    BpttSignals sig = RnnSignals(agg, t.cfg, t.y);
    RealMatrix gv(5, 2), gu(5, 5), gw(3, 5), gbh(1, 5), gby(1, 2);
    for (size_t c = 0; c < steps; ++c) {
      AddInPlace(gv, RnnGradV(agg, sig, c));
      AddInPlace(gu, RnnGradU(agg, sig, c));
      AddInPlace(gw, RnnGradWLocal(t.x, sig, agg.v, agg.u, c));
      RnnBiasGrads gb = RnnGradBiases(agg, sig, c);
      AddInPlace(gbh, gb.b_h);
      AddInPlace(gby, gb.b_y);
    }
    const double h = 1e-6;
    auto check = [&](const RealMatrix& analytic, int which) {
      for (size_t i = 0; i < analytic.size(); ++i) {
        RealMatrix p[5] = {w, t.agg.u, t.agg.v, t.agg.b_h, t.agg.b_y};
        RealMatrix q[5] = {w, t.agg.u, t.agg.v, t.agg.b_h, t.agg.b_y};
        p[which].data()[i] += h;
        q[which].data()[i] -= h;
        const double fd = (ScalarForward(t, p[0], p[1], p[2], p[3], p[4]) -
                           ScalarForward(t, q[0], q[1], q[2], q[3], q[4])) /
                          (2 * h);
        if (std::abs(fd) < 1e-9 && std::abs(analytic.data()[i]) < 1e-9) continue;
        EXPECT_LE(RelErr(analytic.data()[i], fd), 1e-4)
            << "param " << which << " [" << i << "]";
      }
    };
    check(gw, 0);
    check(gu, 1);
    check(gv, 2);
    check(gbh, 3);
    check(gby, 4);
  }
}

TEST(RnnTest, AggregatorStepUsesPreUpdateSnapshots) {
  Toy t = MakeToy(2, 3, 4, 3, 1, 5);
  RnnAggState before = t.agg;
  RnnAggStepResult r = RnnAggregatorStep(t.agg, t.cfg, XwSteps(t, t.w), t.y,
                                         0.5);
  EXPECT_EQ(r.u_snapshot, before.u);
  EXPECT_EQ(r.v_snapshot, before.v);
  EXPECT_NE(t.agg.u, before.u);
  EXPECT_LE(RelErr(r.loss, ScalarForward(t, t.w, before.u, before.v,
                                         before.b_h, before.b_y)),
            1e-13);
}

TEST(RnnTest, ShapeErrors) {
  Toy t = MakeToy(2, 3, 4, 3, 1, 6);
  EXPECT_THROW(RnnForward(t.agg, t.cfg, {RealMatrix(3, 2)}), Error);
  RnnForward(t.agg, t.cfg, XwSteps(t, t.w));
  EXPECT_THROW(RnnSignals(t.agg, t.cfg, {t.y[0]}), Error);
  BpttSignals sig = RnnSignals(t.agg, t.cfg, t.y);
  EXPECT_THROW(RnnGradWLocal({t.x[0]}, sig, t.agg.v, t.agg.u, 1), Error);
  RnnConfig bad;
  bad.output_activation = Activation::kSoftmax;
  EXPECT_THROW(bad.Validate(), Error);
}

std::vector<RnnLocalNode> SplitNodes(const Toy& t) {
  std::vector<RnnLocalNode> nodes(2);
  for (int l = 0; l < 2; ++l) {
    nodes[l].node_id = l + 1;
    const size_t b = l == 0 ? 0 : 2, e = l == 0 ? 2 : 4;
    for (const auto& x : t.x) nodes[l].x_steps.push_back(ColumnRange(x, b, e));
    nodes[l].weights = RowRange(t.w, b, e);
  }
  return nodes;
}

TEST(RnnTest, IterationIsReproducibleAndRingCloseToPlain) {
  Toy t = MakeToy(2, 6, 4, 3, 1, 7);
  t.cfg.alpha = 0.2;
  std::vector<size_t> batch{0, 2, 3, 5};
  auto run = [&](std::optional<RingParams> ring) {
    auto nodes = SplitNodes(t);
    RnnAggState agg = t.agg;
    for (uint32_t it = 0; it < 5; ++it) {
      RnnTrainIteration(nodes, agg, t.cfg, t.y, batch, ring, 11, it);
    }
    std::vector<RealMatrix> w{nodes[0].weights, nodes[1].weights};
    return std::make_pair(VerticalConcat(w), agg.u);
  };
  auto a = run(std::nullopt), b = run(std::nullopt);
  EXPECT_EQ(a, b);
  auto r = run(RingParams{});
  EXPECT_LE(MaxAbsDiff(a.first, r.first), 5 * 16 * std::ldexp(1.0, -20));
  EXPECT_EQ(r, run(RingParams{}));
}

TEST(RnnTest, ZeroDataLeavesBiasOnlyDynamics) {
  Toy t = MakeToy(2, 3, 4, 3, 1, 8);
  for (auto& x : t.x) x = RealMatrix(x.rows(), x.cols());
  auto nodes = SplitNodes(t);
  RnnAggState agg = t.agg;
  RnnTrainIteration(nodes, agg, t.cfg, t.y, {0, 1, 2}, std::nullopt, 1, 0);
  EXPECT_EQ(nodes[0].weights, RowRange(t.w, 0, 2));
  EXPECT_EQ(nodes[1].weights, RowRange(t.w, 2, 4));
  EXPECT_NE(agg.b_h, t.agg.b_h);
}

}  // namespace
}  // namespace privcoll
