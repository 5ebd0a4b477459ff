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

#ifndef PRIVCOLL_ORACLE_HPP_
#define PRIVCOLL_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "privcoll/config.hpp"
#include "privcoll/data_io.hpp"
#include "privcoll/error.hpp"
#include "privcoll/model.hpp"
#include "privcoll/params.hpp"
#include "privcoll/protocol.hpp"
#include "privcoll/rnn.hpp"
#include "privcoll/tensor.hpp"

namespace privcoll {

// Plain gradient descent on the concatenated X with the distributed run's
// seed, init and batch stream. The gradient code here is written directly
// from the loss definitions and shares nothing with the protocol path.
struct CentralizedRun {
  std::vector<std::vector<double>> trajectory;  // [0] = init, [t] after t steps
  std::vector<IterationReport> history;         // loss per iteration
  ModelParams final_params;
  bool converged = false;
};

namespace oracle_detail {

inline double Sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline RealMatrix Apply(Activation a, const RealMatrix& z) {
  RealMatrix out(z.rows(), z.cols());
  if (a == Activation::kSoftmax) {
    for (size_t i = 0; i < z.rows(); ++i) {
      double mx = -INFINITY, sum = 0.0;
      for (size_t j = 0; j < z.cols(); ++j) mx = std::max(mx, z(i, j));
      for (size_t j = 0; j < z.cols(); ++j) {
        out(i, j) = std::exp(z(i, j) - mx);
        sum += out(i, j);
      }
      for (size_t j = 0; j < z.cols(); ++j) out(i, j) /= sum;
    }
    return out;
  }
  for (size_t i = 0; i < z.size(); ++i) {
    const double v = z.data()[i];
    switch (a) {
      case Activation::kIdentity: out.data()[i] = v; break;
      case Activation::kSigmoid: out.data()[i] = Sig(v); break;
      case Activation::kTanh: out.data()[i] = std::tanh(v); break;
      default: break;
    }
  }
  return out;
}

// Derivative expressed through the activation output.
inline RealMatrix DerivFromOutput(Activation a, const RealMatrix& out) {
  RealMatrix d(out.rows(), out.cols());
  for (size_t i = 0; i < out.size(); ++i) {
    const double o = out.data()[i];
    switch (a) {
      case Activation::kIdentity: d.data()[i] = 1.0; break;
      case Activation::kSigmoid: d.data()[i] = o * (1.0 - o); break;
      case Activation::kTanh: d.data()[i] = 1.0 - o * o; break;
      default: Fail(ErrorCode::kConfig, "no elementwise derivative");
    }
  }
  return d;
}

// Mean cross-entropy from probabilities, clamped away from log(0).
inline double CrossEntropy(Activation out, const RealMatrix& p,
                           const RealMatrix& y) {
  const double eps = 1e-300;
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i], yi = y.data()[i];
    total -= yi * std::log(std::max(pi, eps));
    if (out == Activation::kSigmoid) {
      total -= (1.0 - yi) * std::log(std::max(1.0 - pi, eps));
    }
  }
  return total / static_cast<double>(p.rows());
}

inline void Step(RealMatrix& p, double alpha, const RealMatrix& g) {
  for (size_t i = 0; i < p.size(); ++i) p.data()[i] -= alpha * g.data()[i];
}

inline RealMatrix RowSums(const RealMatrix& g) {  // 1 x cols
  RealMatrix out(1, g.cols());
  for (size_t i = 0; i < g.rows(); ++i) {
    for (size_t j = 0; j < g.cols(); ++j) out(0, j) += g(i, j);
  }
  return out;
}

inline RealMatrix PlusRow(RealMatrix z, const RealMatrix& b) {
  for (size_t i = 0; i < z.rows(); ++i) {
    for (size_t j = 0; j < z.cols(); ++j) z(i, j) += b(0, j);
  }
  return z;
}

}  // namespace oracle_detail

// W(0) = the per-range node initializations stacked in feature order.
inline RealMatrix CentralizedInit(const TrainingConfig& cfg,
                                  const VerticalPartitionPlan& plan) {
  std::vector<RealMatrix> blocks;
  for (size_t l = 0; l < plan.parties(); ++l) {
    blocks.push_back(InitLocalWeights(cfg.seed, static_cast<int>(l + 1),
                                      plan.ranges[l].width(),
                                      cfg.model.shared_width()));
  }
  return StackWeights(blocks);
}

inline CentralizedRun TrainCentralized(TrainingConfig cfg, const Dataset& data) {
  using namespace oracle_detail;
  cfg.model.outputs = data.outputs();
  cfg.model.Validate();
  const ModelSpec& spec = cfg.model;
  const auto plan = ResolvePlan(cfg, data.features());
  const double alpha = cfg.alpha;

  ModelParams p;
  p.kind = spec.kind;
  p.w = CentralizedInit(cfg, plan);
  RnnConfig rcfg;
  if (spec.kind == ModelKind::kRnn) {
    rcfg = MakeRnnConfig(cfg, data.steps());
    RnnAggState init = InitRnnAgg(rcfg, spec.outputs, cfg.seed);
    p.u = init.u;
    p.v = init.v;
    p.b_h = init.b_h;
    p.b_y = init.b_y;
  } else {
    p.head = InitHead(spec, cfg.seed);
  }

  CentralizedRun run;
  run.trajectory.push_back(FlattenParams(p));
  BatchSchedule schedule(cfg.seed, data.samples(), cfg.effective_batch());
  ConvergenceTracker tracker(cfg.tol, cfg.patience);
  const size_t iters = MaxIterations(cfg, data.samples());
  for (size_t t = 0; t < iters && !tracker.converged(); ++t) {
    auto batch = schedule.Next();
    const double m = static_cast<double>(batch.size());
    IterationReport rep;
    rep.iteration = static_cast<uint32_t>(t);
    rep.epoch = schedule.epoch() - 1;

    if (spec.kind == ModelKind::kLinear || spec.kind == ModelKind::kLogistic) {
      RealMatrix x = RowSlice(data.x(), batch), y = RowSlice(data.y(), batch);
      RealMatrix z = Matmul(x, p.w);
      if (spec.fit_bias) z = PlusRow(z, p.head.shared_bias);
      RealMatrix err;
      if (spec.kind == ModelKind::kLinear) {
        err = Sub(z, y);
        rep.loss = SquaredNorm(err) / (2.0 * m);
      } else {
        RealMatrix prob = Apply(spec.output_activation, z);
        rep.loss = CrossEntropy(spec.output_activation, prob, y);
        err = Sub(prob, y);
      }
      if (!std::isfinite(rep.loss)) {
        Fail(ErrorCode::kNonFiniteLoss, "centralized loss is not finite");
      }
      // dJ/dW = X^T err / m + lambda W; dJ/db = column sums of err / m.
      RealMatrix gw = Transpose(x);
      gw = Scale(Matmul(gw, err), 1.0 / m);
      if (spec.lambda != 0.0) gw = Add(gw, Scale(p.w, spec.lambda));
      RealMatrix gb = Scale(RowSums(err), 1.0 / m);
      Step(p.w, alpha, gw);
      if (spec.fit_bias) Step(p.head.shared_bias, alpha, gb);
    } else if (spec.kind == ModelKind::kFeedForward) {
      RealMatrix x = RowSlice(data.x(), batch), y = RowSlice(data.y(), batch);
      // Layer 0 is (W, shared_bias); layers 1.. come from the head.
      std::vector<const RealMatrix*> weights{&p.w};
      std::vector<const RealMatrix*> biases{&p.head.shared_bias};
      for (const auto& l : p.head.layers) {
        weights.push_back(&l.weights);
        biases.push_back(&l.bias);
      }
      const size_t depth = weights.size();
      std::vector<RealMatrix> acts{x};
      for (size_t i = 0; i < depth; ++i) {
        RealMatrix z = Matmul(acts.back(), *weights[i]);
        if (i > 0 || spec.fit_bias) z = PlusRow(z, *biases[i]);
        acts.push_back(Apply(i + 1 == depth ? spec.output_activation
                                            : spec.hidden_activation,
                             z));
      }
      rep.loss = CrossEntropy(spec.output_activation, acts.back(), y);
      if (!std::isfinite(rep.loss)) {
        Fail(ErrorCode::kNonFiniteLoss, "centralized loss is not finite");
      }
      std::vector<RealMatrix> gw(depth), gb(depth);
      RealMatrix d = Scale(Sub(acts.back(), y), 1.0 / m);
      for (size_t i = depth; i-- > 0;) {
        gw[i] = Matmul(Transpose(acts[i]), d);
        gb[i] = RowSums(d);
        if (i > 0) {
          d = Hadamard(Matmul(d, Transpose(*weights[i])),
                       DerivFromOutput(spec.hidden_activation, acts[i]));
        }
      }
      if (spec.lambda != 0.0) gw[0] = Add(gw[0], Scale(p.w, spec.lambda));
      Step(p.w, alpha, gw[0]);
      if (spec.fit_bias) Step(p.head.shared_bias, alpha, gb[0]);
      for (size_t i = 1; i < depth; ++i) {
        Step(p.head.layers[i - 1].weights, alpha, gw[i]);
        Step(p.head.layers[i - 1].bias, alpha, gb[i]);
      }
    } else {
      // Recurrent: forward over T steps, then the usual backward recursion
      // carrying dJ/dh from step c+1 into step c.
      const size_t steps = data.steps();
      std::vector<RealMatrix> xs, ys, hs, outs;
      RealMatrix h_prev(batch.size(), rcfg.hidden);
      for (size_t c = 0; c < steps; ++c) {
        xs.push_back(RowSlice(data.x_steps[c], batch));
        ys.push_back(RowSlice(data.y_steps[c], batch));
        RealMatrix zh = PlusRow(Matmul(xs[c], p.w), p.b_h);
        zh = Add(zh, Matmul(h_prev, p.u));
        hs.push_back(Apply(rcfg.hidden_activation, zh));
        outs.push_back(Apply(rcfg.output_activation,
                             PlusRow(Matmul(hs[c], p.v), p.b_y)));
        h_prev = hs[c];
      }
      for (size_t c = 0; c < steps; ++c) {
        rep.loss += SquaredNorm(Sub(outs[c], ys[c])) / (2.0 * m);
      }
      if (!std::isfinite(rep.loss)) {
        Fail(ErrorCode::kNonFiniteLoss, "centralized loss is not finite");
      }
      RealMatrix gw(p.w.rows(), p.w.cols()), gu(p.u.rows(), p.u.cols());
      RealMatrix gv(p.v.rows(), p.v.cols());
      RealMatrix gbh(1, rcfg.hidden), gby(1, p.v.cols());
      RealMatrix dh_next(batch.size(), rcfg.hidden);
      for (size_t c = steps; c-- > 0;) {
        RealMatrix dzy =
            Hadamard(Scale(Sub(outs[c], ys[c]), 1.0 / m),
                     DerivFromOutput(rcfg.output_activation, outs[c]));
        gv = Add(gv, Matmul(Transpose(hs[c]), dzy));
        gby = Add(gby, RowSums(dzy));
        RealMatrix dh = Add(Matmul(dzy, Transpose(p.v)), dh_next);
        RealMatrix dzh =
            Hadamard(dh, DerivFromOutput(rcfg.hidden_activation, hs[c]));
        gw = Add(gw, Matmul(Transpose(xs[c]), dzh));
        if (c > 0) gu = Add(gu, Matmul(Transpose(hs[c - 1]), dzh));
        gbh = Add(gbh, RowSums(dzh));
        dh_next = Matmul(dzh, Transpose(p.u));
      }
      Step(p.w, alpha, gw);
      Step(p.u, alpha, gu);
      Step(p.v, alpha, gv);
      Step(p.b_h, alpha, gbh);
      Step(p.b_y, alpha, gby);
    }
    tracker.Update(rep.loss);
    run.history.push_back(rep);
    run.trajectory.push_back(FlattenParams(p));
  }
  run.converged = tracker.converged();
  run.final_params = std::move(p);
  return run;
}

// Per-iteration max |param difference|; both trajectories start at init.
inline std::vector<double> CompareTrajectories(
    const std::vector<std::vector<double>>& central,
    const std::vector<std::vector<double>>& distributed) {
  if (central.size() != distributed.size()) {
    Fail(ErrorCode::kLengthMismatch,
         "trajectory lengths differ: " + std::to_string(central.size()) +
             " vs " + std::to_string(distributed.size()));
  }
  std::vector<double> out;
  for (size_t i = 0; i < central.size(); ++i) {
    if (central[i].size() != distributed[i].size()) {
      Fail(ErrorCode::kLengthMismatch,
           "parameter count differs at iteration " + std::to_string(i));
    }
    out.push_back(MaxParamDiff(central[i], distributed[i]));
  }
  return out;
}

struct DistributedRun {
  std::vector<std::vector<double>> trajectory;
  TrainingResult result;
};

// In-process distributed training that snapshots every party's parameters
// after each round.
inline DistributedRun RunDistributedWithTrajectory(const TrainingConfig& cfg,
                                                   const Dataset& data) {
  DistributedRun run;
  Simulation sim(cfg, data);
  run.trajectory.push_back(FlattenParams(sim.Parameters()));
  while (!sim.done()) {
    sim.RunIteration();
    run.trajectory.push_back(FlattenParams(sim.Parameters()));
  }
  sim.Stop();
  run.result = sim.Result();
  return run;
}

}  // namespace privcoll

#endif  // PRIVCOLL_ORACLE_HPP_
