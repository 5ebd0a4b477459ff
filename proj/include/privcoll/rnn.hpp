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

#ifndef PRIVCOLL_RNN_HPP_
#define PRIVCOLL_RNN_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/model.hpp"
#include "privcoll/prg.hpp"
#include "privcoll/ring.hpp"
#include "privcoll/sharing.hpp"
#include "privcoll/tensor.hpp"

// Recurrent network split between local nodes and the aggregator. Batches
// are rows, so with X^(c): m x n the recurrences read
//   Z_h(c) = X(c) W + h(c-1) U + b_h,   h(c) = s1(Z_h(c))
//   Z_y(c) = h(c) V + b_y,              yhat(c) = s2(Z_y(c))
// with U: H x H, V: H x k, and J = sum_c 1/(2m) |yhat(c) - y(c)|^2.
// Steps are indexed c = 0..T-1 and h(-1) = 0.

namespace privcoll {

struct RnnConfig {
  size_t steps = 3;   // T
  size_t hidden = 8;  // H
  Activation hidden_activation = Activation::kSigmoid;
  Activation output_activation = Activation::kSigmoid;
  double alpha = 0.1;

  void Validate() const {
    if (steps < 1) Fail(ErrorCode::kConfig, "rnn needs >= 1 timestep");
    if (hidden < 1) Fail(ErrorCode::kConfig, "rnn hidden width must be >= 1");
    if (hidden_activation == Activation::kSoftmax ||
        output_activation == Activation::kSoftmax) {
      Fail(ErrorCode::kConfig, "rnn activations must be elementwise");
    }
  }
};

struct RnnAggState {
  RealMatrix u;    // H x H
  RealMatrix v;    // H x k
  RealMatrix b_h;  // 1 x H
  RealMatrix b_y;  // 1 x k
  // Forward caches, one entry per step.
  std::vector<RealMatrix> z_h, h, z_y, y_hat;
};

// Backprop-through-time signals the aggregator broadcasts to local nodes.
struct BpttSignals {
  std::vector<RealMatrix> delta_loss;  // dJ(c)/dyhat(c), m x k
  std::vector<RealMatrix> delta_yhat;  // s2'(Z_y(c)), m x k
  std::vector<RealMatrix> delta_h;     // s1'(Z_h(c)), m x H
  size_t steps() const { return delta_loss.size(); }
};

inline RnnAggState InitRnnAgg(const RnnConfig& cfg, size_t outputs,
                              uint64_t seed) {
  Prg prg(DeriveKey(seed, Stream::kInit, {0}));
  RnnAggState s;
  s.u = UniformInit(cfg.hidden, cfg.hidden, cfg.hidden, prg);
  s.v = UniformInit(cfg.hidden, outputs, cfg.hidden, prg);
  s.b_h = RealMatrix(1, cfg.hidden);
  s.b_y = RealMatrix(1, outputs);
  return s;
}

// Forward pass over reconstructed X(c)W; fills the caches.
inline const std::vector<RealMatrix>& RnnForward(
    RnnAggState& agg, const RnnConfig& cfg,
    const std::vector<RealMatrix>& xw_steps) {
  agg.z_h.clear();
  agg.h.clear();
  agg.z_y.clear();
  agg.y_hat.clear();
  const size_t hidden = agg.u.rows();
  for (size_t c = 0; c < xw_steps.size(); ++c) {
    const RealMatrix& xw = xw_steps[c];
    if (xw.cols() != hidden) {
      Fail(ErrorCode::kShapeMismatch,
           "rnn_forward: X(c)W is " + xw.ShapeString() + ", hidden " +
               std::to_string(hidden));
    }
    RealMatrix z = AddRowVector(xw, agg.b_h);
    if (c > 0) AddInPlace(z, Matmul(agg.h.back(), agg.u));
    agg.h.push_back(Activate(cfg.hidden_activation, z));
    agg.z_h.push_back(std::move(z));
    RealMatrix zy = AddRowVector(Matmul(agg.h.back(), agg.v), agg.b_y);
    agg.y_hat.push_back(Activate(cfg.output_activation, zy));
    agg.z_y.push_back(std::move(zy));
  }
  return agg.y_hat;
}

inline double RnnLoss(const RnnAggState& agg,
                      const std::vector<RealMatrix>& y_steps) {
  double total = 0.0;
  for (size_t c = 0; c < agg.y_hat.size(); ++c) {
    total += SquaredNorm(Sub(agg.y_hat[c], y_steps.at(c))) /
             (2.0 * static_cast<double>(agg.y_hat[c].rows()));
  }
  return total;
}

inline BpttSignals RnnSignals(const RnnAggState& agg, const RnnConfig& cfg,
                              const std::vector<RealMatrix>& y_steps) {
  if (y_steps.size() != agg.y_hat.size()) {
    Fail(ErrorCode::kShapeMismatch, "rnn: label steps != forward steps");
  }
  BpttSignals sig;
  for (size_t c = 0; c < agg.y_hat.size(); ++c) {
    const double inv_m = 1.0 / static_cast<double>(agg.y_hat[c].rows());
    sig.delta_loss.push_back(Scale(Sub(agg.y_hat[c], y_steps[c]), inv_m));
    sig.delta_yhat.push_back(ActivatePrime(cfg.output_activation, agg.z_y[c]));
    sig.delta_h.push_back(ActivatePrime(cfg.hidden_activation, agg.z_h[c]));
  }
  return sig;
}

// dJ(c)/dZ_y(c) = delta_loss o delta_yhat.
inline RealMatrix OutputSignal(const BpttSignals& sig, size_t c) {
  return Hadamard(sig.delta_loss.at(c), sig.delta_yhat.at(c));
}

// dJ(c)/dZ_h(k) for k <= c: the output signal pulled back through V, then
// the time-ordered product prod_{i=k+1..c} (delta_h(i) o .) U^T applied from
// i = c down to k+1, then the diagonal factor delta_h(k). For k == c the
// product is empty and contributes the identity.
inline RealMatrix PulledBackSignal(const BpttSignals& sig, const RealMatrix& v,
                                   const RealMatrix& u, size_t c, size_t k) {
  RealMatrix e = MatmulTransposedRight(OutputSignal(sig, c), v);
  for (size_t i = c; i > k; --i) {
    e = MatmulTransposedRight(Hadamard(e, sig.delta_h.at(i)), u);
  }
  return Hadamard(e, sig.delta_h.at(k));
}

// dJ(c)/dV: h(c)^T [delta_loss o delta_yhat].
inline RealMatrix RnnGradV(const RnnAggState& agg, const BpttSignals& sig,
                           size_t c) {
  return MatmulTransposedLeft(agg.h.at(c), OutputSignal(sig, c));
}

// dJ(c)/dU: sum_{k=0..c} h(k-1)^T dJ(c)/dZ_h(k), with h(-1) = 0.
inline RealMatrix RnnGradU(const RnnAggState& agg, const BpttSignals& sig,
                           size_t c) {
  RealMatrix grad(agg.u.rows(), agg.u.cols());
  for (size_t k = 1; k <= c; ++k) {
    AddInPlace(grad, MatmulTransposedLeft(agg.h[k - 1],
                                          PulledBackSignal(sig, agg.v, agg.u,
                                                           c, k)));
  }
  return grad;
}

// dJ(c)/dW^l at a local node: sum_{k=0..c} X^{l(k)}^T dJ(c)/dZ_h(k). The
// node holds its own X^{l(k)} and receives the signals plus U, V snapshots.
inline RealMatrix RnnGradWLocal(const std::vector<RealMatrix>& x_steps,
                                const BpttSignals& sig, const RealMatrix& v,
                                const RealMatrix& u, size_t c) {
  if (x_steps.size() < c + 1) {
    Fail(ErrorCode::kShapeMismatch, "rnn_grad_w: missing timesteps");
  }
  RealMatrix grad;
  for (size_t k = 0; k <= c; ++k) {
    RealMatrix dz = PulledBackSignal(sig, v, u, c, k);
    if (x_steps[k].rows() != dz.rows()) {
      Fail(ErrorCode::kShapeMismatch, "rnn_grad_w: batch rows");
    }
    RealMatrix term = MatmulTransposedLeft(x_steps[k], dz);
    if (grad.empty()) {
      grad = std::move(term);
    } else {
      AddInPlace(grad, term);
    }
  }
  return grad;
}

struct RnnBiasGrads {
  RealMatrix b_h;
  RealMatrix b_y;
};

inline RnnBiasGrads RnnGradBiases(const RnnAggState& agg,
                                  const BpttSignals& sig, size_t c) {
  RnnBiasGrads g{RealMatrix(1, agg.u.rows()), ColumnSums(OutputSignal(sig, c))};
  for (size_t k = 0; k <= c; ++k) {
    AddInPlace(g.b_h, ColumnSums(PulledBackSignal(sig, agg.v, agg.u, c, k)));
  }
  return g;
}

// Sum over c of the node gradient, then W^l <- W^l - alpha * sum.
inline void RnnLocalUpdate(RealMatrix& weights,
                           const std::vector<RealMatrix>& x_steps,
                           const BpttSignals& sig, const RealMatrix& v,
                           const RealMatrix& u, double alpha) {
  RealMatrix total(weights.rows(), weights.cols());
  for (size_t c = 0; c < sig.steps(); ++c) {
    AddInPlace(total, RnnGradWLocal(x_steps, sig, v, u, c));
  }
  AxpyInPlace(weights, alpha, total);
}

struct RnnAggStepResult {
  BpttSignals signals;
  RealMatrix u_snapshot;  // pre-update, sent to nodes
  RealMatrix v_snapshot;
  double loss = 0.0;
};

// Aggregator half of one iteration: forward, signals, then every
// aggregator gradient from pre-update values, then the updates.
inline RnnAggStepResult RnnAggregatorStep(
    RnnAggState& agg, const RnnConfig& cfg,
    const std::vector<RealMatrix>& xw_steps,
    const std::vector<RealMatrix>& y_steps, double alpha) {
  RnnForward(agg, cfg, xw_steps);
  RnnAggStepResult r;
  r.loss = RnnLoss(agg, y_steps);
  if (!std::isfinite(r.loss)) {
    Fail(ErrorCode::kNonFiniteLoss, "rnn loss is not finite");
  }
  r.signals = RnnSignals(agg, cfg, y_steps);
  RealMatrix gv(agg.v.rows(), agg.v.cols()), gu(agg.u.rows(), agg.u.cols());
  RealMatrix gbh(1, agg.u.rows()), gby(1, agg.v.cols());
  for (size_t c = 0; c < r.signals.steps(); ++c) {
    AddInPlace(gv, RnnGradV(agg, r.signals, c));
    AddInPlace(gu, RnnGradU(agg, r.signals, c));
    RnnBiasGrads gb = RnnGradBiases(agg, r.signals, c);
    AddInPlace(gbh, gb.b_h);
    AddInPlace(gby, gb.b_y);
  }
  r.u_snapshot = agg.u;
  r.v_snapshot = agg.v;
  AxpyInPlace(agg.v, alpha, gv);
  AxpyInPlace(agg.u, alpha, gu);
  AxpyInPlace(agg.b_h, alpha, gbh);
  AxpyInPlace(agg.b_y, alpha, gby);
  return r;
}

// Node state for the single-process iteration below.
struct RnnLocalNode {
  int node_id = 0;
  std::vector<RealMatrix> x_steps;  // X^{l(c)}, all samples
  RealMatrix weights;               // d_l x H
};

// One full iteration with every party in the calling thread: per-step
// share/reconstruct of X(c)W (or a plain sum when `ring` is empty), forward,
// signals, aggregator updates, then node updates from the snapshots.
inline double RnnTrainIteration(std::vector<RnnLocalNode>& nodes,
                                RnnAggState& agg, const RnnConfig& cfg,
                                const std::vector<RealMatrix>& y_steps,
                                const std::vector<size_t>& batch,
                                std::optional<RingParams> ring,
                                uint64_t seed, uint32_t iteration) {
  std::vector<std::vector<RealMatrix>> x_batches(nodes.size());
  std::vector<RealMatrix> xw_steps, y_batch;
  for (size_t c = 0; c < cfg.steps; ++c) {
    std::vector<RealMatrix> products;
    for (size_t l = 0; l < nodes.size(); ++l) {
      x_batches[l].push_back(RowSlice(nodes[l].x_steps.at(c), batch));
      products.push_back(Matmul(x_batches[l].back(), nodes[l].weights));
    }
    if (ring) {
      std::vector<RingTensor> secrets;
      std::vector<Prg> prgs;
      for (size_t l = 0; l < nodes.size(); ++l) {
        secrets.push_back(Encode(products[l], *ring));
        prgs.emplace_back(DeriveKey(
            seed, Stream::kShare,
            {static_cast<uint64_t>(nodes[l].node_id), iteration, c}));
      }
      xw_steps.push_back(Decode(RunShareRound(std::move(secrets), prgs).total));
    } else {
      RealMatrix sum = products[0];
      for (size_t l = 1; l < products.size(); ++l) AddInPlace(sum, products[l]);
      xw_steps.push_back(std::move(sum));
    }
    y_batch.push_back(RowSlice(y_steps.at(c), batch));
  }
  RnnAggStepResult r = RnnAggregatorStep(agg, cfg, xw_steps, y_batch,
                                         cfg.alpha);
  for (size_t l = 0; l < nodes.size(); ++l) {
    RnnLocalUpdate(nodes[l].weights, x_batches[l], r.signals, r.v_snapshot,
                   r.u_snapshot, cfg.alpha);
  }
  return r.loss;
}

}  // namespace privcoll

#endif  // PRIVCOLL_RNN_HPP_
