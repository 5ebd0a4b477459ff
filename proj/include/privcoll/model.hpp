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

#ifndef PRIVCOLL_MODEL_HPP_
#define PRIVCOLL_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/prg.hpp"
#include "privcoll/tensor.hpp"

namespace privcoll {

enum class ModelKind { kLinear, kLogistic, kFeedForward, kRnn };
enum class Activation { kIdentity, kSigmoid, kSoftmax, kTanh };

inline std::string ModelKindName(ModelKind k) {
  switch (k) {
    case ModelKind::kLinear: return "linear";
    case ModelKind::kLogistic: return "logistic";
    case ModelKind::kFeedForward: return "nn";
    case ModelKind::kRnn: return "rnn";
  }
  return "?";
}

inline RealMatrix Activate(Activation a, const RealMatrix& z) {
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kSigmoid: return Sigmoid(z);
    case Activation::kSoftmax: return SoftmaxRows(z);
    case Activation::kTanh: return Tanh(z);
  }
  return z;
}

// Elementwise derivative; softmax has no elementwise derivative and is only
// used as an output paired with cross-entropy.
inline RealMatrix ActivatePrime(Activation a, const RealMatrix& z) {
  switch (a) {
    case Activation::kIdentity: return RealMatrix(z.rows(), z.cols(), 1.0);
    case Activation::kSigmoid: return SigmoidPrime(z);
    case Activation::kTanh: return TanhPrime(z);
    case Activation::kSoftmax: break;
  }
  Fail(ErrorCode::kConfig, "softmax has no elementwise derivative");
}

struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  size_t outputs = 1;                  // k
  std::vector<size_t> hidden_layers;   // feed-forward only
  Activation hidden_activation = Activation::kSigmoid;
  Activation output_activation = Activation::kSigmoid;  // logistic / nn
  double lambda = 0.0;                 // L2 on local coefficient blocks
  bool fit_bias = true;
  size_t rnn_hidden = 8;

  // Column count of the shared product X^l W^l.
  size_t shared_width() const {
    switch (kind) {
      case ModelKind::kFeedForward:
        return hidden_layers.empty() ? outputs : hidden_layers.front();
      case ModelKind::kRnn:
        return rnn_hidden;
      default:
        return outputs;
    }
  }

  void Validate() const {
    if (outputs < 1) Fail(ErrorCode::kConfig, "outputs must be >= 1");
    if (lambda < 0) Fail(ErrorCode::kConfig, "lambda must be >= 0");
    if (kind == ModelKind::kFeedForward && hidden_layers.empty()) {
      Fail(ErrorCode::kConfig, "feed-forward model needs a hidden layer");
    }
    if (kind == ModelKind::kLogistic || kind == ModelKind::kFeedForward) {
      if (output_activation != Activation::kSigmoid &&
          output_activation != Activation::kSoftmax) {
        Fail(ErrorCode::kConfig, "output activation must be sigmoid/softmax");
      }
    }
    if (kind == ModelKind::kRnn && rnn_hidden < 1) {
      Fail(ErrorCode::kConfig, "rnn hidden width must be >= 1");
    }
  }
};

// Aggregator-side parameters: the bias on the shared pre-activation and,
// for the feed-forward model, every layer after the first.
struct DenseLayer {
  RealMatrix weights;  // in x out
  RealMatrix bias;     // 1 x out
};

struct ModelHead {
  RealMatrix shared_bias;          // 1 x shared_width
  std::vector<DenseLayer> layers;  // feed-forward layers 2..L
};

// Delta = dJ/d(XW) for the current batch.
struct DeltaMessage {
  uint32_t iteration = 0;
  RealMatrix delta;  // |B| x shared_width
  double loss = 0.0;
};

// Per-node gradient pieces: grad = X_B^T Delta + tau, tau = lambda W.
struct LocalGradient {
  RealMatrix data_term;
  RealMatrix tau;
};

// ---------------------------------------------------------------------------
// Initialization

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) from the given stream.
inline RealMatrix UniformInit(size_t rows, size_t cols, size_t fan_in,
                              Prg& prg) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  RealMatrix m(rows, cols);
  for (double& v : m.data()) v = prg.Uniform(-bound, bound);
  return m;
}

// W^l(0) for node `node_id`. Fan-in is the node's own d_l since n is
// private. The centralized oracle calls this per feature range so both
// sides start from identical parameters.
inline RealMatrix InitLocalWeights(uint64_t seed, int node_id, size_t d_l,
                                   size_t width) {
  Prg prg(DeriveKey(seed, Stream::kInit, {static_cast<uint64_t>(node_id)}));
  return UniformInit(d_l, width, d_l, prg);
}

inline ModelHead InitHead(const ModelSpec& spec, uint64_t seed) {
  ModelHead head;
  head.shared_bias = RealMatrix(1, spec.shared_width());
  if (spec.kind == ModelKind::kFeedForward) {
    Prg prg(DeriveKey(seed, Stream::kInit, {0}));
    std::vector<size_t> widths = spec.hidden_layers;
    widths.push_back(spec.outputs);
    for (size_t i = 1; i < widths.size(); ++i) {
      head.layers.push_back(
          {UniformInit(widths[i - 1], widths[i], widths[i - 1], prg),
           RealMatrix(1, widths[i])});
    }
  }
  return head;
}

// ---------------------------------------------------------------------------
// Loss

namespace detail {

// log(1 + e^z) without overflow.
inline double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Mean cross-entropy of logits z against targets y.
inline double CrossEntropyFromLogits(Activation out, const RealMatrix& z,
                                     const RealMatrix& y) {
  const double m = static_cast<double>(z.rows());
  double total = 0.0;
  if (out == Activation::kSoftmax) {
    for (size_t i = 0; i < z.rows(); ++i) {
      auto zr = z.row(i);
      double mx = zr[0];
      for (double v : zr) mx = std::max(mx, v);
      double lse = 0.0;
      for (double v : zr) lse += std::exp(v - mx);
      lse = mx + std::log(lse);
      for (size_t j = 0; j < zr.size(); ++j) total -= y(i, j) * (zr[j] - lse);
    }
  } else {
    for (size_t i = 0; i < z.size(); ++i) {
      const double zi = z.data()[i], yi = y.data()[i];
      // -[y log s(z) + (1-y) log(1-s(z))]
      total += yi * Softplus(-zi) + (1.0 - yi) * Softplus(zi);
    }
  }
  return total / m;
}

}  // namespace detail

// J for linear (MSE/2) or logistic (cross-entropy) given the full
// pre-activation xw (bias already added).
inline double Loss(const ModelSpec& spec, const RealMatrix& z,
                   const RealMatrix& y) {
  if (!z.SameShape(y)) {
    Fail(ErrorCode::kShapeMismatch,
         "loss: " + z.ShapeString() + " vs " + y.ShapeString());
  }
  if (spec.kind == ModelKind::kLinear) {
    return SquaredNorm(Sub(z, y)) / (2.0 * static_cast<double>(z.rows()));
  }
  return detail::CrossEntropyFromLogits(spec.output_activation, z, y);
}

// ---------------------------------------------------------------------------
// Delta (aggregator side)

namespace detail {

inline void RequireFinite(double loss) {
  if (!std::isfinite(loss)) {
    Fail(ErrorCode::kNonFiniteLoss, "loss is not finite; training diverged");
  }
}

inline RealMatrix WithBias(const ModelSpec& spec, const RealMatrix& xw,
                           const ModelHead& head) {
  return spec.fit_bias ? AddRowVector(xw, head.shared_bias) : xw;
}

inline void UpdateBias(RealMatrix& bias, const RealMatrix& grad_rows,
                       double alpha) {
  AxpyInPlace(bias, alpha, ColumnSums(grad_rows));
}

}  // namespace detail

// Computes Delta for the reconstructed xw = sum_l X^l_B W^l and, in the same
// call, takes one step on every aggregator-held parameter (bias, and the
// deeper layers of the feed-forward model). `loss` is J before the step.
inline DeltaMessage ComputeDelta(const ModelSpec& spec, ModelHead& head,
                                 const RealMatrix& xw, const RealMatrix& y,
                                 double alpha) {
  if (xw.cols() != spec.shared_width() || xw.rows() != y.rows()) {
    Fail(ErrorCode::kShapeMismatch,
         "compute_delta: xw " + xw.ShapeString() + ", y " + y.ShapeString());
  }
  const double inv_m = 1.0 / static_cast<double>(xw.rows());
  DeltaMessage msg;
  switch (spec.kind) {
    case ModelKind::kLinear:
    case ModelKind::kLogistic: {
      if (!xw.SameShape(y)) {
        Fail(ErrorCode::kShapeMismatch, "compute_delta: y shape");
      }
      RealMatrix z = detail::WithBias(spec, xw, head);
      msg.loss = Loss(spec, z, y);
      detail::RequireFinite(msg.loss);
      RealMatrix residual = spec.kind == ModelKind::kLinear
                                ? Sub(z, y)
                                : Sub(Activate(spec.output_activation, z), y);
      msg.delta = Scale(residual, inv_m);
      break;
    }
    case ModelKind::kFeedForward: {
      if (y.cols() != spec.outputs) {
        Fail(ErrorCode::kShapeMismatch, "compute_delta: y width");
      }
      // Forward through the aggregator-held layers.
      std::vector<RealMatrix> pre{detail::WithBias(spec, xw, head)};
      std::vector<RealMatrix> act{Activate(spec.hidden_activation, pre[0])};
      for (size_t i = 0; i < head.layers.size(); ++i) {
        pre.push_back(AddRowVector(Matmul(act.back(), head.layers[i].weights),
                                   head.layers[i].bias));
        const bool last = i + 1 == head.layers.size();
        act.push_back(Activate(
            last ? spec.output_activation : spec.hidden_activation,
            pre.back()));
      }
      msg.loss =
          detail::CrossEntropyFromLogits(spec.output_activation, pre.back(), y);
      detail::RequireFinite(msg.loss);
      // Backward: grad holds dJ/d(pre[i]) as i walks down.
      RealMatrix grad = Scale(Sub(act.back(), y), inv_m);
      std::vector<RealMatrix> grad_w(head.layers.size());
      std::vector<RealMatrix> grad_b(head.layers.size());
      for (size_t i = head.layers.size(); i-- > 0;) {
        grad_w[i] = MatmulTransposedLeft(act[i], grad);
        grad_b[i] = ColumnSums(grad);
        grad = Hadamard(MatmulTransposedRight(grad, head.layers[i].weights),
                        ActivatePrime(spec.hidden_activation, pre[i]));
      }
      for (size_t i = 0; i < head.layers.size(); ++i) {
        AxpyInPlace(head.layers[i].weights, alpha, grad_w[i]);
        AxpyInPlace(head.layers[i].bias, alpha, grad_b[i]);
      }
      msg.delta = std::move(grad);
      break;
    }
    case ModelKind::kRnn:
      Fail(ErrorCode::kConfig, "recurrent deltas are computed by the rnn module");
  }
  if (spec.fit_bias) detail::UpdateBias(head.shared_bias, msg.delta, alpha);
  return msg;
}

// Node-side gradient: (X^l_B)^T Delta + lambda W^l.
inline LocalGradient ComputeLocalGradient(const RealMatrix& x_batch,
                                          const RealMatrix& weights,
                                          const RealMatrix& delta,
                                          double lambda) {
  if (x_batch.rows() != delta.rows() || weights.rows() != x_batch.cols() ||
      weights.cols() != delta.cols()) {
    Fail(ErrorCode::kShapeMismatch,
         "local_update: X_B " + x_batch.ShapeString() + ", W " +
             weights.ShapeString() + ", Delta " + delta.ShapeString());
  }
  return {MatmulTransposedLeft(x_batch, delta), Scale(weights, lambda)};
}

// W^l <- W^l - alpha (X_B^T Delta + lambda W^l).
inline void LocalUpdate(RealMatrix& weights, const RealMatrix& x_batch,
                        const RealMatrix& delta, double alpha, double lambda) {
  LocalGradient g = ComputeLocalGradient(x_batch, weights, delta, lambda);
  if (lambda != 0.0) AddInPlace(g.data_term, g.tau);
  AxpyInPlace(weights, alpha, g.data_term);
}

// Predictions of a non-recurrent model given the full pre-activation xw
// (bias not yet added): regression values or class probabilities.
inline RealMatrix Predict(const ModelSpec& spec, const ModelHead& head,
                          const RealMatrix& xw) {
  RealMatrix z = detail::WithBias(spec, xw, head);
  switch (spec.kind) {
    case ModelKind::kLinear: return z;
    case ModelKind::kLogistic: return Activate(spec.output_activation, z);
    case ModelKind::kFeedForward: {
      RealMatrix a = Activate(spec.hidden_activation, z);
      for (size_t i = 0; i < head.layers.size(); ++i) {
        const bool last = i + 1 == head.layers.size();
        a = Activate(last ? spec.output_activation : spec.hidden_activation,
                     AddRowVector(Matmul(a, head.layers[i].weights),
                                  head.layers[i].bias));
      }
      return a;
    }
    case ModelKind::kRnn: break;
  }
  Fail(ErrorCode::kConfig, "predict: recurrent model");
}

// ---------------------------------------------------------------------------
// Mini-batch schedule and convergence

// Epoch-wise seeded shuffle without replacement. The last batch of an epoch
// may be short. Every party derives the same sequence from the seed.
class BatchSchedule {
 public:
  BatchSchedule(uint64_t seed, size_t samples, size_t batch)
      : seed_(seed), samples_(samples), batch_(std::min(batch, samples)) {
    if (samples_ == 0 || batch_ == 0) {
      Fail(ErrorCode::kConfig, "batch schedule needs samples and batch > 0");
    }
  }

  size_t batches_per_epoch() const { return (samples_ + batch_ - 1) / batch_; }

  std::vector<size_t> Next() {
    if (cursor_ == 0 || cursor_ >= order_.size()) Reshuffle();
    size_t end = std::min(cursor_ + batch_, order_.size());
    std::vector<size_t> out(order_.begin() + cursor_, order_.begin() + end);
    cursor_ = end;
    return out;
  }

  size_t epoch() const { return epoch_; }

 private:
  void Reshuffle() {
    order_.resize(samples_);
    for (size_t i = 0; i < samples_; ++i) order_[i] = i;
    Prg prg(DeriveKey(seed_, Stream::kBatch, {epoch_}));
    prg.Shuffle(std::span<size_t>(order_));
    ++epoch_;
    cursor_ = 0;
  }

  uint64_t seed_;
  size_t samples_;
  size_t batch_;
  size_t epoch_ = 0;
  size_t cursor_ = 0;
  std::vector<size_t> order_;
};

// Converged once |J_t - J_{t-1}| < tol for `patience` consecutive steps.
class ConvergenceTracker {
 public:
  explicit ConvergenceTracker(double tol, size_t patience = 5)
      : tol_(tol), patience_(patience) {}

  bool Update(double loss) {
    if (has_last_ && std::abs(loss - last_) < tol_) {
      ++streak_;
    } else {
      streak_ = 0;
    }
    last_ = loss;
    has_last_ = true;
    return converged();
  }

  bool converged() const { return streak_ >= patience_; }

 private:
  double tol_;
  size_t patience_;
  double last_ = 0.0;
  bool has_last_ = false;
  size_t streak_ = 0;
};

}  // namespace privcoll

#endif  // PRIVCOLL_MODEL_HPP_
