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

#ifndef PRIVCOLL_PROTOCOL_HPP_
#define PRIVCOLL_PROTOCOL_HPP_

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "privcoll/config.hpp"
#include "privcoll/data_io.hpp"
#include "privcoll/error.hpp"
#include "privcoll/model.hpp"
#include "privcoll/params.hpp"
#include "privcoll/prg.hpp"
#include "privcoll/ring.hpp"
#include "privcoll/rnn.hpp"
#include "privcoll/sharing.hpp"
#include "privcoll/tcp.hpp"
#include "privcoll/tensor.hpp"
#include "privcoll/transport.hpp"
#include "privcoll/wire.hpp"

namespace privcoll {

// One aggregator round as seen from party 0.
struct IterationReport {
  uint32_t iteration = 0;
  uint64_t epoch = 0;
  double loss = 0.0;
  uint64_t bytes_sent = 0;   // every frame of every party this round
  uint64_t step2_bytes = 0;  // element bytes of SHARE and SHARE_SUM tensors
  // Timing (seconds). Excluded from determinism comparisons.
  double wall_s = 0.0;
  double collect_s = 0.0;    // CONTROL out until the last SHARE_SUM arrived
  double delta_s = 0.0;      // reconstruction, Delta and broadcast
  double agg_compute_s = 0.0;
  double node_compute_s = 0.0;  // slowest node
  double comm_s = 0.0;          // wall minus compute
};

inline RnnConfig MakeRnnConfig(const TrainingConfig& cfg, size_t steps) {
  RnnConfig r;
  r.steps = steps;
  r.hidden = cfg.model.rnn_hidden;
  r.hidden_activation = cfg.model.hidden_activation;
  r.output_activation = cfg.model.output_activation;
  r.alpha = cfg.alpha;
  return r;
}

inline size_t MaxIterations(const TrainingConfig& cfg, size_t samples) {
  BatchSchedule sched(cfg.seed, samples, cfg.effective_batch());
  size_t n = cfg.max_epochs * sched.batches_per_epoch();
  if (cfg.max_iterations) n = std::min(n, cfg.max_iterations);
  return n;
}

namespace protocol_detail {

inline double Seconds(Clock::duration d) {
  return std::chrono::duration<double>(d).count();
}

inline std::vector<size_t> ToIndices(const std::vector<uint32_t>& b) {
  return {b.begin(), b.end()};
}

inline std::set<int> NodeIds(size_t s, int except = -1) {
  std::set<int> out;
  for (size_t l = 1; l <= s; ++l) {
    if (static_cast<int>(l) != except) out.insert(static_cast<int>(l));
  }
  return out;
}

inline uint64_t ElementBytes(const RealMatrix& m, size_t width_bytes) {
  return static_cast<uint64_t>(m.size()) * width_bytes;
}

}  // namespace protocol_detail

// Local node l: holds X^l (one matrix per timestep) and W^l. Sends only
// shares of X^l_B W^l, so d_l never leaves the node.
class LocalNode {
 public:
  LocalNode(int node_id, const TrainingConfig& cfg,
            std::vector<RealMatrix> x_steps)
      : id_(node_id), cfg_(cfg), x_steps_(std::move(x_steps)) {
    if (x_steps_.empty() || x_steps_[0].cols() < 1) {
      Fail(ErrorCode::kShapeMismatch, "node needs d_l >= 1");
    }
    weights_ = InitLocalWeights(cfg_.seed, id_, x_steps_[0].cols(),
                                cfg_.model.shared_width());
  }

  int id() const { return id_; }
  const RealMatrix& weights() const { return weights_; }
  RealMatrix& mutable_weights() { return weights_; }
  uint32_t iteration() const { return iteration_; }

  // Handles one CONTROL message. Returns false on STOP.
  bool RunRound(Endpoint& ep) {
    using protocol_detail::Seconds;
    const size_t s = cfg_.parties;
    WireMessage ctl_msg =
        ep.Await([](const WireMessage& m) {
                   return m.type == MsgType::kControl && m.sender == 0;
                 },
                 {0}, cfg_.timeout);
    ControlPayload ctl = DecodeControl(ctl_msg.payload);
    if (ctl.command == ControlCommand::kStop) return false;
    if (ctl.command != ControlCommand::kIterate ||
        ctl_msg.iteration != iteration_) {
      Fail(ErrorCode::kProtocol,
           "node " + std::to_string(id_) + ": unexpected control for round " +
               std::to_string(ctl_msg.iteration) + " in round " +
               std::to_string(iteration_));
    }
    auto t0 = Clock::now();
    std::vector<size_t> batch = protocol_detail::ToIndices(ctl.batch);

    // Step 1: X^l_B W^l per timestep.
    std::vector<RealMatrix> x_batch, products;
    for (const auto& x : x_steps_) {
      x_batch.push_back(RowSlice(x, batch));
      products.push_back(Matmul(x_batch.back(), weights_));
    }

    NodeTelemetry tel;
    WireMessage sum_msg{MsgType::kShareSum, iteration_,
                        static_cast<uint16_t>(id_), {}};
    Clock::duration compute = Clock::now() - t0;
    if (cfg_.plaintext) {
      for (const auto& p : products) tel.share_element_bytes += p.size() * 8;
      sum_msg.payload = EncodeRealTensors(products, nullptr);
    } else {
      // Step 2: share every timestep's product, exchange, sum.
      auto t1 = Clock::now();
      const size_t eb = cfg_.ring.element_bytes();
      std::vector<ShareSet> sets;
      for (size_t c = 0; c < products.size(); ++c) {
        Prg prg(DeriveKey(cfg_.seed, Stream::kShare,
                          {static_cast<uint64_t>(id_), iteration_, c}));
        sets.push_back(Share(Encode(products[c], cfg_.ring), s, prg));
      }
      std::vector<RingTensor> sums;
      for (const auto& set : sets) sums.push_back(set.shares[id_ - 1]);
      compute += Clock::now() - t1;
      for (int j = 1; j <= static_cast<int>(s); ++j) {
        if (j == id_) continue;
        std::vector<RingTensor> out;
        for (const auto& set : sets) {
          out.push_back(set.shares[j - 1]);
          tel.share_element_bytes += set.shares[j - 1].size() * eb;
        }
        WireMessage m{MsgType::kShare, iteration_, static_cast<uint16_t>(id_),
                      EncodeRingTensors(out, nullptr)};
        tel.bytes_sent += m.wire_size();
        ep.Send(j, m);
      }
      std::set<int> waiting = protocol_detail::NodeIds(s, id_);
      std::vector<std::vector<RingTensor>> received(s + 1);
      while (!waiting.empty()) {
        WireMessage m = ep.Await(Matching(MsgType::kShare, iteration_),
                                 waiting, cfg_.timeout);
        if (!waiting.erase(m.sender)) {
          Fail(ErrorCode::kProtocol, "duplicate share from party " +
                                         std::to_string(m.sender));
        }
        received[m.sender] = DecodeRingTensors(m.payload, cfg_.ring, nullptr);
        if (received[m.sender].size() != sums.size()) {
          Fail(ErrorCode::kShapeMismatch, "share count mismatch");
        }
      }
      auto t2 = Clock::now();
      for (size_t from = 1; from <= s; ++from) {
        for (size_t c = 0; c < received[from].size(); ++c) {
          RingAddInPlace(sums[c], received[from][c]);
        }
      }
      for (const auto& e : sums) tel.share_element_bytes += e.size() * eb;
      compute += Clock::now() - t2;
      sum_msg.payload = EncodeRingTensors(sums, nullptr);
    }
    // Telemetry covers this SHARE_SUM too, so size it before encoding.
    tel.bytes_sent += kHeaderBytes + sum_msg.payload.size() + kTelemetryBytes;
    tel.compute_ns = static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(compute +
                                                             pending_compute_)
            .count());
    sum_msg.payload.resize(sum_msg.payload.size() + kTelemetryBytes);
    {
      std::vector<uint8_t> trailer;
      ByteWriter w(trailer);
      w.U64(tel.bytes_sent);
      w.U64(tel.share_element_bytes);
      w.U64(tel.compute_ns);
      std::copy(trailer.begin(), trailer.end(),
                sum_msg.payload.end() - kTelemetryBytes);
    }
    ep.Send(0, sum_msg);

    // Step 5: apply the broadcast Delta.
    WireMessage dm = ep.Await(Matching(MsgType::kDelta, iteration_, 0), {0},
                              cfg_.timeout);
    auto t3 = Clock::now();
    DeltaBundle bundle = DecodeDelta(dm.payload);
    if (cfg_.model.kind == ModelKind::kRnn) {
      if (bundle.steps.size() != x_batch.size() || bundle.trailer.size() != 2) {
        Fail(ErrorCode::kShapeMismatch, "rnn delta bundle layout");
      }
      BpttSignals sig;
      for (auto& step : bundle.steps) {
        if (step.size() != 3) {
          Fail(ErrorCode::kShapeMismatch, "rnn delta bundle layout");
        }
        sig.delta_loss.push_back(std::move(step[0]));
        sig.delta_yhat.push_back(std::move(step[1]));
        sig.delta_h.push_back(std::move(step[2]));
      }
      RnnLocalUpdate(weights_, x_batch, sig, bundle.trailer[1],
                     bundle.trailer[0], cfg_.alpha);
    } else {
      if (bundle.steps.size() != 1 || bundle.steps[0].size() != 1) {
        Fail(ErrorCode::kShapeMismatch, "delta bundle layout");
      }
      LocalUpdate(weights_, x_batch[0], bundle.steps[0][0], cfg_.alpha,
                  cfg_.model.lambda);
    }
    pending_compute_ = Clock::now() - t3;
    ++iteration_;
    return true;
  }

  void Serve(Endpoint& ep) {
    while (RunRound(ep)) {
    }
  }

 private:
  int id_;
  TrainingConfig cfg_;
  std::vector<RealMatrix> x_steps_;
  RealMatrix weights_;
  uint32_t iteration_ = 0;
  Clock::duration pending_compute_{};
};

// The aggregator: holds y, the model head and the batch schedule. Sees only
// the s share-sums per round and their reconstruction.
class Aggregator {
 public:
  Aggregator(const TrainingConfig& cfg, std::vector<RealMatrix> y_steps)
      : cfg_(cfg),
        y_steps_(std::move(y_steps)),
        schedule_(cfg.seed, y_steps_.at(0).rows(), cfg.effective_batch()),
        tracker_(cfg.tol, cfg.patience),
        max_iters_(MaxIterations(cfg, y_steps_[0].rows())) {
    cfg_.Validate();
    if (cfg_.model.kind == ModelKind::kRnn) {
      rnn_cfg_ = MakeRnnConfig(cfg_, y_steps_.size());
      rnn_cfg_.Validate();
      rnn_ = InitRnnAgg(rnn_cfg_, cfg_.model.outputs, cfg_.seed);
    } else {
      if (y_steps_.size() != 1) {
        Fail(ErrorCode::kShapeMismatch, "sequence data needs the rnn model");
      }
      head_ = InitHead(cfg_.model, cfg_.seed);
    }
  }

  bool done() const {
    return iteration_ >= max_iters_ || tracker_.converged();
  }
  bool converged() const { return tracker_.converged(); }
  uint32_t iteration() const { return iteration_; }
  size_t max_iterations() const { return max_iters_; }
  const ModelHead& head() const { return head_; }
  const RnnAggState& rnn() const { return rnn_; }
  const std::vector<IterationReport>& history() const { return history_; }

  IterationReport RunRound(Endpoint& ep) {
    using protocol_detail::Seconds;
    const size_t s = cfg_.parties;
    const uint64_t bytes_before = ep.counters().bytes_sent;
    IterationReport rep;
    rep.iteration = iteration_;
    auto t0 = Clock::now();
    std::vector<size_t> batch = schedule_.Next();
    rep.epoch = schedule_.epoch() - 1;

    ControlPayload ctl;
    ctl.command = ControlCommand::kIterate;
    ctl.batch.assign(batch.begin(), batch.end());
    WireMessage cm{MsgType::kControl, iteration_, 0, EncodeControl(ctl)};
    for (int l = 1; l <= static_cast<int>(s); ++l) ep.Send(l, cm);

    // Step 3 inputs: one SHARE_SUM per node.
    std::set<int> waiting = protocol_detail::NodeIds(s);
    std::vector<std::vector<RingTensor>> ring_sums(s + 1);
    std::vector<std::vector<RealMatrix>> real_sums(s + 1);
    uint64_t node_bytes = 0, node_compute_ns = 0;
    while (!waiting.empty()) {
      WireMessage m;
      try {
        m = ep.Await(Matching(MsgType::kShareSum, iteration_), waiting,
                     cfg_.timeout);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kTimeout) throw;
        std::string missing;
        for (int p : waiting) missing += " " + std::to_string(p);
        Fail(ErrorCode::kPartyTimeout,
             "round " + std::to_string(iteration_) +
                 ": no share-sum from party" + missing);
      }
      if (!waiting.erase(m.sender)) {
        Fail(ErrorCode::kProtocol,
             "duplicate share-sum from party " + std::to_string(m.sender));
      }
      NodeTelemetry tel;
      if (cfg_.plaintext) {
        real_sums[m.sender] = DecodeRealTensors(m.payload, &tel);
      } else {
        ring_sums[m.sender] = DecodeRingTensors(m.payload, cfg_.ring, &tel);
      }
      node_bytes += tel.bytes_sent;
      rep.step2_bytes += tel.share_element_bytes;
      node_compute_ns = std::max(node_compute_ns, tel.compute_ns);
    }
    auto t1 = Clock::now();

    std::vector<RealMatrix> xw_steps, y_batch;
    for (size_t c = 0; c < y_steps_.size(); ++c) {
      if (cfg_.plaintext) {
        RealMatrix sum = real_sums[1].at(c);
        for (size_t l = 2; l <= s; ++l) AddInPlace(sum, real_sums[l].at(c));
        xw_steps.push_back(std::move(sum));
      } else {
        std::vector<ShareSum> sums;
        for (size_t l = 1; l <= s; ++l) {
          sums.push_back({static_cast<int>(l), ring_sums[l].at(c)});
        }
        xw_steps.push_back(Decode(Reconstruct(std::move(sums), s)));
      }
      if (xw_steps.back().rows() != batch.size() ||
          xw_steps.back().cols() != cfg_.model.shared_width()) {
        Fail(ErrorCode::kShapeMismatch,
             "share-sum shape " + xw_steps.back().ShapeString());
      }
      y_batch.push_back(RowSlice(y_steps_[c], batch));
    }

    // Step 4.
    DeltaBundle bundle;
    if (cfg_.model.kind == ModelKind::kRnn) {
      RnnAggStepResult r =
          RnnAggregatorStep(rnn_, rnn_cfg_, xw_steps, y_batch, cfg_.alpha);
      rep.loss = r.loss;
      for (size_t c = 0; c < r.signals.steps(); ++c) {
        bundle.steps.push_back({r.signals.delta_loss[c], r.signals.delta_yhat[c],
                                r.signals.delta_h[c]});
      }
      bundle.trailer = {std::move(r.u_snapshot), std::move(r.v_snapshot)};
    } else {
      DeltaMessage d = ComputeDelta(cfg_.model, head_, xw_steps[0],
                                    y_batch[0], cfg_.alpha);
      rep.loss = d.loss;
      bundle.steps.push_back({std::move(d.delta)});
    }
    auto t2 = Clock::now();
    WireMessage dm{MsgType::kDelta, iteration_, 0, EncodeDelta(bundle)};
    for (int l = 1; l <= static_cast<int>(s); ++l) ep.Send(l, dm);
    auto t3 = Clock::now();

    rep.bytes_sent = ep.counters().bytes_sent - bytes_before + node_bytes;
    rep.wall_s = Seconds(t3 - t0);
    rep.collect_s = Seconds(t1 - t0);
    rep.delta_s = Seconds(t3 - t1);
    rep.agg_compute_s = Seconds(t2 - t1);
    rep.node_compute_s = static_cast<double>(node_compute_ns) * 1e-9;
    rep.comm_s =
        std::max(0.0, rep.wall_s - rep.agg_compute_s - rep.node_compute_s);
    tracker_.Update(rep.loss);
    ++iteration_;
    history_.push_back(rep);
    return rep;
  }

  // Tells every node to stop after the current round.
  void Finish(Endpoint& ep) {
    ControlPayload ctl;
    ctl.command = ControlCommand::kStop;
    WireMessage cm{MsgType::kControl, iteration_, 0, EncodeControl(ctl)};
    for (int l = 1; l <= static_cast<int>(cfg_.parties); ++l) ep.Send(l, cm);
  }

  // Runs rounds until converged or out of budget, then stops the nodes. On
  // failure the peers are told and the error propagates; history() keeps
  // the completed rounds.
  void Drive(Endpoint& ep) {
    try {
      while (!done()) RunRound(ep);
      Finish(ep);
    } catch (const std::exception& e) {
      ep.Abort(e.what());
      throw;
    }
  }

 private:
  TrainingConfig cfg_;
  std::vector<RealMatrix> y_steps_;
  BatchSchedule schedule_;
  ConvergenceTracker tracker_;
  size_t max_iters_;
  RnnConfig rnn_cfg_;
  ModelHead head_;
  RnnAggState rnn_;
  uint32_t iteration_ = 0;
  std::vector<IterationReport> history_;
};

struct TrainingResult {
  std::vector<IterationReport> history;
  bool converged = false;
  ModelParams params;
  std::vector<RealMatrix> node_weights;  // W^l, node order
};

// Stacks per-node blocks in feature order.
inline RealMatrix StackWeights(const std::vector<RealMatrix>& blocks) {
  return VerticalConcat(blocks);
}

// Every party in one process over the in-process transport: the aggregator
// runs in the calling thread, each node in its own thread. Nodes finish
// their update before RunIteration returns, so parameters can be inspected
// between rounds.
class Simulation {
 public:
  Simulation(TrainingConfig cfg, const Dataset& data)
      : cfg_(std::move(cfg)), hub_(cfg_.parties + 1, cfg_.profile) {
    cfg_.model.outputs = data.outputs();
    cfg_.Validate();
    plan_ = ResolvePlan(cfg_, data.features());
    auto slices = PartitionSteps(data, plan_);
    agg_ = std::make_unique<Aggregator>(cfg_, data.y_steps);
    agg_ep_ = hub_.Connect(0);
    for (size_t l = 1; l <= cfg_.parties; ++l) {
      nodes_.push_back(std::make_unique<LocalNode>(static_cast<int>(l), cfg_,
                                                   std::move(slices[l - 1])));
      node_eps_.push_back(hub_.Connect(static_cast<int>(l)));
    }
    for (size_t i = 0; i < nodes_.size(); ++i) {
      threads_.emplace_back([this, i] { NodeLoop(i); });
    }
  }

  ~Simulation() {
    try {
      Stop();
    } catch (...) {
    }
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const TrainingConfig& config() const { return cfg_; }
  const VerticalPartitionPlan& plan() const { return plan_; }
  Aggregator& aggregator() { return *agg_; }
  const LocalNode& node(size_t l) const { return *nodes_.at(l - 1); }
  bool done() const { return agg_->done(); }

  IterationReport RunIteration() {
    if (stopped_) Fail(ErrorCode::kProtocol, "simulation already stopped");
    IterationReport rep;
    try {
      rep = agg_->RunRound(*agg_ep_);
    } catch (const std::exception& e) {
      agg_ep_->Abort(e.what());
      JoinAndRethrow(std::current_exception());
    }
    const uint64_t target = (uint64_t{rep.iteration} + 1) * nodes_.size();
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return rounds_done_ >= target || node_error_; });
    if (node_error_) {
      lock.unlock();
      agg_ep_->Abort("node failure");
      JoinAndRethrow(nullptr);
    }
    return rep;
  }

  ModelParams Parameters() const {
    std::vector<RealMatrix> blocks;
    for (const auto& n : nodes_) blocks.push_back(n->weights());
    RealMatrix w = StackWeights(blocks);
    if (cfg_.model.kind == ModelKind::kRnn) {
      return MakeRnnParams(std::move(w), agg_->rnn());
    }
    return MakeParams(cfg_.model.kind, std::move(w), agg_->head());
  }

  // Sends STOP and joins the node threads.
  void Stop() {
    if (stopped_) return;
    stopped_ = true;
    agg_->Finish(*agg_ep_);
    for (auto& t : threads_) t.join();
    if (node_error_) std::rethrow_exception(node_error_);
  }

  TrainingResult Run() {
    while (!done()) RunIteration();
    Stop();
    return Result();
  }

  TrainingResult Result() const {
    TrainingResult r;
    r.history = agg_->history();
    r.converged = agg_->converged();
    r.params = Parameters();
    for (const auto& n : nodes_) r.node_weights.push_back(n->weights());
    return r;
  }

  uint64_t total_bytes_sent() const {
    uint64_t b = agg_ep_->counters().bytes_sent;
    for (const auto& e : node_eps_) b += e->counters().bytes_sent;
    return b;
  }

  const Endpoint& endpoint(int id) const {
    return id == 0 ? *agg_ep_ : *node_eps_.at(id - 1);
  }

 private:
  void NodeLoop(size_t i) {
    try {
      while (nodes_[i]->RunRound(*node_eps_[i])) {
        std::lock_guard lock(mu_);
        ++rounds_done_;
        cv_.notify_all();
      }
    } catch (const std::exception& e) {
      node_eps_[i]->Abort(e.what());
      std::lock_guard lock(mu_);
      if (!node_error_) node_error_ = std::current_exception();
      cv_.notify_all();
    }
  }

  [[noreturn]] void JoinAndRethrow(std::exception_ptr agg_error) {
    stopped_ = true;
    for (auto& t : threads_) t.join();
    // A node failure is the root cause of the aggregator's disconnect.
    if (node_error_) std::rethrow_exception(node_error_);
    std::rethrow_exception(agg_error);
  }

  TrainingConfig cfg_;
  InProcessHub hub_;
  VerticalPartitionPlan plan_;
  std::unique_ptr<Aggregator> agg_;
  std::unique_ptr<Endpoint> agg_ep_;
  std::vector<std::unique_ptr<LocalNode>> nodes_;
  std::vector<std::unique_ptr<Endpoint>> node_eps_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  uint64_t rounds_done_ = 0;
  std::exception_ptr node_error_;
  bool stopped_ = false;
};

// One party of a multi-process run over TCP. Party 0 drives training; the
// others serve rounds until STOP.
inline std::optional<TrainingResult> RunTcpParty(const TrainingConfig& config,
                                                 const Dataset& data, int id) {
  TrainingConfig cfg = config;
  cfg.model.outputs = data.outputs();
  cfg.Validate();
  if (id < 0 || static_cast<size_t>(id) > cfg.parties) {
    Fail(ErrorCode::kConfig, "party id " + std::to_string(id) + " outside 0.." +
                                 std::to_string(cfg.parties));
  }
  TcpEndpoint ep(id, cfg.addresses, cfg.Fingerprint(), cfg.profile,
                 cfg.timeout);
  if (id == 0) {
    Aggregator agg(cfg, data.y_steps);
    agg.Drive(ep);
    ep.Shutdown();
    TrainingResult r;
    r.history = agg.history();
    r.converged = agg.converged();
    r.params.kind = cfg.model.kind;
    r.params.head = agg.head();
    if (cfg.model.kind == ModelKind::kRnn) {
      r.params = MakeRnnParams({}, agg.rnn());
    }
    return r;
  }
  auto plan = ResolvePlan(cfg, data.features());
  auto slices = PartitionSteps(data, plan);
  LocalNode node(id, cfg, std::move(slices[id - 1]));
  try {
    node.Serve(ep);
  } catch (const std::exception& e) {
    ep.Abort(e.what());
    throw;
  }
  ep.Shutdown();
  TrainingResult r;
  r.node_weights.push_back(node.weights());
  return r;
}

// Runs all s+1 parties over loopback TCP, one thread each, and merges the
// results into the same shape Simulation::Result() produces.
inline TrainingResult RunTcpLoopback(const TrainingConfig& cfg,
                                     const Dataset& data) {
  const size_t parties = cfg.parties + 1;
  std::vector<std::optional<TrainingResult>> results(parties);
  std::vector<std::exception_ptr> errors(parties);
  std::vector<std::thread> threads;
  for (size_t id = 0; id < parties; ++id) {
    threads.emplace_back([&, id] {
      try {
        results[id] = RunTcpParty(cfg, data, static_cast<int>(id));
      } catch (...) {
        errors[id] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  TrainingResult r = std::move(*results[0]);
  for (size_t id = 1; id < parties; ++id) {
    r.node_weights.push_back(results[id]->node_weights.at(0));
  }
  r.params.w = StackWeights(r.node_weights);
  return r;
}

}  // namespace privcoll

#endif  // PRIVCOLL_PROTOCOL_HPP_
