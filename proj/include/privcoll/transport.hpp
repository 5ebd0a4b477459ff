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

#ifndef PRIVCOLL_TRANSPORT_HPP_
#define PRIVCOLL_TRANSPORT_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/wire.hpp"

namespace privcoll {

using Clock = std::chrono::steady_clock;

// Emulated link: one-way latency plus a throughput cap (0 = unlimited).
struct NetProfile {
  double latency_ms = 0.0;
  double throughput_bytes_per_s = 0.0;

  static NetProfile Lan() { return {}; }
  // Averages measured between continents in the reference deployment.
  static NetProfile Wan() { return {137.7, 9.27e6}; }

  void Validate() const {
    if (latency_ms < 0 || throughput_bytes_per_s < 0) {
      Fail(ErrorCode::kConfig, "network profile values must be >= 0");
    }
  }
};

// Sender-side shaping for one directed link: a token bucket serializes
// frames at the configured throughput, then each frame is held for the
// one-way latency. Delivery times are monotone per link, so FIFO holds.
class LinkShaper {
 public:
  explicit LinkShaper(NetProfile profile) : profile_(profile) {}

  Clock::time_point DeliveryTime(size_t bytes, Clock::time_point now) {
    if (profile_.latency_ms == 0 && profile_.throughput_bytes_per_s == 0) {
      return now;
    }
    auto start = std::max(now, link_free_at_);
    auto transmit = std::chrono::duration<double>(
        profile_.throughput_bytes_per_s > 0
            ? static_cast<double>(bytes) / profile_.throughput_bytes_per_s
            : 0.0);
    link_free_at_ = start + std::chrono::duration_cast<Clock::duration>(transmit);
    return link_free_at_ + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double, std::milli>(
                                   profile_.latency_ms));
  }

 private:
  NetProfile profile_;
  Clock::time_point link_free_at_{};
};

// Inbound queue of one party. Entries are either messages (visible once
// their delivery time passes) or transport errors.
class Mailbox {
 public:
  void Push(WireMessage msg, Clock::time_point deliver_at) {
    {
      std::lock_guard lock(mu_);
      entries_.push_back({std::move(msg), deliver_at, std::nullopt, 0, ""});
    }
    cv_.notify_all();
  }

  void PushError(ErrorCode code, int from, std::string what) {
    {
      std::lock_guard lock(mu_);
      entries_.push_back({{}, Clock::time_point{}, code, from, std::move(what)});
    }
    cv_.notify_all();
  }

  // Blocks until a message satisfying `match` is deliverable. Malformed
  // frames surface immediately; a disconnect surfaces only when it comes
  // from a party in `needed` (empty set: any party).
  WireMessage Await(const std::function<bool(const WireMessage&)>& match,
                    const std::set<int>& needed,
                    std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    std::unique_lock lock(mu_);
    for (;;) {
      auto now = Clock::now();
      std::optional<Clock::time_point> next_ready;
      for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (it->error) {
          bool relevant = *it->error != ErrorCode::kDisconnected ||
                          needed.empty() || needed.count(it->from) > 0;
          if (!relevant) continue;
          Error err(*it->error, it->what);
          entries_.erase(it);
          throw err;
        }
        if (!match(it->msg)) continue;
        if (it->deliver_at <= now) {
          WireMessage out = std::move(it->msg);
          entries_.erase(it);
          return out;
        }
        if (!next_ready || it->deliver_at < *next_ready) {
          next_ready = it->deliver_at;
        }
      }
      if (now >= deadline) {
        Fail(ErrorCode::kTimeout, "no matching message within " +
                                      std::to_string(timeout.count()) + " ms");
      }
      auto wake = next_ready ? std::min(*next_ready, deadline) : deadline;
      cv_.wait_until(lock, wake);
    }
  }

  size_t pending() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

 private:
  struct Entry {
    WireMessage msg;
    Clock::time_point deliver_at;
    std::optional<ErrorCode> error;
    int from;
    std::string what;
  };
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Entry> entries_;
};

// Per-party traffic counters. Bytes are header + payload of every frame.
struct TrafficCounters {
  uint64_t bytes_sent = 0;
  uint64_t messages_sent = 0;
  std::array<uint64_t, 5> bytes_by_type{};

  void Record(const WireMessage& msg) {
    bytes_sent += msg.wire_size();
    ++messages_sent;
    bytes_by_type[static_cast<size_t>(msg.type)] += msg.wire_size();
  }
};

// One party's view of the network.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  virtual int id() const = 0;
  virtual size_t parties() const = 0;  // aggregator + local nodes
  virtual void Send(int dest, const WireMessage& msg) = 0;
  virtual WireMessage Await(
      const std::function<bool(const WireMessage&)>& match,
      const std::set<int>& needed, std::chrono::milliseconds timeout) = 0;
  // Tells peers this party is gone; their pending Awaits that need it fail.
  virtual void Abort(const std::string& reason) = 0;

  const TrafficCounters& counters() const { return counters_; }

 protected:
  TrafficCounters counters_;
};

inline std::function<bool(const WireMessage&)> Matching(
    MsgType type, uint32_t iteration, std::optional<int> sender = {}) {
  return [=](const WireMessage& m) {
    return m.type == type && m.iteration == iteration &&
           (!sender || m.sender == *sender);
  };
}

// Deterministic in-process fabric: every frame is encoded to bytes and
// decoded at the receiver, exactly as over TCP.
class InProcessHub {
 public:
  InProcessHub(size_t parties, NetProfile profile)
      : mailboxes_(parties), profile_(profile) {
    profile.Validate();
    for (size_t i = 0; i < parties; ++i) {
      shapers_.emplace_back();
      for (size_t j = 0; j < parties; ++j) shapers_.back().emplace_back(profile);
    }
    shaper_mu_ = std::vector<std::mutex>(parties);
  }

  std::unique_ptr<Endpoint> Connect(int id);

  size_t parties() const { return mailboxes_.size(); }

 private:
  friend class InProcessEndpoint;

  void Deliver(int from, int to, const std::vector<uint8_t>& frame) {
    Clock::time_point at;
    {
      std::lock_guard lock(shaper_mu_[from]);
      at = shapers_[from][to].DeliveryTime(frame.size(), Clock::now());
    }
    mailboxes_.at(to).Push(DecodeFrame(frame), at);
  }

  std::vector<Mailbox> mailboxes_;
  std::vector<std::vector<LinkShaper>> shapers_;
  std::vector<std::mutex> shaper_mu_;
  NetProfile profile_;
};

class InProcessEndpoint : public Endpoint {
 public:
  InProcessEndpoint(InProcessHub& hub, int id) : hub_(hub), id_(id) {}

  int id() const override { return id_; }
  size_t parties() const override { return hub_.parties(); }

  void Send(int dest, const WireMessage& msg) override {
    if (dest < 0 || static_cast<size_t>(dest) >= hub_.parties() ||
        dest == id_) {
      Fail(ErrorCode::kProtocol, "bad destination " + std::to_string(dest));
    }
    if (aborted_) Fail(ErrorCode::kDisconnected, "endpoint aborted");
    counters_.Record(msg);
    hub_.Deliver(id_, dest, EncodeFrame(msg));
  }

  WireMessage Await(const std::function<bool(const WireMessage&)>& match,
                    const std::set<int>& needed,
                    std::chrono::milliseconds timeout) override {
    return hub_.mailboxes_.at(id_).Await(match, needed, timeout);
  }

  void Abort(const std::string& reason) override {
    if (aborted_.exchange(true)) return;
    for (size_t p = 0; p < hub_.parties(); ++p) {
      if (static_cast<int>(p) == id_) continue;
      hub_.mailboxes_[p].PushError(
          ErrorCode::kDisconnected, id_,
          "party " + std::to_string(id_) + " aborted: " + reason);
    }
  }

 private:
  InProcessHub& hub_;
  int id_;
  std::atomic<bool> aborted_{false};
};

inline std::unique_ptr<Endpoint> InProcessHub::Connect(int id) {
  if (id < 0 || static_cast<size_t>(id) >= parties()) {
    Fail(ErrorCode::kProtocol, "no such party " + std::to_string(id));
  }
  return std::make_unique<InProcessEndpoint>(*this, id);
}

}  // namespace privcoll

#endif  // PRIVCOLL_TRANSPORT_HPP_
