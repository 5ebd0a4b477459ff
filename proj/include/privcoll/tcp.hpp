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

#ifndef PRIVCOLL_TCP_HPP_
#define PRIVCOLL_TCP_HPP_

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/transport.hpp"
#include "privcoll/wire.hpp"

// TCP transport. Each frame travels as a u32 little-endian length followed by
// the frame bytes, so a malformed frame can be skipped without losing the
// stream. Party p dials every party q < p and accepts from every q > p; the
// dialer opens with a HELLO carrying its id and a config fingerprint, and
// the acceptor answers HELLO_ACK or REJECT.

namespace privcoll {

inline constexpr uint32_t kMaxFrameBytes = 256u << 20;

struct HostPort {
  std::string host;
  uint16_t port = 0;
};

inline HostPort ParseHostPort(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos) {
    Fail(ErrorCode::kConfig, "address '" + s + "' must be host:port");
  }
  HostPort hp{s.substr(0, colon), 0};
  try {
    int port = std::stoi(s.substr(colon + 1));
    if (port <= 0 || port > 65535) throw std::out_of_range(s);
    hp.port = static_cast<uint16_t>(port);
  } catch (const std::exception&) {
    Fail(ErrorCode::kConfig, "bad port in '" + s + "'");
  }
  return hp;
}

namespace tcp_detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      Reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { Reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void Reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline sockaddr_in Resolve(const HostPort& hp) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(hp.port);
  if (::inet_pton(AF_INET, hp.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{}, *res = nullptr;
  hints.ai_family = AF_INET;
  if (::getaddrinfo(hp.host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    Fail(ErrorCode::kConfig, "cannot resolve " + hp.host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

inline bool WriteAll(int fd, const uint8_t* data, size_t n) {
  while (n > 0) {
    ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    data += w;
    n -= static_cast<size_t>(w);
  }
  return true;
}

// false on EOF or error.
inline bool ReadAll(int fd, uint8_t* data, size_t n) {
  while (n > 0) {
    ssize_t r = ::recv(fd, data, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    data += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

inline bool WriteFrame(int fd, const std::vector<uint8_t>& frame) {
  uint8_t len[4];
  for (int i = 0; i < 4; ++i) len[i] = static_cast<uint8_t>(frame.size() >> (8 * i));
  return WriteAll(fd, len, 4) && WriteAll(fd, frame.data(), frame.size());
}

// Reads one length-delimited frame body; nullopt on EOF.
inline std::optional<std::vector<uint8_t>> ReadFrameBytes(int fd) {
  uint8_t len[4];
  if (!ReadAll(fd, len, 4)) return std::nullopt;
  uint32_t n = uint32_t{len[0]} | uint32_t{len[1]} << 8 |
               uint32_t{len[2]} << 16 | uint32_t{len[3]} << 24;
  if (n > kMaxFrameBytes) return std::nullopt;
  std::vector<uint8_t> buf(n);
  if (!ReadAll(fd, buf.data(), n)) return std::nullopt;
  return buf;
}

inline bool WaitReadable(int fd, std::chrono::milliseconds timeout) {
  pollfd p{fd, POLLIN, 0};
  return ::poll(&p, 1, static_cast<int>(timeout.count())) > 0;
}

inline void SetNoDelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace tcp_detail

class TcpEndpoint : public Endpoint {
 public:
  // Blocks until links to every other party are established or the
  // timeout expires.
  TcpEndpoint(int id, std::vector<std::string> addresses, uint64_t fingerprint,
              NetProfile profile, std::chrono::milliseconds connect_timeout)
      : id_(id), parties_(addresses.size()), fingerprint_(fingerprint),
        profile_(profile) {
    if (id < 0 || static_cast<size_t>(id) >= parties_) {
      Fail(ErrorCode::kConfig, "party id " + std::to_string(id) +
                                   " outside 0.." +
                                   std::to_string(parties_ - 1));
    }
    profile.Validate();
    const auto deadline = Clock::now() + connect_timeout;
    Listen(ParseHostPort(addresses[id]));
    for (int q = 0; q < id; ++q) Dial(q, ParseHostPort(addresses[q]), deadline);
    AcceptPeers(deadline);
    listener_.Reset();
    for (auto& [peer, link] : links_) {
      Link* l = link.get();
      l->reader = std::thread([this, peer = peer, l] { ReadLoop(peer, *l); });
      l->writer = std::thread([l] { WriteLoop(*l); });
    }
  }

  ~TcpEndpoint() override { Shutdown(); }

  int id() const override { return id_; }
  size_t parties() const override { return parties_; }

  void Send(int dest, const WireMessage& msg) override {
    auto it = links_.find(dest);
    if (it == links_.end()) {
      Fail(ErrorCode::kProtocol, "no link to party " + std::to_string(dest));
    }
    Link& l = *it->second;
    auto frame = EncodeFrame(msg);
    counters_.Record(msg);
    {
      std::lock_guard lock(l.mu);
      if (l.broken) {
        Fail(ErrorCode::kDisconnected,
             "link to party " + std::to_string(dest) + " is down");
      }
      auto at = l.shaper.DeliveryTime(frame.size(), Clock::now());
      l.queue.emplace_back(at, std::move(frame));
    }
    l.cv.notify_all();
  }

  WireMessage Await(const std::function<bool(const WireMessage&)>& match,
                    const std::set<int>& needed,
                    std::chrono::milliseconds timeout) override {
    return mailbox_.Await(match, needed, timeout);
  }

  void Abort(const std::string&) override {
    for (auto& [peer, link] : links_) {
      ::shutdown(link->fd.get(), SHUT_RDWR);
    }
  }

  // Drains queued frames, half-closes every link and waits briefly for peers
  // to finish before tearing down.
  void Shutdown() {
    if (shut_down_) return;
    shut_down_ = true;
    for (auto& [peer, link] : links_) {
      {
        std::lock_guard lock(link->mu);
        link->closing = true;
      }
      link->cv.notify_all();
    }
    for (auto& [peer, link] : links_) {
      if (link->writer.joinable()) link->writer.join();
      ::shutdown(link->fd.get(), SHUT_WR);
    }
    const auto grace = Clock::now() + std::chrono::seconds(2);
    for (auto& [peer, link] : links_) {
      std::unique_lock lock(link->mu);
      link->cv.wait_until(lock, grace, [&] { return link->reader_done; });
      lock.unlock();
      ::shutdown(link->fd.get(), SHUT_RDWR);
      if (link->reader.joinable()) link->reader.join();
    }
  }

 private:
  struct Link {
    explicit Link(tcp_detail::Fd f, NetProfile p)
        : fd(std::move(f)), shaper(p) {}
    tcp_detail::Fd fd;
    LinkShaper shaper;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::pair<Clock::time_point, std::vector<uint8_t>>> queue;
    bool closing = false;
    bool broken = false;
    bool reader_done = false;
    std::thread reader;
    std::thread writer;
  };

  void Listen(const HostPort& hp) {
    listener_ = tcp_detail::Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listener_.valid()) Fail(ErrorCode::kIo, "socket() failed");
    int one = 1;
    ::setsockopt(listener_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = tcp_detail::Resolve(hp);
    if (::bind(listener_.get(), reinterpret_cast<sockaddr*>(&addr),
               sizeof addr) != 0) {
      Fail(ErrorCode::kIo, "cannot bind " + hp.host + ":" +
                               std::to_string(hp.port) + ": " +
                               std::strerror(errno));
    }
    if (::listen(listener_.get(), 64) != 0) {
      Fail(ErrorCode::kIo, "listen() failed");
    }
  }

  void Dial(int peer, const HostPort& hp, Clock::time_point deadline) {
    sockaddr_in addr = tcp_detail::Resolve(hp);
    for (;;) {
      tcp_detail::Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
      if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr),
                    sizeof addr) == 0) {
        tcp_detail::SetNoDelay(fd.get());
        Handshake(peer, std::move(fd), deadline);
        return;
      }
      if (Clock::now() >= deadline) {
        Fail(ErrorCode::kPartyTimeout,
             "cannot reach party " + std::to_string(peer) + " at " + hp.host +
                 ":" + std::to_string(hp.port));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
  }

  void Handshake(int peer, tcp_detail::Fd fd, Clock::time_point deadline) {
    WireMessage hello{MsgType::kControl, 0, static_cast<uint16_t>(id_),
                      EncodeControl({ControlCommand::kHello, {}, fingerprint_, {}})};
    if (!tcp_detail::WriteFrame(fd.get(), EncodeFrame(hello))) {
      Fail(ErrorCode::kDisconnected, "handshake write failed");
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    if (!tcp_detail::WaitReadable(fd.get(), std::max(left, std::chrono::milliseconds(1)))) {
      Fail(ErrorCode::kPartyTimeout,
           "no handshake reply from party " + std::to_string(peer));
    }
    auto bytes = tcp_detail::ReadFrameBytes(fd.get());
    if (!bytes) Fail(ErrorCode::kDisconnected, "handshake closed by peer");
    WireMessage reply = DecodeFrame(*bytes);
    ControlPayload c = DecodeControl(reply.payload);
    if (c.command == ControlCommand::kReject) {
      Fail(ErrorCode::kProtocol, "rejected at handshake by party " +
                                     std::to_string(peer) + ": " + c.reason);
    }
    if (c.command != ControlCommand::kHelloAck || reply.sender != peer) {
      Fail(ErrorCode::kProtocol, "unexpected handshake reply");
    }
    links_.emplace(peer, std::make_unique<Link>(std::move(fd), profile_));
  }

  void AcceptPeers(Clock::time_point deadline) {
    const size_t expected = parties_ - 1 - static_cast<size_t>(id_);
    size_t joined = 0;
    while (joined < expected) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0 ||
          !tcp_detail::WaitReadable(listener_.get(), left)) {
        Fail(ErrorCode::kPartyTimeout,
             "only " + std::to_string(joined) + " of " +
                 std::to_string(expected) + " peers connected");
      }
      tcp_detail::Fd fd(::accept(listener_.get(), nullptr, nullptr));
      if (!fd.valid()) continue;
      tcp_detail::SetNoDelay(fd.get());
      if (!tcp_detail::WaitReadable(fd.get(), std::chrono::seconds(5))) continue;
      auto bytes = tcp_detail::ReadFrameBytes(fd.get());
      if (!bytes) continue;
      std::string reason;
      int peer = -1;
      try {
        WireMessage hello = DecodeFrame(*bytes);
        ControlPayload c = DecodeControl(hello.payload);
        peer = hello.sender;
        if (hello.type != MsgType::kControl || c.command != ControlCommand::kHello) {
          reason = "expected HELLO";
        } else if (peer <= id_ || static_cast<size_t>(peer) >= parties_) {
          reason = "party id " + std::to_string(peer) + " not expected here";
        } else if (links_.count(peer)) {
          reason = "party id " + std::to_string(peer) + " already connected";
        } else if (c.fingerprint != fingerprint_) {
          reason = "configuration fingerprint mismatch";
        }
      } catch (const Error& e) {
        reason = e.what();
      }
      ControlPayload reply;
      reply.command = reason.empty() ? ControlCommand::kHelloAck
                                     : ControlCommand::kReject;
      reply.reason = reason;
      tcp_detail::WriteFrame(
          fd.get(), EncodeFrame({MsgType::kControl, 0,
                                 static_cast<uint16_t>(id_),
                                 EncodeControl(reply)}));
      if (!reason.empty()) continue;
      links_.emplace(peer, std::make_unique<Link>(std::move(fd), profile_));
      ++joined;
    }
  }

  void ReadLoop(int peer, Link& l) {
    for (;;) {
      auto bytes = tcp_detail::ReadFrameBytes(l.fd.get());
      if (!bytes) break;
      try {
        mailbox_.Push(DecodeFrame(*bytes), Clock::now());
      } catch (const Error& e) {
        mailbox_.PushError(ErrorCode::kMalformedFrame, peer, e.what());
      }
    }
    {
      std::lock_guard lock(l.mu);
      l.reader_done = true;
      l.broken = true;
    }
    l.cv.notify_all();
    mailbox_.PushError(ErrorCode::kDisconnected, peer,
                       "party " + std::to_string(peer) + " disconnected");
  }

  static void WriteLoop(Link& l) {
    std::unique_lock lock(l.mu);
    for (;;) {
      l.cv.wait(lock, [&] { return l.closing || !l.queue.empty(); });
      if (l.queue.empty()) return;
      auto at = l.queue.front().first;
      if (Clock::now() < at) {
        l.cv.wait_until(lock, at);
        continue;
      }
      auto frame = std::move(l.queue.front().second);
      l.queue.pop_front();
      lock.unlock();
      bool ok = tcp_detail::WriteFrame(l.fd.get(), frame);
      lock.lock();
      if (!ok) {
        l.broken = true;
        l.queue.clear();
        return;
      }
    }
  }

  int id_;
  size_t parties_;
  uint64_t fingerprint_;
  NetProfile profile_;
  tcp_detail::Fd listener_;
  std::map<int, std::unique_ptr<Link>> links_;
  Mailbox mailbox_;
  bool shut_down_ = false;
};

}  // namespace privcoll

#endif  // PRIVCOLL_TCP_HPP_
