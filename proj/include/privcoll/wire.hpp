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

#ifndef PRIVCOLL_WIRE_HPP_
#define PRIVCOLL_WIRE_HPP_

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/ring.hpp"
#include "privcoll/tensor.hpp"

// Frame layout (little-endian, 16-byte header):
//   0  magic        4 bytes  "PCOL"
//   4  version      u8       1
//   5  msg_type     u8       1=SHARE 2=SHARE_SUM 3=DELTA 4=CONTROL
//   6  iteration    u32
//  10  sender_id    u16      0 = aggregator, 1..s = local nodes
//  12  payload_len  u32
//  16  payload
// Tensors inside payloads carry a (u32 rows, u32 cols) prefix followed by
// row-major elements: ring elements at width/8 bytes, reals as f64.

namespace privcoll {

inline constexpr uint8_t kWireMagic[4] = {'P', 'C', 'O', 'L'};
inline constexpr uint8_t kWireVersion = 1;
inline constexpr size_t kHeaderBytes = 16;
inline constexpr size_t kTensorPrefixBytes = 8;

enum class MsgType : uint8_t {
  kShare = 1,
  kShareSum = 2,
  kDelta = 3,
  kControl = 4,
};

inline const char* MsgTypeName(MsgType t) {
  switch (t) {
    case MsgType::kShare: return "SHARE";
    case MsgType::kShareSum: return "SHARE_SUM";
    case MsgType::kDelta: return "DELTA";
    case MsgType::kControl: return "CONTROL";
  }
  return "?";
}

struct WireMessage {
  MsgType type = MsgType::kControl;
  uint32_t iteration = 0;
  uint16_t sender = 0;
  std::vector<uint8_t> payload;

  size_t wire_size() const { return kHeaderBytes + payload.size(); }
  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

// ---------------------------------------------------------------------------
// Little-endian primitives

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<uint8_t>& out) : out_(out) {}

  void U8(uint8_t v) { out_.push_back(v); }
  void U16(uint16_t v) { Le(v, 2); }
  void U32(uint32_t v) { Le(v, 4); }
  void U64(uint64_t v) { Le(v, 8); }
  void F64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    Le(bits, 8);
  }
  void Bytes(std::span<const uint8_t> b) {
    if (b.empty()) return;
    const size_t at = out_.size();
    out_.resize(at + b.size());
    std::memcpy(out_.data() + at, b.data(), b.size());
  }

  void Real(const RealMatrix& m) {
    U32(static_cast<uint32_t>(m.rows()));
    U32(static_cast<uint32_t>(m.cols()));
    for (double v : m.data()) F64(v);
  }

  void Ring(const RingTensor& t) {
    U32(static_cast<uint32_t>(t.rows()));
    U32(static_cast<uint32_t>(t.cols()));
    AppendElementsLE(t, out_);
  }

 private:
  void Le(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  std::vector<uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}

  size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }

  uint8_t U8() { return static_cast<uint8_t>(Le(1)); }
  uint16_t U16() { return static_cast<uint16_t>(Le(2)); }
  uint32_t U32() { return static_cast<uint32_t>(Le(4)); }
  uint64_t U64() { return Le(8); }
  double F64() {
    uint64_t bits = Le(8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::span<const uint8_t> Bytes(size_t n) {
    Need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  RealMatrix Real() {
    size_t rows = U32(), cols = U32();
    Need(rows * cols * 8);
    RealMatrix m(rows, cols);
    for (double& v : m.data()) v = F64();
    return m;
  }

  RingTensor Ring(const RingParams& params) {
    size_t rows = U32(), cols = U32();
    return ReadElementsLE(Bytes(rows * cols * params.element_bytes()), rows,
                          cols, params);
  }

 private:
  void Need(size_t n) const {
    if (in_.size() - pos_ < n) {
      Fail(ErrorCode::kMalformedFrame, "payload truncated");
    }
  }
  uint64_t Le(int n) {
    Need(static_cast<size_t>(n));
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<size_t>(n);
    return v;
  }

  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Frames

inline std::vector<uint8_t> EncodeFrame(const WireMessage& msg) {
  std::vector<uint8_t> out;
  out.reserve(msg.wire_size());
  ByteWriter w(out);
  w.Bytes(kWireMagic);
  w.U8(kWireVersion);
  w.U8(static_cast<uint8_t>(msg.type));
  w.U32(msg.iteration);
  w.U16(msg.sender);
  w.U32(static_cast<uint32_t>(msg.payload.size()));
  w.Bytes(msg.payload);
  return out;
}

// Rejects bad magic, unknown version/type, and any length disagreement
// between the header and the bytes actually present.
inline WireMessage DecodeFrame(std::span<const uint8_t> frame) {
  if (frame.size() < kHeaderBytes) {
    Fail(ErrorCode::kMalformedFrame,
         "frame of " + std::to_string(frame.size()) + " bytes has no header");
  }
  if (std::memcmp(frame.data(), kWireMagic, 4) != 0) {
    Fail(ErrorCode::kMalformedFrame, "bad magic");
  }
  ByteReader r(frame.subspan(4));
  uint8_t version = r.U8();
  if (version != kWireVersion) {
    Fail(ErrorCode::kMalformedFrame,
         "unsupported version " + std::to_string(version));
  }
  uint8_t type = r.U8();
  if (type < 1 || type > 4) {
    Fail(ErrorCode::kMalformedFrame, "unknown msg_type " + std::to_string(type));
  }
  WireMessage msg;
  msg.type = static_cast<MsgType>(type);
  msg.iteration = r.U32();
  msg.sender = r.U16();
  uint32_t len = r.U32();
  if (r.remaining() != len) {
    Fail(ErrorCode::kMalformedFrame,
         "payload_len " + std::to_string(len) + " but " +
             std::to_string(r.remaining()) + " bytes present");
  }
  auto body = r.Bytes(len);
  msg.payload.assign(body.begin(), body.end());
  return msg;
}

// ---------------------------------------------------------------------------
// Payloads

enum class ControlCommand : uint8_t {
  kHello = 0,
  kIterate = 1,
  kStop = 2,
  kHelloAck = 3,
  kReject = 4,
};

struct ControlPayload {
  ControlCommand command = ControlCommand::kIterate;
  std::vector<uint32_t> batch;  // kIterate
  uint64_t fingerprint = 0;     // kHello
  std::string reason;           // kReject
};

inline std::vector<uint8_t> EncodeControl(const ControlPayload& c) {
  std::vector<uint8_t> out;
  ByteWriter w(out);
  w.U8(static_cast<uint8_t>(c.command));
  switch (c.command) {
    case ControlCommand::kIterate:
      w.U32(static_cast<uint32_t>(c.batch.size()));
      for (uint32_t i : c.batch) w.U32(i);
      break;
    case ControlCommand::kHello:
      w.U64(c.fingerprint);
      break;
    case ControlCommand::kReject:
      w.Bytes(std::span(reinterpret_cast<const uint8_t*>(c.reason.data()),
                        c.reason.size()));
      break;
    default:
      break;
  }
  return out;
}

inline ControlPayload DecodeControl(std::span<const uint8_t> payload) {
  ByteReader r(payload);
  ControlPayload c;
  uint8_t cmd = r.U8();
  if (cmd > 4) Fail(ErrorCode::kMalformedFrame, "unknown control command");
  c.command = static_cast<ControlCommand>(cmd);
  switch (c.command) {
    case ControlCommand::kIterate: {
      uint32_t n = r.U32();
      if (r.remaining() != size_t{n} * 4) {
        Fail(ErrorCode::kMalformedFrame, "batch length mismatch");
      }
      c.batch.resize(n);
      for (auto& i : c.batch) i = r.U32();
      break;
    }
    case ControlCommand::kHello:
      c.fingerprint = r.U64();
      break;
    case ControlCommand::kReject: {
      auto b = r.Bytes(r.remaining());
      c.reason.assign(b.begin(), b.end());
      break;
    }
    default:
      break;
  }
  return c;
}

// SHARE / SHARE_SUM tensors: u32 count then tensors. A SHARE_SUM carries a
// trailer of node telemetry (public counters only).
struct NodeTelemetry {
  uint64_t bytes_sent = 0;          // header + payload, this iteration
  uint64_t share_element_bytes = 0; // ring/real element bytes in SHARE(+SUM)
  uint64_t compute_ns = 0;
};

inline constexpr size_t kTelemetryBytes = 24;

inline std::vector<uint8_t> EncodeRingTensors(
    std::span<const RingTensor> tensors, const NodeTelemetry* telemetry) {
  std::vector<uint8_t> out;
  ByteWriter w(out);
  w.U32(static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) w.Ring(t);
  if (telemetry) {
    w.U64(telemetry->bytes_sent);
    w.U64(telemetry->share_element_bytes);
    w.U64(telemetry->compute_ns);
  }
  return out;
}

inline std::vector<uint8_t> EncodeRealTensors(
    std::span<const RealMatrix> tensors, const NodeTelemetry* telemetry) {
  std::vector<uint8_t> out;
  ByteWriter w(out);
  w.U32(static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) w.Real(t);
  if (telemetry) {
    w.U64(telemetry->bytes_sent);
    w.U64(telemetry->share_element_bytes);
    w.U64(telemetry->compute_ns);
  }
  return out;
}

inline std::vector<RingTensor> DecodeRingTensors(std::span<const uint8_t> p,
                                                 const RingParams& params,
                                                 NodeTelemetry* telemetry) {
  ByteReader r(p);
  uint32_t n = r.U32();
  std::vector<RingTensor> out;
  for (uint32_t i = 0; i < n; ++i) out.push_back(r.Ring(params));
  if (telemetry) {
    telemetry->bytes_sent = r.U64();
    telemetry->share_element_bytes = r.U64();
    telemetry->compute_ns = r.U64();
  }
  if (!r.done()) Fail(ErrorCode::kMalformedFrame, "trailing payload bytes");
  return out;
}

inline std::vector<RealMatrix> DecodeRealTensors(std::span<const uint8_t> p,
                                                 NodeTelemetry* telemetry) {
  ByteReader r(p);
  uint32_t n = r.U32();
  std::vector<RealMatrix> out;
  for (uint32_t i = 0; i < n; ++i) out.push_back(r.Real());
  if (telemetry) {
    telemetry->bytes_sent = r.U64();
    telemetry->share_element_bytes = r.U64();
    telemetry->compute_ns = r.U64();
  }
  if (!r.done()) Fail(ErrorCode::kMalformedFrame, "trailing payload bytes");
  return out;
}

// DELTA: u32 timestep count, then per step the bundle tensors, then any
// trailing tensors. Feed-forward/regression: 1 step x {Delta}, no trailer.
// Recurrent: T steps x {delta_loss, delta_yhat, delta_h}, trailer {U, V}.
struct DeltaBundle {
  std::vector<std::vector<RealMatrix>> steps;
  std::vector<RealMatrix> trailer;
};

inline std::vector<uint8_t> EncodeDelta(const DeltaBundle& b) {
  std::vector<uint8_t> out;
  ByteWriter w(out);
  w.U32(static_cast<uint32_t>(b.steps.size()));
  const uint32_t per_step = b.steps.empty() ? 0 : b.steps[0].size();
  w.U32(per_step);
  for (const auto& step : b.steps) {
    if (step.size() != per_step) {
      Fail(ErrorCode::kShapeMismatch, "ragged delta bundle");
    }
    for (const auto& t : step) w.Real(t);
  }
  w.U32(static_cast<uint32_t>(b.trailer.size()));
  for (const auto& t : b.trailer) w.Real(t);
  return out;
}

inline DeltaBundle DecodeDelta(std::span<const uint8_t> p) {
  ByteReader r(p);
  DeltaBundle b;
  uint32_t steps = r.U32(), per_step = r.U32();
  b.steps.resize(steps);
  for (auto& step : b.steps) {
    for (uint32_t i = 0; i < per_step; ++i) step.push_back(r.Real());
  }
  uint32_t trailer = r.U32();
  for (uint32_t i = 0; i < trailer; ++i) b.trailer.push_back(r.Real());
  if (!r.done()) Fail(ErrorCode::kMalformedFrame, "trailing payload bytes");
  return b;
}

}  // namespace privcoll

#endif  // PRIVCOLL_WIRE_HPP_
