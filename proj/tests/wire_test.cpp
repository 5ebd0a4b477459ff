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

#include "privcoll/wire.hpp"

#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace privcoll {
namespace {

using testing::RandomMatrix;
using testing::ThrowsCode;

RingTensor RandomRing(size_t rows, size_t cols, RingParams p, uint64_t seed) {
  Prg prg(seed);
  RingTensor t(rows, cols, p);
  for (auto& v : t.data()) v = prg.NextU64() & p.mask();
  return t;
}

TEST(WireTest, HeaderLayout) {
  WireMessage msg{MsgType::kDelta, 0x01020304, 0x0a0b, {9, 8, 7}};
  auto frame = EncodeFrame(msg);
  ASSERT_EQ(frame.size(), kHeaderBytes + 3);
  EXPECT_EQ(msg.wire_size(), frame.size());
  EXPECT_EQ(std::vector<uint8_t>(frame.begin(), frame.begin() + 16),
            (std::vector<uint8_t>{'P', 'C', 'O', 'L', 1, 3, 4, 3, 2, 1, 0x0b,
                                  0x0a, 3, 0, 0, 0}));
  EXPECT_EQ(DecodeFrame(frame), msg);
}

TEST(WireTest, RingTensorRoundTripIsByteIdentical) {
  for (RingParams p : {RingParams{64, 20}, RingParams{32, 16}}) {
    std::vector<RingTensor> ts{RandomRing(3, 4, p, 1), RandomRing(1, 7, p, 2)};
    NodeTelemetry tel{123, 456, 789};
    auto payload = EncodeRingTensors(ts, &tel);
    EXPECT_EQ(payload.size(), 4 + 2 * kTensorPrefixBytes +
                                  (12 + 7) * p.element_bytes() +
                                  kTelemetryBytes);
    WireMessage msg{MsgType::kShareSum, 5, 2, payload};
    WireMessage back = DecodeFrame(EncodeFrame(msg));
    NodeTelemetry got;
    auto decoded = DecodeRingTensors(back.payload, p, &got);
    EXPECT_EQ(decoded, ts);
    EXPECT_EQ(got.bytes_sent, 123u);
    EXPECT_EQ(got.share_element_bytes, 456u);
    EXPECT_EQ(got.compute_ns, 789u);
    EXPECT_EQ(EncodeRingTensors(decoded, &got), payload);
  }
}

TEST(WireTest, RealTensorsAndDeltaRoundTrip) {
  std::vector<RealMatrix> ms{RandomMatrix(2, 3, 1), RealMatrix(0, 0)};
  EXPECT_EQ(DecodeRealTensors(EncodeRealTensors(ms, nullptr), nullptr), ms);
  DeltaBundle b;
  b.steps = {{RandomMatrix(2, 2, 2), RandomMatrix(2, 1, 3)},
             {RandomMatrix(2, 2, 4), RandomMatrix(2, 1, 5)}};
  b.trailer = {RandomMatrix(2, 2, 6)};
  DeltaBundle back = DecodeDelta(EncodeDelta(b));
  EXPECT_EQ(back.steps, b.steps);
  EXPECT_EQ(back.trailer, b.trailer);
}

TEST(WireTest, ControlRoundTrip) {
  ControlPayload it{ControlCommand::kIterate, {4, 1, 99}, 0, ""};
  ControlPayload got = DecodeControl(EncodeControl(it));
  EXPECT_EQ(got.command, ControlCommand::kIterate);
  EXPECT_EQ(got.batch, it.batch);
  ControlPayload hello{ControlCommand::kHello, {}, 0xfeedbeefcafe, ""};
  EXPECT_EQ(DecodeControl(EncodeControl(hello)).fingerprint, 0xfeedbeefcafeu);
  ControlPayload rej{ControlCommand::kReject, {}, 0, "nope"};
  EXPECT_EQ(DecodeControl(EncodeControl(rej)).reason, "nope");
  EXPECT_EQ(DecodeControl(EncodeControl({ControlCommand::kStop, {}, 0, ""}))
                .command,
            ControlCommand::kStop);
}

TEST(WireTest, MalformedFrames) {
  auto good = EncodeFrame({MsgType::kShare, 1, 1, {1, 2, 3, 4}});
  auto expect_bad = [](std::vector<uint8_t> f) {
    return ThrowsCode([&] { DecodeFrame(f); }, ErrorCode::kMalformedFrame);
  };
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_TRUE(expect_bad(bad_magic));
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_TRUE(expect_bad(bad_version));
  auto bad_type = good;
  bad_type[5] = 9;
  EXPECT_TRUE(expect_bad(bad_type));
  auto truncated = good;
  truncated.pop_back();
  EXPECT_TRUE(expect_bad(truncated));
  auto extra = good;
  extra.push_back(0);
  EXPECT_TRUE(expect_bad(extra));
  EXPECT_TRUE(expect_bad({'P', 'C', 'O'}));
}

TEST(WireTest, MalformedPayloads) {
  auto payload = EncodeRingTensors(
      std::vector<RingTensor>{RandomRing(2, 2, RingParams{}, 1)}, nullptr);
  auto cut = payload;
  cut.resize(cut.size() - 3);
  EXPECT_TRUE(ThrowsCode([&] { DecodeRingTensors(cut, RingParams{}, nullptr); },
                         ErrorCode::kMalformedFrame));
  auto longer = payload;
  longer.push_back(1);
  EXPECT_TRUE(
      ThrowsCode([&] { DecodeRingTensors(longer, RingParams{}, nullptr); },
                 ErrorCode::kMalformedFrame));
  // A huge declared shape must not allocate before the length check.
  std::vector<uint8_t> lying{1, 0, 0, 0, 0xff, 0xff, 0, 0, 0xff, 0xff, 0, 0};
  EXPECT_TRUE(ThrowsCode([&] { DecodeRealTensors(lying, nullptr); },
                         ErrorCode::kMalformedFrame));
}

}  // namespace
}  // namespace privcoll
