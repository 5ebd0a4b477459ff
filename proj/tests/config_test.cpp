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

#include "privcoll/config.hpp"

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace privcoll {
namespace {

using testing::TempPath;
using testing::ThrowsCode;

std::string ConfigErrorOf(const std::string& text) {
  try {
    ParseConfig(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    return e.what();
  }
  return "";
}

TEST(ConfigTest, DefaultsAreUsable) {
  TrainingConfig cfg = ParseConfig("");
  EXPECT_NO_THROW(cfg.Validate());
  EXPECT_EQ(cfg.ring.width, 64u);
  EXPECT_EQ(cfg.ring.frac_bits, 20u);
  EXPECT_EQ(cfg.parties, 3u);
  EXPECT_EQ(cfg.effective_batch(), 40u);
  cfg.model.kind = ModelKind::kFeedForward;
  EXPECT_EQ(cfg.effective_batch(), 150u);
  EXPECT_EQ(cfg.timeout.count(), 30000);
}

TEST(ConfigTest, ParsesKeysCommentsAndWhitespace) {
  TrainingConfig cfg = ParseConfig(R"(
# comment line
model = nn   # trailing comment
hidden_layers = 128, 64
output_activation = softmax
alpha=0.5
batch_size = 50
parties = 4
plaintext = true
profile = wan
transport = tcp
address.0 = 127.0.0.1:9000
address.4 = 127.0.0.1:9004
data.kind = mnist
)");
  EXPECT_EQ(cfg.model.kind, ModelKind::kFeedForward);
  EXPECT_EQ(cfg.model.hidden_layers, (std::vector<size_t>{128, 64}));
  EXPECT_EQ(cfg.model.output_activation, Activation::kSoftmax);
  EXPECT_EQ(cfg.alpha, 0.5);
  EXPECT_EQ(cfg.batch_size, 50u);
  EXPECT_TRUE(cfg.plaintext);
  EXPECT_EQ(cfg.profile.latency_ms, 137.7);
  EXPECT_EQ(cfg.profile.throughput_bytes_per_s, 9.27e6);
  EXPECT_EQ(cfg.transport, TransportMode::kTcp);
  ASSERT_EQ(cfg.addresses.size(), 5u);
  EXPECT_EQ(cfg.addresses[4], "127.0.0.1:9004");
  EXPECT_EQ(cfg.data.kind, "mnist");
}

TEST(ConfigTest, ErrorsNameLineAndField) {
  std::string e = ConfigErrorOf("model = linear\nalpha = fast\n");
  EXPECT_NE(e.find("line 2"), std::string::npos) << e;
  EXPECT_NE(e.find("field 'alpha'"), std::string::npos) << e;
  EXPECT_NE(ConfigErrorOf("\n\nbogus = 1").find("line 3: field 'bogus'"),
            std::string::npos);
  EXPECT_NE(ConfigErrorOf("model = svm").find("field 'model'"),
            std::string::npos);
  EXPECT_NE(ConfigErrorOf("parties 3").find("line 1"), std::string::npos);
  EXPECT_NE(ConfigErrorOf("batch_size = -4").find("field 'batch_size'"),
            std::string::npos);
  EXPECT_NE(ConfigErrorOf("plaintext = maybe").find("field 'plaintext'"),
            std::string::npos);
  EXPECT_NE(ConfigErrorOf("alpha = 1.0x").find("field 'alpha'"),
            std::string::npos);
}

TEST(ConfigTest, ValidationFailures) {
  TrainingConfig one = ParseConfig("parties = 1");
  EXPECT_TRUE(ThrowsCode([&] { one.Validate(); },
                         ErrorCode::kInvalidPartyCount));
  one.plaintext = true;
  EXPECT_NO_THROW(one.Validate());
  TrainingConfig tcp = ParseConfig("transport = tcp\naddress.0 = h:1");
  EXPECT_TRUE(ThrowsCode([&] { tcp.Validate(); }, ErrorCode::kConfig));
  TrainingConfig ring = ParseConfig("ring.width = 16");
  EXPECT_THROW(ring.Validate(), Error);
}

TEST(ConfigTest, WarningsForAdversaryBoundAndPlaintext) {
  EXPECT_TRUE(ParseConfig("adversary_t = 1").Warnings().empty());
  auto w = ParseConfig("adversary_t = 2\nplaintext = true").Warnings();
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NE(w[0].find("t < s-1"), std::string::npos);
  EXPECT_NE(w[1].find("INSECURE"), std::string::npos);
}

TEST(ConfigTest, FormatRoundTrips) {
  TrainingConfig cfg = ParseConfig(R"(
model = logistic
lambda = 0.001
alpha = 0.123456789012345
seed = 99
ring.width = 32
ring.frac_bits = 16
profile = custom
latency_ms = 12.5
throughput_bps = 1000
data.kind = csv
data.path = /tmp/x.csv
data.label_column = target
)");
  TrainingConfig back = ParseConfig(FormatConfig(cfg));
  EXPECT_EQ(FormatConfig(back), FormatConfig(cfg));
  EXPECT_EQ(back.alpha, cfg.alpha);
  EXPECT_EQ(back.model.lambda, cfg.model.lambda);
  EXPECT_EQ(back.ring, cfg.ring);
  EXPECT_EQ(back.profile.latency_ms, 12.5);
  EXPECT_EQ(back.data.label_column, "target");
  EXPECT_EQ(back.Fingerprint(), cfg.Fingerprint());
}

TEST(ConfigTest, FingerprintTracksAgreedFields) {
  TrainingConfig a = ParseConfig("seed = 1");
  TrainingConfig b = ParseConfig("seed = 2");
  TrainingConfig c = ParseConfig("seed = 1\ntimeout_ms = 5");
  EXPECT_NE(a.Fingerprint(), b.Fingerprint());
  EXPECT_EQ(a.Fingerprint(), c.Fingerprint());
}

TEST(ConfigTest, RelativePathsResolveAgainstConfigDir) {
  const auto dir = std::filesystem::path(TempPath("cfgdir"));
  std::filesystem::create_directories(dir / "sub");
  std::ofstream(dir / "sub" / "run.cfg")
      << "data.kind = csv\ndata.path = ../data.csv\n";
  TrainingConfig cfg = LoadConfig((dir / "sub" / "run.cfg").string());
  EXPECT_EQ(cfg.data.path, (dir / "data.csv").lexically_normal().string());
  std::filesystem::remove_all(dir);
  EXPECT_TRUE(ThrowsCode([] { LoadConfig("/nonexistent/x.cfg"); },
                         ErrorCode::kConfig));
}

TEST(ConfigTest, LoadDatasetAppliesLimitAndOutputs) {
  TrainingConfig cfg = ParseConfig(
      "data.samples = 50\ndata.features = 6\ndata.outputs = 2\ndata.limit = 20");
  Dataset ds = LoadDataset(cfg);
  EXPECT_EQ(ds.samples(), 20u);
  EXPECT_EQ(ds.features(), 6u);
  EXPECT_EQ(cfg.model.outputs, 2u);
  auto plan = ResolvePlan(cfg, ds.features());
  EXPECT_EQ(plan.ranges.back(), (FeatureRange{4, 6}));
  cfg.parties = 7;
  EXPECT_TRUE(ThrowsCode([&] { ResolvePlan(cfg, 6); },
                         ErrorCode::kInvalidPlan));
}

TEST(ConfigTest, ShippedConfigsParse) {
  const std::string dir = PRIVCOLL_MNIST_DIR "/../../configs";
  for (const char* name : {"linear.cfg", "logistic.cfg", "nn_mnist.cfg",
                           "rnn.cfg", "tcp_loopback.cfg"}) {
    SCOPED_TRACE(name);
    TrainingConfig cfg = LoadConfig(dir + "/" + name);
    EXPECT_NO_THROW(cfg.Validate());
  }
}

}  // namespace
}  // namespace privcoll
