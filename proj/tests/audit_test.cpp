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
#include "privcoll/audit.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "privcoll/config.hpp"
#include "privcoll/protocol.hpp"
#include "privcoll/sharing.hpp"
#include "test_util.hpp"

namespace privcoll {
namespace {

using testing::RandomMatrix;
using testing::ThrowsCode;

RealMatrix Identity(size_t k) {
  RealMatrix m(k, k);
  for (size_t i = 0; i < k; ++i) m(i, i) = 1.0;
  return m;
}

TEST(AuditTest, EpsilonBound) {
  EXPECT_NEAR(EpsilonBoundLog10(5), -std::log10(120.0), 1e-12);
  EXPECT_LE(EpsilonBoundLog10(5), -2.079);
  EXPECT_NEAR(EpsilonBoundLog10(1), 0.0, 1e-12);
  EXPECT_LE(EpsilonBoundLog10(35), -40.0);
  // 32! is only ~2.6e35.
  EXPECT_GT(EpsilonBoundLog10(32), -40.0);
  for (size_t r = 1; r < 60; ++r) {
    EXPECT_LT(EpsilonBoundLog10(r + 1), EpsilonBoundLog10(r)) << r;
  }
}

TEST(AuditTest, NumericalRank) {
  for (size_t k : {1u, 3u, 10u}) EXPECT_EQ(NumericalRank(Identity(k)), k);
  EXPECT_EQ(NumericalRank(RealMatrix(6, 4)), 0u);
  auto syn = GenSynthetic(200, 60, 1, 35, 0.0, 11);
  EXPECT_EQ(NumericalRank(syn.x), 35u);
  // Duplicated columns do not add rank.
  RealMatrix a = RandomMatrix(20, 3, 4);
  EXPECT_EQ(NumericalRank(HorizontalConcat(std::vector<RealMatrix>{a, a})), 3u);
}

TEST(AuditTest, EigenReconstructionsReproduceGram) {
  const uint64_t fact[] = {1, 1, 2, 6, 24};
  for (size_t r = 1; r <= 4; ++r) {
    SCOPED_TRACE(r);
    RealMatrix b = RandomMatrix(7, r, 20 + r);
    RealMatrix a = MatmulTransposedRight(b, b);
    EigenAnalysis e = AnalyzeGram(a);
    EXPECT_EQ(e.rank, r);
    auto rc = EigenReconstructions(e, r);
    EXPECT_EQ(rc.count, fact[r]);
    EXPECT_LE(rc.max_error, 1e-8);
    EXPECT_NEAR(rc.log10_count, std::log10(static_cast<double>(fact[r])),
                1e-12);
  }
  RealMatrix b = RandomMatrix(9, 6, 3);
  auto big = EigenReconstructions(AnalyzeGram(MatmulTransposedRight(b, b)), 6);
  EXPECT_EQ(big.count, 0u);
  EXPECT_NEAR(big.log10_count, std::log10(720.0), 1e-12);
}

TEST(AuditTest, PsdCheck) {
  RealMatrix b = RandomMatrix(8, 5, 2);
  EXPECT_TRUE(IsPsd(MatmulTransposedRight(b, b)));
  RealMatrix d = Identity(3);
  d(1, 1) = -0.5;
  EXPECT_FALSE(IsPsd(d));
}

TEST(AuditTest, AdversarySets) {
  EXPECT_EQ(ParseAdversarySet("agg, 1", 3), (AdversarySet{0, 1}));
  EXPECT_EQ(ParseAdversarySet("Agg", 3), (AdversarySet{0}));
  EXPECT_EQ(ParseAdversarySet("", 3), AdversarySet{});
  EXPECT_TRUE(ThrowsCode([] { ParseAdversarySet("4", 3); },
                         ErrorCode::kInvalidAdversarySet));
  EXPECT_TRUE(WithinProvenRegime({1}, 3));
  EXPECT_TRUE(WithinProvenRegime({0, 1}, 3));
  EXPECT_FALSE(WithinProvenRegime({1, 2}, 3));
  EXPECT_FALSE(WithinProvenRegime({0}, 1));
  EXPECT_EQ(CorruptNodes({0, 2, 3}), 2u);
}

struct Slices {
  std::vector<RealMatrix> x, w;
};

Slices MakeSlices(size_t s, size_t m, uint64_t seed) {
  Slices out;
  for (size_t l = 0; l < s; ++l) {
    out.x.push_back(RandomMatrix(m, 2 + l, seed + l));
    out.w.push_back(RandomMatrix(2 + l, 2, seed + 100 + l));
  }
  return out;
}

TEST(AuditTest, AggregatorOnlyKnowledge) {
  Slices sl = MakeSlices(3, 6, 40);
  PartyKnowledge k = BuildPartyKnowledge(sl.x, sl.w, {0});
  EXPECT_EQ(k.honest, (std::vector<int>{1, 2, 3}));
  EXPECT_TRUE(k.knows_xw);
  EXPECT_TRUE(k.own_x.empty());
  RealMatrix xw = Matmul(HorizontalConcat(sl.x), VerticalConcat(sl.w));
  EXPECT_LE(MaxAbsDiff(k.xw, xw), 1e-12);
  EXPECT_LE(MaxAbsDiff(k.z1, xw), 1e-12);
  EXPECT_TRUE(IsPsd(k.z2));
  EXPECT_TRUE(IsPsd(k.z3));
}

TEST(AuditTest, KnowledgeOfCorruptNode) {
  Slices sl = MakeSlices(4, 5, 50);
  PartyKnowledge k = BuildPartyKnowledge(sl.x, sl.w, {2});
  EXPECT_EQ(k.honest, (std::vector<int>{1, 3, 4}));
  EXPECT_FALSE(k.knows_xw);
  ASSERT_EQ(k.own_x.size(), 1u);
  EXPECT_EQ(k.own_x[0], sl.x[1]);
  RealMatrix z2(5, 5);
  for (size_t l : {0u, 2u, 3u}) {
    AddInPlace(z2, MatmulTransposedRight(sl.x[l], sl.x[l]));
  }
  EXPECT_LE(MaxAbsDiff(k.z2, z2), 1e-12);
}

TEST(AuditTest, KnowledgeRejectsLargeCoalitions) {
  Slices sl = MakeSlices(3, 4, 60);
  EXPECT_TRUE(ThrowsCode([&] { BuildPartyKnowledge(sl.x, sl.w, {0, 1, 2}); },
                         ErrorCode::kInvalidAdversarySet));
  EXPECT_TRUE(ThrowsCode([&] { BuildPartyKnowledge(sl.x, sl.w, {1, 2}); },
                         ErrorCode::kInvalidAdversarySet));
}

TEST(AuditTest, GramFromRecordedRunMatchesRawPartitions) {
  TrainingConfig cfg = ParseConfig(
      "model = linear\nparties = 3\nmax_iterations = 3\nseed = 8\n"
      "data.samples = 30\ndata.features = 9\n");
  Dataset data = LoadDataset(cfg);
  TrainingResult run = Simulation(cfg, data).Run();
  auto x = PartitionVertical(data.x(), ResolvePlan(cfg, data.features()));
  PartyKnowledge k = BuildPartyKnowledge(x, run.node_weights, {0});
  // Independent recomputation: loops over the unpartitioned matrix.
  const RealMatrix& raw = data.x();
  RealMatrix g(raw.rows(), raw.rows());
  for (size_t i = 0; i < raw.rows(); ++i) {
    for (size_t j = 0; j < raw.rows(); ++j) {
      double acc = 0.0;
      for (size_t c = 0; c < raw.cols(); ++c) acc += raw(i, c) * raw(j, c);
      g(i, j) = acc;
    }
  }
  EXPECT_LE(MaxAbsDiff(k.z3, g), 1e-12);
}

// Linear config with i.i.d. features so the iteration stays bounded.
Dataset IidLinear(size_t m, size_t n, uint64_t seed) {
  Dataset d;
  d.x_steps.push_back(RandomMatrix(m, n, seed));
  d.y_steps.push_back(Matmul(d.x(), RandomMatrix(n, 1, seed + 1)));
  return d;
}

TrainingConfig SimRealConfig(double alpha, uint64_t seed) {
  TrainingConfig cfg = ParseConfig("model = linear\nparties = 3\n");
  cfg.alpha = alpha;
  cfg.seed = seed;
  return cfg;
}

TEST(AuditTest, SimRealSingleIterationIsExact) {
  Dataset d = IidLinear(30, 12, 5);
  auto r = SimRealCheck(SimRealConfig(0.1, 1), d, 1, {}, false);
  ASSERT_EQ(r.deviation.size(), 1u);
  EXPECT_EQ(r.max_deviation, 0.0);
}

TEST(AuditTest, SimRealTwentyIterations) {
  for (uint64_t seed = 1; seed <= 4; ++seed) {
    SCOPED_TRACE(seed);
    Dataset d = IidLinear(40, 15, seed);
    TrainingConfig cfg = SimRealConfig(0.3, seed);
    EXPECT_LE(SimRealCheck(cfg, d, 20, {}, false).max_deviation, 1e-6);
    EXPECT_LE(SimRealCheck(cfg, d, 20, {1}, false).max_deviation, 1e-6);
    EXPECT_LE(SimRealCheck(cfg, d, 20, {2}, true).max_deviation, 1e-6);
  }
}

TEST(AuditTest, SimRealZeroLearningRate) {
  Dataset d = IidLinear(20, 6, 9);
  auto r = SimRealCheck(SimRealConfig(0.0, 2), d, 10, {}, true);
  EXPECT_EQ(r.max_deviation, 0.0);
}

TEST(AuditTest, SimRealRejectsOtherModels) {
  TrainingConfig cfg = ParseConfig("model = logistic\n");
  Dataset d = IidLinear(10, 4, 1);
  EXPECT_TRUE(ThrowsCode([&] { SimRealCheck(cfg, d, 2, {}, false); },
                         ErrorCode::kConfig));
}

ShareRoundTranscript Round(std::vector<RingTensor> secrets, uint64_t seed) {
  std::vector<Prg> prgs;
  for (size_t l = 0; l < secrets.size(); ++l) {
    prgs.emplace_back(DeriveKey(seed, Stream::kAudit, {l + 1}));
  }
  return RunShareRound(std::move(secrets), prgs);
}

TEST(AuditTest, CollusionRecoversLastNode) {
  RingParams p;
  std::vector<RingTensor> secrets;
  for (size_t l = 0; l < 3; ++l) {
    secrets.push_back(Encode(
        Matmul(RandomMatrix(5, 3, 70 + l), RandomMatrix(3, 2, 80 + l)), p));
  }
  const RingTensor node3 = secrets[2];
  auto out = CollusionDemo(Round(secrets, 1), {1, 2});
  EXPECT_TRUE(out.succeeded);
  EXPECT_EQ(out.honest, (std::vector<int>{3}));
  EXPECT_EQ(out.recovered, node3);
}

TEST(AuditTest, CollusionFailsWithTwoHonestNodes) {
  RingParams p;
  std::vector<RingTensor> secrets = {Encode(RandomMatrix(4, 2, 1), p),
                                     Encode(RandomMatrix(4, 2, 2), p)};
  auto out = CollusionDemo(Round(secrets, 2), {});
  EXPECT_FALSE(out.succeeded);
  EXPECT_NE(out.recovered, secrets[0]);
  EXPECT_NE(out.recovered, secrets[1]);
}

TEST(AuditTest, CollusionRecoversZeroSecret) {
  RingParams p;
  std::vector<RingTensor> secrets = {Encode(RandomMatrix(3, 3, 5), p),
                                     Encode(RealMatrix(3, 3), p)};
  auto out = CollusionDemo(Round(secrets, 3), {1});
  EXPECT_TRUE(out.succeeded);
  EXPECT_EQ(out.recovered, Encode(RealMatrix(3, 3), p));
}

TEST(AuditTest, FullReport) {
  TrainingConfig cfg = ParseConfig(
      "model = linear\nparties = 3\nmax_iterations = 5\nseed = 4\n"
      "data.samples = 80\ndata.features = 12\ndata.rank = 12\n");
  Dataset data = LoadDataset(cfg);
  TrainingResult run = Simulation(cfg, data).Run();
  AuditReport rep = RunAudit(cfg, data, run.node_weights, {0, 1});
  EXPECT_TRUE(rep.within_regime);
  EXPECT_TRUE(rep.passed());
  EXPECT_TRUE(rep.collusion_succeeded);
  EXPECT_FALSE(rep.adversary_recovered);
  EXPECT_TRUE(rep.sim_real_run);
  EXPECT_GT(rep.rank, 0u);
  std::string text = FormatAuditReport(rep);
  EXPECT_NE(text.find("status: PASS"), std::string::npos);
  EXPECT_NE(text.find("adversary: Agg S1"), std::string::npos);

  AuditReport outside = RunAudit(cfg, data, run.node_weights, {0, 1, 2});
  EXPECT_FALSE(outside.within_regime);
  EXPECT_TRUE(outside.adversary_recovered);
  EXPECT_NE(FormatAuditReport(outside).find("outside proven regime"),
            std::string::npos);
}

}  // namespace
}  // namespace privcoll
