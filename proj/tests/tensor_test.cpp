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

#include "privcoll/tensor.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "privcoll/error.hpp"
#include "test_util.hpp"

namespace privcoll {
namespace {

using testing::NaiveMatmul;
using testing::RandomMatrix;
using testing::RelErr;

TEST(TensorTest, IdentityTimesMatrix) {
  RealMatrix b{{1.5, -2.0}, {3.0, 4.25}};
  EXPECT_EQ(Matmul(RealMatrix::Identity(2), b), b);
}

TEST(TensorTest, HandCheckedProduct) {
  RealMatrix a{{1, 2}, {3, 4}};
  RealMatrix b{{1}, {1}};
  EXPECT_EQ(Matmul(a, b), (RealMatrix{{3}, {7}}));
}

TEST(TensorTest, MatmulMatchesTripleLoop) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    RealMatrix a = RandomMatrix(5, 7, seed), b = RandomMatrix(7, 3, seed + 100);
    RealMatrix ref = NaiveMatmul(a, b);
    RealMatrix got = Matmul(a, b);
    // Same summation order over k, so the result is bit-identical.
    EXPECT_EQ(got, ref);
  }
}

TEST(TensorTest, MatmulShapeMismatch) {
  try {
    Matmul(RealMatrix(2, 3), RealMatrix(2, 3));
    FAIL() << "expected ShapeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(TensorTest, TransposedProductsMatchExplicitTranspose) {
  RealMatrix a = RandomMatrix(6, 4, 1), b = RandomMatrix(6, 3, 2);
  RealMatrix c = RandomMatrix(5, 4, 3);
  EXPECT_LE(MaxAbsDiff(MatmulTransposedLeft(a, b),
                       NaiveMatmul(Transpose(a), b)),
            1e-15);
  EXPECT_LE(MaxAbsDiff(MatmulTransposedRight(a, c),
                       NaiveMatmul(a, Transpose(c))),
            1e-15);
}

TEST(TensorTest, TransposeOfProduct) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    RealMatrix a = RandomMatrix(4, 6, seed), b = RandomMatrix(6, 5, seed + 9);
    EXPECT_LE(MaxAbsDiff(Transpose(Matmul(a, b)),
                         Matmul(Transpose(b), Transpose(a))),
              1e-14);
  }
}

TEST(TensorTest, SigmoidValues) {
  EXPECT_DOUBLE_EQ(Sigmoid(0.0), 0.5);
  EXPECT_DOUBLE_EQ(SigmoidPrime(RealMatrix{{0.0}})(0, 0), 0.25);
  EXPECT_GT(Sigmoid(-800.0), -1e-300);
  EXPECT_LE(Sigmoid(800.0), 1.0);
}

// Central difference with h = 1e-5.
double CentralDiff(double (*f)(double), double z) {
  const double h = 1e-5;
  return (f(z + h) - f(z - h)) / (2 * h);
}

TEST(TensorTest, ActivationDerivativesMatchFiniteDifferences) {
  RealMatrix z = RandomMatrix(4, 5, 11, -4.0, 4.0);
  RealMatrix sp = SigmoidPrime(z), tp = TanhPrime(z);
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto th = [](double x) { return std::tanh(x); };
  for (size_t i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    EXPECT_LE(RelErr(sp.data()[i], CentralDiff(+sig, x)), 1e-6);
    EXPECT_LE(RelErr(tp.data()[i], CentralDiff(+th, x)), 1e-6);
  }
}

TEST(TensorTest, SoftmaxSymmetricAndShiftInvariant) {
  RealMatrix p = SoftmaxRows(RealMatrix{{0, 0}, {1000, 1000}});
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(p(i, 0), 0.5);
    EXPECT_DOUBLE_EQ(p(i, 1), 0.5);
  }
}

TEST(TensorTest, SoftmaxMatchesNaiveFormula) {
  RealMatrix z = RandomMatrix(6, 4, 12, -3.0, 3.0);
  RealMatrix p = SoftmaxRows(z);
  for (size_t i = 0; i < z.rows(); ++i) {
    double denom = 0, row_sum = 0;
    for (size_t j = 0; j < z.cols(); ++j) denom += std::exp(z(i, j));
    for (size_t j = 0; j < z.cols(); ++j) {
      EXPECT_LE(RelErr(p(i, j), std::exp(z(i, j)) / denom), 1e-12);
      EXPECT_GT(p(i, j), 0.0);
      EXPECT_LT(p(i, j), 1.0);
      row_sum += p(i, j);
    }
    EXPECT_NEAR(row_sum, 1.0, 1e-15);
  }
}

TEST(TensorTest, ElementwiseOpsMatchLoops) {
  RealMatrix a = RandomMatrix(3, 4, 21), b = RandomMatrix(3, 4, 22);
  RealMatrix add = Add(a, b), sub = Sub(a, b), had = Hadamard(a, b);
  RealMatrix sc = Scale(a, -2.5);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(add.data()[i], a.data()[i] + b.data()[i]);
    EXPECT_EQ(sub.data()[i], a.data()[i] - b.data()[i]);
    EXPECT_EQ(had.data()[i], a.data()[i] * b.data()[i]);
    EXPECT_EQ(sc.data()[i], a.data()[i] * -2.5);
  }
  RealMatrix c = a;
  AxpyInPlace(c, 0.5, b);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(c.data()[i], a.data()[i] - 0.5 * b.data()[i]);
  }
  EXPECT_THROW(Add(a, RealMatrix(4, 3)), Error);
}

TEST(TensorTest, RowSliceAndRanges) {
  RealMatrix a{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  std::vector<size_t> rows{2, 0, 2};
  EXPECT_EQ(RowSlice(a, rows), (RealMatrix{{7, 8, 9}, {1, 2, 3}, {7, 8, 9}}));
  EXPECT_EQ(ColumnRange(a, 1, 3), (RealMatrix{{2, 3}, {5, 6}, {8, 9}}));
  EXPECT_EQ(RowRange(a, 1, 2), (RealMatrix{{4, 5, 6}}));
  std::vector<size_t> bad{3};
  EXPECT_THROW(RowSlice(a, bad), Error);
}

TEST(TensorTest, ConcatInvertsRanges) {
  RealMatrix a = RandomMatrix(5, 7, 31);
  std::vector<RealMatrix> cols{ColumnRange(a, 0, 3), ColumnRange(a, 3, 4),
                               ColumnRange(a, 4, 7)};
  EXPECT_EQ(HorizontalConcat(cols), a);
  std::vector<RealMatrix> rows{RowRange(a, 0, 2), RowRange(a, 2, 5)};
  EXPECT_EQ(VerticalConcat(rows), a);
}

TEST(TensorTest, BiasHelpers) {
  RealMatrix a{{1, 2}, {3, 4}};
  EXPECT_EQ(AddRowVector(a, RealMatrix{{10, 20}}),
            (RealMatrix{{11, 22}, {13, 24}}));
  EXPECT_EQ(ColumnSums(a), (RealMatrix{{4, 6}}));
  EXPECT_EQ(ArgmaxRow(a, 0), 1u);
  EXPECT_DOUBLE_EQ(SquaredNorm(a), 30.0);
}

}  // namespace
}  // namespace privcoll
