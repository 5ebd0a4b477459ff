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

#ifndef PRIVCOLL_TENSOR_HPP_
#define PRIVCOLL_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "privcoll/error.hpp"

namespace privcoll {

// Dense row-major matrix of doubles. All plaintext model math runs on this.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  RealMatrix(size_t rows, size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      Fail(ErrorCode::kShapeMismatch,
           "data length " + std::to_string(data_.size()) + " != " +
               std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  RealMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) Fail(ErrorCode::kShapeMismatch, "ragged rows");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static RealMatrix Identity(size_t n) {
    RealMatrix m(n, n);
    for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool SameShape(const RealMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  std::string ShapeString() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  bool AllFinite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const RealMatrix&, const RealMatrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void RequireSameShape(const RealMatrix& a, const RealMatrix& b,
                             const char* op) {
  if (!a.SameShape(b)) {
    Fail(ErrorCode::kShapeMismatch, std::string(op) + ": " + a.ShapeString() +
                                        " vs " + b.ShapeString());
  }
}

template <typename F>
RealMatrix Map(const RealMatrix& a, F f) {
  RealMatrix out(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
  return out;
}

template <typename F>
RealMatrix Zip(const RealMatrix& a, const RealMatrix& b, const char* op, F f) {
  RequireSameShape(a, b, op);
  RealMatrix out(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) {
    out.data()[i] = f(a.data()[i], b.data()[i]);
  }
  return out;
}

}  // namespace detail

// (m x d)(d x k) -> m x k. i-k-j loop order; accumulation order is fixed so
// results are reproducible bit-for-bit.
inline RealMatrix Matmul(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) {
    Fail(ErrorCode::kShapeMismatch,
         "matmul: " + a.ShapeString() + " * " + b.ShapeString());
  }
  RealMatrix out(a.rows(), b.cols());
  const size_t n = b.cols();
  for (size_t i = 0; i < a.rows(); ++i) {
    double* orow = out.row(i).data();
    for (size_t p = 0; p < a.cols(); ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = b.row(p).data();
      for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

inline RealMatrix Transpose(const RealMatrix& a) {
  RealMatrix out(a.cols(), a.rows());
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

// a^T b without forming a^T.
inline RealMatrix MatmulTransposedLeft(const RealMatrix& a,
                                       const RealMatrix& b) {
  if (a.rows() != b.rows()) {
    Fail(ErrorCode::kShapeMismatch,
         "matmul_tn: " + a.ShapeString() + "^T * " + b.ShapeString());
  }
  RealMatrix out(a.cols(), b.cols());
  const size_t n = b.cols();
  for (size_t r = 0; r < a.rows(); ++r) {
    const double* brow = b.row(r).data();
    for (size_t i = 0; i < a.cols(); ++i) {
      const double av = a(r, i);
      if (av == 0.0) continue;
      double* orow = out.row(i).data();
      for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

// a b^T without forming b^T.
inline RealMatrix MatmulTransposedRight(const RealMatrix& a,
                                        const RealMatrix& b) {
  if (a.cols() != b.cols()) {
    Fail(ErrorCode::kShapeMismatch,
         "matmul_nt: " + a.ShapeString() + " * " + b.ShapeString() + "^T");
  }
  RealMatrix out(a.rows(), b.rows());
  for (size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    for (size_t j = 0; j < b.rows(); ++j) {
      auto br = b.row(j);
      double acc = 0.0;
      for (size_t p = 0; p < ar.size(); ++p) acc += ar[p] * br[p];
      out(i, j) = acc;
    }
  }
  return out;
}

inline RealMatrix Add(const RealMatrix& a, const RealMatrix& b) {
  return detail::Zip(a, b, "add", [](double x, double y) { return x + y; });
}

inline RealMatrix Sub(const RealMatrix& a, const RealMatrix& b) {
  return detail::Zip(a, b, "sub", [](double x, double y) { return x - y; });
}

inline RealMatrix Hadamard(const RealMatrix& a, const RealMatrix& b) {
  return detail::Zip(a, b, "hadamard",
                     [](double x, double y) { return x * y; });
}

inline RealMatrix Scale(const RealMatrix& a, double s) {
  return detail::Map(a, [s](double x) { return x * s; });
}

// In-place a -= s * b.
inline void AxpyInPlace(RealMatrix& a, double s, const RealMatrix& b) {
  detail::RequireSameShape(a, b, "axpy");
  for (size_t i = 0; i < a.size(); ++i) a.data()[i] -= s * b.data()[i];
}

inline void AddInPlace(RealMatrix& a, const RealMatrix& b) {
  detail::RequireSameShape(a, b, "add_in_place");
  for (size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

// Adds a 1 x n row vector to every row.
inline RealMatrix AddRowVector(const RealMatrix& a, const RealMatrix& v) {
  if (v.rows() != 1 || v.cols() != a.cols()) {
    Fail(ErrorCode::kShapeMismatch,
         "add_row_vector: " + a.ShapeString() + " + " + v.ShapeString());
  }
  RealMatrix out = a;
  for (size_t i = 0; i < a.rows(); ++i) {
    auto r = out.row(i);
    for (size_t j = 0; j < r.size(); ++j) r[j] += v(0, j);
  }
  return out;
}

// 1 x n column sums.
inline RealMatrix ColumnSums(const RealMatrix& a) {
  RealMatrix out(1, a.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (size_t j = 0; j < r.size(); ++j) out(0, j) += r[j];
  }
  return out;
}

inline RealMatrix RowSlice(const RealMatrix& a, std::span<const size_t> rows) {
  RealMatrix out(rows.size(), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) {
      Fail(ErrorCode::kShapeMismatch, "row index " + std::to_string(rows[i]) +
                                          " out of " + a.ShapeString());
    }
    std::copy_n(a.row(rows[i]).begin(), a.cols(), out.row(i).begin());
  }
  return out;
}

inline RealMatrix ColumnRange(const RealMatrix& a, size_t begin, size_t end) {
  if (begin > end || end > a.cols()) {
    Fail(ErrorCode::kShapeMismatch, "column range out of bounds");
  }
  RealMatrix out(a.rows(), end - begin);
  for (size_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin() + begin, a.row(i).begin() + end,
              out.row(i).begin());
  }
  return out;
}

inline RealMatrix RowRange(const RealMatrix& a, size_t begin, size_t end) {
  if (begin > end || end > a.rows()) {
    Fail(ErrorCode::kShapeMismatch, "row range out of bounds");
  }
  RealMatrix out(end - begin, a.cols());
  std::copy(a.data().begin() + begin * a.cols(),
            a.data().begin() + end * a.cols(), out.data().begin());
  return out;
}

// Side-by-side concatenation (same row count).
inline RealMatrix HorizontalConcat(std::span<const RealMatrix> parts) {
  if (parts.empty()) return {};
  size_t rows = parts.front().rows();
  size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) Fail(ErrorCode::kShapeMismatch, "hconcat rows");
    cols += p.cols();
  }
  RealMatrix out(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p.row(i).begin(), p.row(i).end(), out.row(i).begin() + off);
      off += p.cols();
    }
  }
  return out;
}

// Stacked concatenation (same column count).
inline RealMatrix VerticalConcat(std::span<const RealMatrix> parts) {
  if (parts.empty()) return {};
  size_t cols = parts.front().cols();
  size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) Fail(ErrorCode::kShapeMismatch, "vconcat cols");
    rows += p.rows();
  }
  RealMatrix out(rows, cols);
  auto it = out.data().begin();
  for (const auto& p : parts) it = std::copy(p.data().begin(), p.data().end(), it);
  return out;
}

inline double Sigmoid(double z) {
  // Branch keeps exp() argument non-positive.
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline RealMatrix Sigmoid(const RealMatrix& z) {
  return detail::Map(z, [](double v) { return Sigmoid(v); });
}

inline RealMatrix SigmoidPrime(const RealMatrix& z) {
  return detail::Map(z, [](double v) {
    double s = Sigmoid(v);
    return s * (1.0 - s);
  });
}

inline RealMatrix Tanh(const RealMatrix& z) {
  return detail::Map(z, [](double v) { return std::tanh(v); });
}

inline RealMatrix TanhPrime(const RealMatrix& z) {
  return detail::Map(z, [](double v) {
    double t = std::tanh(v);
    return 1.0 - t * t;
  });
}

// Row-wise softmax with per-row max subtraction.
inline RealMatrix SoftmaxRows(const RealMatrix& z) {
  RealMatrix out(z.rows(), z.cols());
  for (size_t i = 0; i < z.rows(); ++i) {
    auto in = z.row(i);
    auto o = out.row(i);
    double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

inline double MaxAbsDiff(const RealMatrix& a, const RealMatrix& b) {
  detail::RequireSameShape(a, b, "max_abs_diff");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

inline double MaxAbs(const RealMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double SquaredNorm(const RealMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

inline size_t ArgmaxRow(const RealMatrix& a, size_t r) {
  auto row = a.row(r);
  return static_cast<size_t>(std::max_element(row.begin(), row.end()) -
                             row.begin());
}

}  // namespace privcoll

#endif  // PRIVCOLL_TENSOR_HPP_
