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

#ifndef PRIVCOLL_RING_HPP_
#define PRIVCOLL_RING_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/tensor.hpp"

namespace privcoll {

// Ring Z_{2^width} with a fixed-point scale of 2^frac_bits.
struct RingParams {
  unsigned width = 64;
  unsigned frac_bits = 20;

  uint64_t mask() const {
    return width == 64 ? ~uint64_t{0} : (uint64_t{1} << width) - 1;
  }
  size_t element_bytes() const { return width / 8; }
  double scale() const { return std::ldexp(1.0, static_cast<int>(frac_bits)); }
  // Exclusive bound on |x| accepted by Encode.
  double max_magnitude() const {
    return std::ldexp(1.0, static_cast<int>(width - 1 - frac_bits)) - 1.0;
  }

  void Validate() const {
    if (width != 32 && width != 64) {
      Fail(ErrorCode::kConfig,
           "ring width must be 32 or 64, got " + std::to_string(width));
    }
    if (frac_bits == 0 || frac_bits >= width - 8) {
      Fail(ErrorCode::kConfig, "fractional bits must be in (0, width-8), got " +
                                   std::to_string(frac_bits));
    }
  }

  friend bool operator==(const RingParams&, const RingParams&) = default;
};

// Matrix of ring elements. Elements are always kept reduced mod 2^width.
class RingTensor {
 public:
  RingTensor() = default;
  RingTensor(size_t rows, size_t cols, RingParams params)
      : rows_(rows), cols_(cols), params_(params), data_(rows * cols, 0) {}
  RingTensor(size_t rows, size_t cols, RingParams params,
             std::vector<uint64_t> data)
      : rows_(rows), cols_(cols), params_(params), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      Fail(ErrorCode::kShapeMismatch, "ring tensor data length mismatch");
    }
    const uint64_t m = params_.mask();
    for (auto& v : data_) v &= m;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  const RingParams& params() const { return params_; }

  uint64_t operator[](size_t i) const { return data_[i]; }
  uint64_t& operator[](size_t i) { return data_[i]; }
  const std::vector<uint64_t>& data() const { return data_; }
  std::vector<uint64_t>& data() { return data_; }

  bool SameShape(const RingTensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const RingTensor&, const RingTensor&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  RingParams params_;
  std::vector<uint64_t> data_;
};

// Fixed-point encode with round-half-away-from-zero; negatives wrap to the
// two's-complement residue.
inline uint64_t EncodeScalar(double x, const RingParams& params) {
  if (!std::isfinite(x) || std::abs(x) >= params.max_magnitude()) {
    Fail(ErrorCode::kRangeOverflow,
         "value " + std::to_string(x) + " outside +-" +
             std::to_string(params.max_magnitude()));
  }
  double scaled = std::round(x * params.scale());
  auto v = static_cast<int64_t>(scaled);
  return static_cast<uint64_t>(v) & params.mask();
}

inline double DecodeScalar(uint64_t e, const RingParams& params) {
  e &= params.mask();
  int64_t s;
  if (params.width == 64) {
    s = static_cast<int64_t>(e);
  } else {
    const uint64_t half = uint64_t{1} << (params.width - 1);
    s = e >= half ? static_cast<int64_t>(e) -
                        static_cast<int64_t>(uint64_t{1} << params.width)
                  : static_cast<int64_t>(e);
  }
  return static_cast<double>(s) / params.scale();
}

inline RingTensor Encode(const RealMatrix& x, const RingParams& params) {
  params.Validate();
  RingTensor out(x.rows(), x.cols(), params);
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = EncodeScalar(x.data()[i], params);
  }
  return out;
}

inline RealMatrix Decode(const RingTensor& t) {
  RealMatrix out(t.rows(), t.cols());
  for (size_t i = 0; i < t.size(); ++i) {
    out.data()[i] = DecodeScalar(t[i], t.params());
  }
  return out;
}

namespace detail {

inline void RequireCompatible(const RingTensor& a, const RingTensor& b) {
  if (!a.SameShape(b)) {
    Fail(ErrorCode::kShapeMismatch,
         "ring operands " + std::to_string(a.rows()) + "x" +
             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
             "x" + std::to_string(b.cols()));
  }
  if (!(a.params() == b.params())) {
    Fail(ErrorCode::kParamsMismatch, "ring operands use different params");
  }
}

}  // namespace detail

// Wrap-around addition is not an error: it is how masking works.
inline RingTensor RingAdd(const RingTensor& a, const RingTensor& b) {
  detail::RequireCompatible(a, b);
  RingTensor out(a.rows(), a.cols(), a.params());
  const uint64_t m = a.params().mask();
  for (size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) & m;
  return out;
}

inline void RingAddInPlace(RingTensor& a, const RingTensor& b) {
  detail::RequireCompatible(a, b);
  const uint64_t m = a.params().mask();
  for (size_t i = 0; i < a.size(); ++i) a[i] = (a[i] + b[i]) & m;
}

inline RingTensor RingSub(const RingTensor& a, const RingTensor& b) {
  detail::RequireCompatible(a, b);
  RingTensor out(a.rows(), a.cols(), a.params());
  const uint64_t m = a.params().mask();
  for (size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - b[i]) & m;
  return out;
}

inline RingTensor RingNegate(const RingTensor& a) {
  RingTensor out(a.rows(), a.cols(), a.params());
  const uint64_t m = a.params().mask();
  for (size_t i = 0; i < a.size(); ++i) out[i] = (0 - a[i]) & m;
  return out;
}

// Little-endian, element_bytes per element, row-major.
inline void AppendElementsLE(const RingTensor& t, std::vector<uint8_t>& out) {
  const size_t nb = t.params().element_bytes();
  out.reserve(out.size() + t.size() * nb);
  for (uint64_t v : t.data()) {
    for (size_t b = 0; b < nb; ++b) out.push_back(static_cast<uint8_t>(v >> (8 * b)));
  }
}

inline RingTensor ReadElementsLE(std::span<const uint8_t> bytes, size_t rows,
                                 size_t cols, const RingParams& params) {
  const size_t nb = params.element_bytes();
  if (bytes.size() != rows * cols * nb) {
    Fail(ErrorCode::kMalformedFrame, "ring payload length mismatch");
  }
  RingTensor t(rows, cols, params);
  for (size_t i = 0; i < rows * cols; ++i) {
    uint64_t v = 0;
    for (size_t b = 0; b < nb; ++b) v |= uint64_t{bytes[i * nb + b]} << (8 * b);
    t[i] = v;
  }
  return t;
}

}  // namespace privcoll

#endif  // PRIVCOLL_RING_HPP_
