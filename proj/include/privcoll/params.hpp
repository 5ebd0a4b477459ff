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

#ifndef PRIVCOLL_PARAMS_HPP_
#define PRIVCOLL_PARAMS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "privcoll/model.hpp"
#include "privcoll/rnn.hpp"
#include "privcoll/tensor.hpp"

namespace privcoll {

// Complete parameter set of a model, distributed or centralized. `w` is the
// vertical concatenation of every node's coefficient block in feature order.
struct ModelParams {
  ModelKind kind = ModelKind::kLinear;
  RealMatrix w;
  ModelHead head;    // non-recurrent models
  RealMatrix u, v;   // recurrent only
  RealMatrix b_h, b_y;
};

// Row-major flattening in a fixed order: w, then the head (shared bias,
// then each layer's weights and bias) or, for the recurrent model, U, V,
// b_h, b_y.
inline std::vector<double> FlattenParams(const ModelParams& p) {
  std::vector<double> out;
  auto put = [&](const RealMatrix& m) {
    out.insert(out.end(), m.data().begin(), m.data().end());
  };
  put(p.w);
  if (p.kind == ModelKind::kRnn) {
    put(p.u);
    put(p.v);
    put(p.b_h);
    put(p.b_y);
  } else {
    put(p.head.shared_bias);
    for (const auto& layer : p.head.layers) {
      put(layer.weights);
      put(layer.bias);
    }
  }
  return out;
}

inline ModelParams MakeParams(ModelKind kind, RealMatrix w,
                              const ModelHead& head) {
  ModelParams p;
  p.kind = kind;
  p.w = std::move(w);
  p.head = head;
  return p;
}

inline ModelParams MakeRnnParams(RealMatrix w, const RnnAggState& agg) {
  ModelParams p;
  p.kind = ModelKind::kRnn;
  p.w = std::move(w);
  p.u = agg.u;
  p.v = agg.v;
  p.b_h = agg.b_h;
  p.b_y = agg.b_y;
  return p;
}

// Largest elementwise gap between two flattened parameter vectors; infinity
// if their layouts differ.
inline double MaxParamDiff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace privcoll

#endif  // PRIVCOLL_PARAMS_HPP_
