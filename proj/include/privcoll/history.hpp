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

#ifndef PRIVCOLL_HISTORY_HPP_
#define PRIVCOLL_HISTORY_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privcoll/error.hpp"
#include "privcoll/params.hpp"
#include "privcoll/protocol.hpp"

namespace privcoll {

// One JSON object per line. Everything outside "timing" is deterministic
// for a fixed seed and config.
inline nlohmann::ordered_json ReportToJson(const IterationReport& r,
                                           bool with_timing = true) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["bytes_sent"] = r.bytes_sent;
  j["step2_bytes"] = r.step2_bytes;
  if (with_timing) {
    j["timing"] = {{"wall_s", r.wall_s},
                   {"collect_s", r.collect_s},
                   {"delta_s", r.delta_s},
                   {"agg_compute_s", r.agg_compute_s},
                   {"node_compute_s", r.node_compute_s},
                   {"comm_s", r.comm_s}};
  }
  return j;
}

inline std::string HistoryToJsonl(const std::vector<IterationReport>& h,
                                  bool with_timing = true) {
  std::string out;
  for (const auto& r : h) {
    out += ReportToJson(r, with_timing).dump();
    out += '\n';
  }
  return out;
}

inline void WriteHistory(const std::string& path,
                         const std::vector<IterationReport>& h) {
  std::ofstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot write " + path);
  f << HistoryToJsonl(h);
}

// Drops the "timing" member of every record of a history file's text.
inline std::string StripTiming(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::ordered_json::parse(line);
    j.erase("timing");
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline nlohmann::ordered_json MatrixToJson(const RealMatrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline RealMatrix MatrixFromJson(const nlohmann::ordered_json& j) {
  RealMatrix m(j.at("rows").get<size_t>(), j.at("cols").get<size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) Fail(ErrorCode::kIo, "matrix size mismatch");
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

// Final model file: the concatenated coefficients plus aggregator state.
inline nlohmann::ordered_json ParamsToJson(const ModelParams& p) {
  nlohmann::ordered_json j;
  j["kind"] = ModelKindName(p.kind);
  j["w"] = MatrixToJson(p.w);
  if (p.kind == ModelKind::kRnn) {
    j["u"] = MatrixToJson(p.u);
    j["v"] = MatrixToJson(p.v);
    j["b_h"] = MatrixToJson(p.b_h);
    j["b_y"] = MatrixToJson(p.b_y);
  } else {
    j["shared_bias"] = MatrixToJson(p.head.shared_bias);
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& l : p.head.layers) {
      j["layers"].push_back(
          {{"weights", MatrixToJson(l.weights)}, {"bias", MatrixToJson(l.bias)}});
    }
  }
  return j;
}

}  // namespace privcoll

#endif  // PRIVCOLL_HISTORY_HPP_
