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

#ifndef PRIVCOLL_CONFIG_HPP_
#define PRIVCOLL_CONFIG_HPP_

#include <chrono>
#include <filesystem>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "privcoll/data_io.hpp"
#include "privcoll/error.hpp"
#include "privcoll/model.hpp"
#include "privcoll/ring.hpp"
#include "privcoll/transport.hpp"

namespace privcoll {

enum class TransportMode { kInProcess, kTcp };

// Where the training data comes from. Every party loads the same source and
// keeps only what it owns: nodes their feature slice, the aggregator y.
struct DataSpec {
  std::string kind = "synthetic";  // synthetic | sequences | csv | mnist
  size_t samples = 1000;
  size_t features = 30;
  size_t outputs = 1;
  size_t rank = 0;                 // 0: full rank
  size_t steps = 3;                // sequences only
  double noise = 0.1;
  uint64_t seed = 0;               // 0: use the training seed
  std::string path;                // csv file or IDX images
  std::string labels;              // IDX labels
  std::string label_column;        // csv
  size_t replicate_to = 0;         // mnist duplication target
  size_t limit = 0;                // keep the first N samples (0: all)
  std::string plan;                // partition plan file (default: even)
};

struct TrainingConfig {
  ModelSpec model;
  double alpha = 0.01;
  size_t batch_size = 0;     // 0: 150 for the feed-forward model, else 40
  size_t max_epochs = 10;
  size_t max_iterations = 0;  // 0: no cap beyond max_epochs
  double tol = 1e-8;
  size_t patience = 5;
  uint64_t seed = 1;
  RingParams ring;
  size_t parties = 3;         // s local nodes
  size_t adversary_t = 0;     // analysis parameter, must satisfy t < s-1
  TransportMode transport = TransportMode::kInProcess;
  bool plaintext = false;     // INSECURE: oracle tests only
  NetProfile profile;
  std::string profile_name = "lan";
  std::chrono::milliseconds timeout{30000};
  std::vector<std::string> addresses;  // index 0: aggregator
  DataSpec data;

  uint64_t data_seed() const { return data.seed ? data.seed : seed; }

  size_t effective_batch() const {
    if (batch_size) return batch_size;
    return model.kind == ModelKind::kFeedForward ? 150 : 40;
  }

  void Validate() const {
    model.Validate();
    ring.Validate();
    profile.Validate();
    if (parties < 1) Fail(ErrorCode::kConfig, "parties must be >= 1");
    if (parties < 2 && !plaintext) {
      Fail(ErrorCode::kInvalidPartyCount,
           "secret sharing needs at least 2 local nodes");
    }
    if (alpha < 0) Fail(ErrorCode::kConfig, "alpha must be >= 0");
    if (transport == TransportMode::kTcp && addresses.size() != parties + 1) {
      Fail(ErrorCode::kConfig, "tcp transport needs address.0..address." +
                                   std::to_string(parties));
    }
  }

  // Non-fatal findings; t is an analysis parameter, not enforced at runtime.
  std::vector<std::string> Warnings() const {
    std::vector<std::string> w;
    if (parties >= 1 && adversary_t + 1 >= parties) {
      w.push_back("adversary_t=" + std::to_string(adversary_t) +
                  " violates t < s-1 for s=" + std::to_string(parties) +
                  "; the privacy analysis does not cover this setting");
    }
    if (plaintext) {
      w.push_back("plaintext mode: X^lW^l travels unshared (INSECURE, oracle "
                  "testing only)");
    }
    return w;
  }

  // Digest of everything the parties must agree on; checked at handshake.
  uint64_t Fingerprint() const {
    std::ostringstream os;
    os << ModelKindName(model.kind) << '|' << model.outputs << '|';
    for (size_t h : model.hidden_layers) os << h << ',';
    os << '|' << model.rnn_hidden << '|' << model.fit_bias << '|'
       << model.lambda << '|' << alpha << '|' << effective_batch() << '|'
       << max_epochs << '|' << max_iterations << '|' << seed << '|'
       << ring.width << '|' << ring.frac_bits << '|' << parties << '|'
       << plaintext << '|' << data.kind << '|' << data.samples;
    uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : os.str()) h = (h ^ c) * 1099511628211ULL;
    return h;
  }
};

namespace config_detail {

[[noreturn]] inline void FieldError(size_t line, const std::string& key,
                                    const std::string& msg) {
  Fail(ErrorCode::kConfig, "line " + std::to_string(line) + ": field '" + key +
                               "': " + msg);
}

inline bool ParseBool(const std::string& v, size_t line, const std::string& k) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  FieldError(line, k, "expected true/false, got '" + v + "'");
}

inline uint64_t ParseUint(const std::string& v, size_t line,
                          const std::string& k) {
  try {
    size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    FieldError(line, k, "expected a non-negative integer, got '" + v + "'");
  }
}

inline double ParseReal(const std::string& v, size_t line,
                        const std::string& k) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    FieldError(line, k, "expected a number, got '" + v + "'");
  }
}

inline Activation ParseActivation(const std::string& v, size_t line,
                                  const std::string& k) {
  if (v == "sigmoid") return Activation::kSigmoid;
  if (v == "softmax") return Activation::kSoftmax;
  if (v == "tanh") return Activation::kTanh;
  if (v == "identity") return Activation::kIdentity;
  FieldError(line, k, "unknown activation '" + v + "'");
}

}  // namespace config_detail

// Applies one key = value pair. Shared by the file parser and CLI overrides.
inline void ApplyConfigKey(TrainingConfig& cfg, const std::string& key,
                           const std::string& value, size_t line = 0) {
  using namespace config_detail;
  const auto& k = key;
  const auto& v = value;
  auto u = [&] { return ParseUint(v, line, k); };
  auto r = [&] { return ParseReal(v, line, k); };
  if (k == "model") {
    if (v == "linear") cfg.model.kind = ModelKind::kLinear;
    else if (v == "logistic") cfg.model.kind = ModelKind::kLogistic;
    else if (v == "nn") cfg.model.kind = ModelKind::kFeedForward;
    else if (v == "rnn") cfg.model.kind = ModelKind::kRnn;
    else FieldError(line, k, "expected linear|logistic|nn|rnn, got '" + v + "'");
  } else if (k == "outputs") {
    cfg.model.outputs = u();
  } else if (k == "hidden_layers") {
    cfg.model.hidden_layers.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      cfg.model.hidden_layers.push_back(ParseUint(detail::Trim(item), line, k));
    }
  } else if (k == "hidden_activation") {
    cfg.model.hidden_activation = ParseActivation(v, line, k);
  } else if (k == "output_activation") {
    cfg.model.output_activation = ParseActivation(v, line, k);
  } else if (k == "lambda") {
    cfg.model.lambda = r();
  } else if (k == "fit_bias") {
    cfg.model.fit_bias = ParseBool(v, line, k);
  } else if (k == "rnn.hidden") {
    cfg.model.rnn_hidden = u();
  } else if (k == "alpha") {
    cfg.alpha = r();
  } else if (k == "batch_size") {
    cfg.batch_size = u();
  } else if (k == "max_epochs") {
    cfg.max_epochs = u();
  } else if (k == "max_iterations") {
    cfg.max_iterations = u();
  } else if (k == "tol") {
    cfg.tol = r();
  } else if (k == "patience") {
    cfg.patience = u();
  } else if (k == "seed") {
    cfg.seed = u();
  } else if (k == "ring.width") {
    cfg.ring.width = static_cast<unsigned>(u());
  } else if (k == "ring.frac_bits") {
    cfg.ring.frac_bits = static_cast<unsigned>(u());
  } else if (k == "parties") {
    cfg.parties = u();
  } else if (k == "adversary_t") {
    cfg.adversary_t = u();
  } else if (k == "transport") {
    if (v == "in_process") cfg.transport = TransportMode::kInProcess;
    else if (v == "tcp") cfg.transport = TransportMode::kTcp;
    else FieldError(line, k, "expected in_process|tcp, got '" + v + "'");
  } else if (k == "plaintext") {
    cfg.plaintext = ParseBool(v, line, k);
  } else if (k == "profile") {
    if (v == "lan") cfg.profile = NetProfile::Lan();
    else if (v == "wan") cfg.profile = NetProfile::Wan();
    else if (v != "custom") FieldError(line, k, "expected lan|wan|custom");
    cfg.profile_name = v;
  } else if (k == "latency_ms") {
    cfg.profile.latency_ms = r();
  } else if (k == "throughput_bps") {
    cfg.profile.throughput_bytes_per_s = r();
  } else if (k == "timeout_ms") {
    cfg.timeout = std::chrono::milliseconds(u());
  } else if (k.rfind("address.", 0) == 0) {
    size_t idx = ParseUint(k.substr(8), line, k);
    if (cfg.addresses.size() <= idx) cfg.addresses.resize(idx + 1);
    cfg.addresses[idx] = v;
  } else if (k == "data.kind") {
    if (v != "synthetic" && v != "sequences" && v != "csv" && v != "mnist") {
      FieldError(line, k, "expected synthetic|sequences|csv|mnist");
    }
    cfg.data.kind = v;
  } else if (k == "data.samples") {
    cfg.data.samples = u();
  } else if (k == "data.features") {
    cfg.data.features = u();
  } else if (k == "data.outputs") {
    cfg.data.outputs = u();
  } else if (k == "data.rank") {
    cfg.data.rank = u();
  } else if (k == "data.steps") {
    cfg.data.steps = u();
  } else if (k == "data.noise") {
    cfg.data.noise = r();
  } else if (k == "data.seed") {
    cfg.data.seed = u();
  } else if (k == "data.path") {
    cfg.data.path = v;
  } else if (k == "data.labels") {
    cfg.data.labels = v;
  } else if (k == "data.label_column") {
    cfg.data.label_column = v;
  } else if (k == "data.replicate_to") {
    cfg.data.replicate_to = u();
  } else if (k == "data.limit") {
    cfg.data.limit = u();
  } else if (k == "data.plan") {
    cfg.data.plan = v;
  } else {
    FieldError(line, k, "unknown key");
  }
}

// "key = value" per line, '#' starts a comment, UTF-8.
inline TrainingConfig ParseConfig(const std::string& text,
                                  const std::string& base_dir = "") {
  TrainingConfig cfg;
  std::istringstream in(text);
  std::string raw;
  size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorCode::kConfig, "line " + std::to_string(lineno) +
                                   ": expected 'key = value', got '" + line +
                                   "'");
    }
    std::string key = detail::Trim(line.substr(0, eq));
    std::string value = detail::Trim(line.substr(eq + 1));
    if (key.empty()) {
      Fail(ErrorCode::kConfig, "line " + std::to_string(lineno) + ": empty key");
    }
    ApplyConfigKey(cfg, key, value, lineno);
  }
  // Relative data paths resolve against the config file's directory.
  auto resolve = [&](std::string& p) {
    if (!p.empty() && p[0] != '/' && !base_dir.empty()) {
      p = (std::filesystem::path(base_dir) / p).lexically_normal().string();
    }
  };
  resolve(cfg.data.path);
  resolve(cfg.data.labels);
  resolve(cfg.data.plan);
  return cfg;
}

inline TrainingConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kConfig, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  // Absolute base so resolved paths survive being written back out.
  auto base = std::filesystem::absolute(path).parent_path().lexically_normal();
  return ParseConfig(ss.str(), base.string());
}

namespace config_detail {

inline const char* ActivationName(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

}  // namespace config_detail

// Inverse of ParseConfig: every key, one per line. Round-trips exactly
// (reals are printed with 17 significant digits).
inline std::string FormatConfig(const TrainingConfig& cfg) {
  using config_detail::ActivationName;
  std::ostringstream os;
  os.precision(17);
  os << "model = " << ModelKindName(cfg.model.kind) << "\n";
  os << "outputs = " << cfg.model.outputs << "\n";
  if (!cfg.model.hidden_layers.empty()) {
    os << "hidden_layers = ";
    for (size_t i = 0; i < cfg.model.hidden_layers.size(); ++i) {
      os << (i ? "," : "") << cfg.model.hidden_layers[i];
    }
    os << "\n";
  }
  os << "hidden_activation = " << ActivationName(cfg.model.hidden_activation)
     << "\n";
  os << "output_activation = " << ActivationName(cfg.model.output_activation)
     << "\n";
  os << "lambda = " << cfg.model.lambda << "\n";
  os << "fit_bias = " << (cfg.model.fit_bias ? "true" : "false") << "\n";
  os << "rnn.hidden = " << cfg.model.rnn_hidden << "\n";
  os << "alpha = " << cfg.alpha << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "max_epochs = " << cfg.max_epochs << "\n";
  os << "max_iterations = " << cfg.max_iterations << "\n";
  os << "tol = " << cfg.tol << "\n";
  os << "patience = " << cfg.patience << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "ring.width = " << cfg.ring.width << "\n";
  os << "ring.frac_bits = " << cfg.ring.frac_bits << "\n";
  os << "parties = " << cfg.parties << "\n";
  os << "adversary_t = " << cfg.adversary_t << "\n";
  os << "transport = "
     << (cfg.transport == TransportMode::kTcp ? "tcp" : "in_process") << "\n";
  os << "plaintext = " << (cfg.plaintext ? "true" : "false") << "\n";
  os << "profile = " << cfg.profile_name << "\n";
  os << "latency_ms = " << cfg.profile.latency_ms << "\n";
  os << "throughput_bps = " << cfg.profile.throughput_bytes_per_s << "\n";
  os << "timeout_ms = " << cfg.timeout.count() << "\n";
  for (size_t i = 0; i < cfg.addresses.size(); ++i) {
    if (!cfg.addresses[i].empty()) {
      os << "address." << i << " = " << cfg.addresses[i] << "\n";
    }
  }
  const DataSpec& d = cfg.data;
  os << "data.kind = " << d.kind << "\n";
  os << "data.samples = " << d.samples << "\n";
  os << "data.features = " << d.features << "\n";
  os << "data.outputs = " << d.outputs << "\n";
  os << "data.rank = " << d.rank << "\n";
  os << "data.steps = " << d.steps << "\n";
  os << "data.noise = " << d.noise << "\n";
  os << "data.seed = " << d.seed << "\n";
  if (!d.path.empty()) os << "data.path = " << d.path << "\n";
  if (!d.labels.empty()) os << "data.labels = " << d.labels << "\n";
  if (!d.label_column.empty()) {
    os << "data.label_column = " << d.label_column << "\n";
  }
  os << "data.replicate_to = " << d.replicate_to << "\n";
  os << "data.limit = " << d.limit << "\n";
  if (!d.plan.empty()) os << "data.plan = " << d.plan << "\n";
  return os.str();
}

// Materializes the configured dataset and fills in data-dependent model
// fields (outputs). Every party calls this with the same config.
inline Dataset LoadDataset(TrainingConfig& cfg) {
  const DataSpec& d = cfg.data;
  Dataset ds;
  if (d.kind == "synthetic") {
    LabelModel labels = cfg.model.kind == ModelKind::kLinear
                            ? LabelModel::kLinear
                            : LabelModel::kLogistic;
    auto syn = GenSynthetic(d.samples, d.features, d.outputs,
                            d.rank ? d.rank : d.features, d.noise,
                            cfg.data_seed(), labels);
    ds.x_steps.push_back(std::move(syn.x));
    ds.y_steps.push_back(std::move(syn.y));
  } else if (d.kind == "sequences") {
    ds = GenSequences(d.samples, d.features, d.outputs, d.steps,
                      cfg.data_seed());
  } else if (d.kind == "csv") {
    ds = CsvToDataset(LoadCsv(d.path), d.label_column);
  } else if (d.kind == "mnist") {
    auto mn = LoadMnistIdx(d.path, d.labels, d.replicate_to);
    ds.x_steps.push_back(std::move(mn.images));
    ds.y_steps.push_back(std::move(mn.one_hot));
  }
  if (d.limit && d.limit < ds.samples()) {
    for (auto& x : ds.x_steps) x = RowRange(x, 0, d.limit);
    for (auto& y : ds.y_steps) y = RowRange(y, 0, d.limit);
  }
  cfg.model.outputs = ds.outputs();
  return ds;
}

inline VerticalPartitionPlan ResolvePlan(const TrainingConfig& cfg,
                                         size_t features) {
  VerticalPartitionPlan plan;
  if (!cfg.data.plan.empty()) {
    std::ifstream in(cfg.data.plan);
    if (!in) Fail(ErrorCode::kInvalidPlan, "cannot read " + cfg.data.plan);
    std::stringstream ss;
    ss << in.rdbuf();
    plan = ParsePlan(ss.str());
  } else {
    plan = DefaultPlan(features, cfg.parties);
  }
  if (plan.parties() != cfg.parties) {
    Fail(ErrorCode::kInvalidPlan, "plan has " + std::to_string(plan.parties()) +
                                      " nodes, config has " +
                                      std::to_string(cfg.parties));
  }
  plan.Validate(features);
  return plan;
}

}  // namespace privcoll

#endif  // PRIVCOLL_CONFIG_HPP_
