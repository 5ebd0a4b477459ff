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

#ifndef PRIVCOLL_DATA_IO_HPP_
#define PRIVCOLL_DATA_IO_HPP_

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "privcoll/error.hpp"
#include "privcoll/prg.hpp"
#include "privcoll/tensor.hpp"

namespace privcoll {

// Features and labels, one matrix per timestep. Non-sequential models use a
// single step.
struct Dataset {
  std::vector<RealMatrix> x_steps;
  std::vector<RealMatrix> y_steps;

  size_t samples() const { return x_steps.empty() ? 0 : x_steps[0].rows(); }
  size_t features() const { return x_steps.empty() ? 0 : x_steps[0].cols(); }
  size_t outputs() const { return y_steps.empty() ? 0 : y_steps[0].cols(); }
  size_t steps() const { return x_steps.size(); }
  const RealMatrix& x() const { return x_steps.at(0); }
  const RealMatrix& y() const { return y_steps.at(0); }
};

// ---------------------------------------------------------------------------
// Vertical partitioning

struct FeatureRange {
  size_t begin = 0;
  size_t end = 0;  // exclusive
  size_t width() const { return end - begin; }
  friend bool operator==(const FeatureRange&, const FeatureRange&) = default;
};

struct VerticalPartitionPlan {
  std::vector<FeatureRange> ranges;  // index l-1 for node l
  std::string label_column;          // CSV only: header name or 0-based index

  size_t parties() const { return ranges.size(); }

  // Ranges must tile [0, n) in node order with every node non-empty.
  void Validate(size_t n) const {
    if (ranges.empty()) Fail(ErrorCode::kInvalidPlan, "plan has no nodes");
    size_t cursor = 0;
    for (size_t l = 0; l < ranges.size(); ++l) {
      const auto& r = ranges[l];
      if (r.begin != cursor || r.end <= r.begin) {
        Fail(ErrorCode::kInvalidPlan,
             "node " + std::to_string(l + 1) +
                 " range must start at " + std::to_string(cursor) +
                 " and be non-empty");
      }
      cursor = r.end;
    }
    if (cursor != n) {
      Fail(ErrorCode::kInvalidPlan, "plan covers " + std::to_string(cursor) +
                                        " of " + std::to_string(n) +
                                        " features");
    }
  }
};

// Contiguous equal ranges; the remainder goes to the earliest nodes.
inline VerticalPartitionPlan DefaultPlan(size_t n, size_t parties) {
  if (parties == 0 || parties > n) {
    Fail(ErrorCode::kInvalidPlan, "cannot split " + std::to_string(n) +
                                      " features over " +
                                      std::to_string(parties) + " nodes");
  }
  VerticalPartitionPlan plan;
  size_t base = n / parties, extra = n % parties, cursor = 0;
  for (size_t l = 0; l < parties; ++l) {
    size_t w = base + (l < extra ? 1 : 0);
    plan.ranges.push_back({cursor, cursor + w});
    cursor += w;
  }
  return plan;
}

inline std::vector<RealMatrix> PartitionVertical(
    const RealMatrix& x, const VerticalPartitionPlan& plan) {
  plan.Validate(x.cols());
  std::vector<RealMatrix> slices;
  slices.reserve(plan.parties());
  for (const auto& r : plan.ranges) {
    slices.push_back(ColumnRange(x, r.begin, r.end));
  }
  return slices;
}

// Plan file: "key = value" lines, '#' comments.
//   parties = 3
//   node.1 = 0:262
//   label_column = target
inline std::string FormatPlan(const VerticalPartitionPlan& plan) {
  std::ostringstream os;
  os << "# vertical partition plan\n";
  os << "parties = " << plan.parties() << "\n";
  for (size_t l = 0; l < plan.parties(); ++l) {
    os << "node." << (l + 1) << " = " << plan.ranges[l].begin << ":"
       << plan.ranges[l].end << "\n";
  }
  if (!plan.label_column.empty()) {
    os << "label_column = " << plan.label_column << "\n";
  }
  return os.str();
}

namespace detail {

inline std::string Trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  size_t i = 0;
  while (i < s.size() && ws(s[i])) ++i;
  return s.substr(i);
}

inline size_t ParseSize(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<size_t>(v);
  } catch (const std::exception&) {
    Fail(ErrorCode::kInvalidPlan, "bad integer for " + what + ": '" + s + "'");
  }
}

}  // namespace detail

inline VerticalPartitionPlan ParsePlan(const std::string& text) {
  VerticalPartitionPlan plan;
  size_t parties = 0;
  std::vector<std::pair<size_t, FeatureRange>> nodes;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorCode::kInvalidPlan,
           "line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = detail::Trim(line.substr(0, eq));
    std::string value = detail::Trim(line.substr(eq + 1));
    if (key == "parties") {
      parties = detail::ParseSize(value, key);
    } else if (key == "label_column") {
      plan.label_column = value;
    } else if (key.rfind("node.", 0) == 0) {
      size_t id = detail::ParseSize(key.substr(5), key);
      auto colon = value.find(':');
      if (colon == std::string::npos) {
        Fail(ErrorCode::kInvalidPlan, "line " + std::to_string(lineno) +
                                          ": range must be begin:end");
      }
      nodes.push_back({id, {detail::ParseSize(value.substr(0, colon), key),
                            detail::ParseSize(value.substr(colon + 1), key)}});
    } else {
      Fail(ErrorCode::kInvalidPlan,
           "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].first != i + 1) {
      Fail(ErrorCode::kInvalidPlan, "node ids must be 1..s without gaps");
    }
    plan.ranges.push_back(nodes[i].second);
  }
  if (parties != 0 && parties != plan.ranges.size()) {
    Fail(ErrorCode::kInvalidPlan, "parties does not match node entries");
  }
  return plan;
}

// ---------------------------------------------------------------------------
// MNIST IDX

struct MnistData {
  RealMatrix images;        // m x 784, pixels scaled to [0, 1]
  std::vector<int> labels;  // m digits
  RealMatrix one_hot;       // m x 10
};

namespace detail {

inline std::vector<uint8_t> ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline uint32_t ReadBigEndian32(const std::vector<uint8_t>& b, size_t off,
                                const std::string& path) {
  if (off + 4 > b.size()) {
    Fail(ErrorCode::kTruncatedFile, path + ": header truncated");
  }
  return (uint32_t{b[off]} << 24) | (uint32_t{b[off + 1]} << 16) |
         (uint32_t{b[off + 2]} << 8) | uint32_t{b[off + 3]};
}

inline void AppendBigEndian32(std::vector<uint8_t>& out, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

}  // namespace detail

inline constexpr uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr uint32_t kIdxLabelsMagic = 0x00000801;

// Loads an IDX image/label pair. When replicate_to exceeds the native sample
// count, rows are duplicated cyclically: row i + native == row i.
inline MnistData LoadMnistIdx(const std::string& images_path,
                              const std::string& labels_path,
                              size_t replicate_to = 0) {
  auto img = detail::ReadAll(images_path);
  auto lab = detail::ReadAll(labels_path);
  if (detail::ReadBigEndian32(img, 0, images_path) != kIdxImagesMagic) {
    Fail(ErrorCode::kBadMagic, images_path + ": not an IDX3 image file");
  }
  if (detail::ReadBigEndian32(lab, 0, labels_path) != kIdxLabelsMagic) {
    Fail(ErrorCode::kBadMagic, labels_path + ": not an IDX1 label file");
  }
  const size_t count = detail::ReadBigEndian32(img, 4, images_path);
  const size_t rows = detail::ReadBigEndian32(img, 8, images_path);
  const size_t cols = detail::ReadBigEndian32(img, 12, images_path);
  const size_t label_count = detail::ReadBigEndian32(lab, 4, labels_path);
  const size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) {
    Fail(ErrorCode::kTruncatedFile, images_path + ": pixel data truncated");
  }
  if (lab.size() < 8 + label_count) {
    Fail(ErrorCode::kTruncatedFile, labels_path + ": label data truncated");
  }
  if (label_count != count) {
    Fail(ErrorCode::kTruncatedFile, "image/label counts differ");
  }
  const size_t m = std::max(count, replicate_to);
  MnistData out;
  out.images = RealMatrix(m, pixels);
  out.one_hot = RealMatrix(m, 10);
  out.labels.resize(m);
  for (size_t i = 0; i < m; ++i) {
    const size_t src = i % count;
    const uint8_t* p = img.data() + 16 + src * pixels;
    auto row = out.images.row(i);
    for (size_t j = 0; j < pixels; ++j) row[j] = p[j] / 255.0;
    const int digit = lab[8 + src];
    if (digit > 9) Fail(ErrorCode::kBadMagic, "label out of range");
    out.labels[i] = digit;
    out.one_hot(i, static_cast<size_t>(digit)) = 1.0;
  }
  return out;
}

// Writes an IDX pair from raw bytes; used by tooling and test fixtures.
inline void WriteMnistIdx(const std::string& images_path,
                          const std::string& labels_path,
                          const std::vector<uint8_t>& pixels, size_t count,
                          size_t rows, size_t cols,
                          const std::vector<uint8_t>& labels) {
  std::vector<uint8_t> img, lab;
  detail::AppendBigEndian32(img, kIdxImagesMagic);
  detail::AppendBigEndian32(img, static_cast<uint32_t>(count));
  detail::AppendBigEndian32(img, static_cast<uint32_t>(rows));
  detail::AppendBigEndian32(img, static_cast<uint32_t>(cols));
  img.insert(img.end(), pixels.begin(), pixels.end());
  detail::AppendBigEndian32(lab, kIdxLabelsMagic);
  detail::AppendBigEndian32(lab, static_cast<uint32_t>(count));
  lab.insert(lab.end(), labels.begin(), labels.end());
  std::ofstream(images_path, std::ios::binary)
      .write(reinterpret_cast<const char*>(img.data()),
             static_cast<std::streamsize>(img.size()));
  std::ofstream(labels_path, std::ios::binary)
      .write(reinterpret_cast<const char*>(lab.data()),
             static_cast<std::streamsize>(lab.size()));
}

// ---------------------------------------------------------------------------
// CSV: ',' delimiter, '.' decimal point, optional header row.

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  RealMatrix values;
};

inline CsvTable ParseCsv(const std::string& text) {
  CsvTable table;
  std::vector<double> data;
  size_t cols = 0, rows = 0, lineno = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::Trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(detail::Trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    std::vector<double> parsed;
    bool numeric = true;
    for (const auto& c : cells) {
      try {
        size_t pos = 0;
        double v = std::stod(c, &pos);
        if (pos != c.size()) numeric = false;
        parsed.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows == 0 && table.header.empty()) {
        table.header = cells;
        cols = cells.size();
        continue;
      }
      Fail(ErrorCode::kIo, "csv line " + std::to_string(lineno) +
                               ": non-numeric value");
    }
    if (cols == 0) cols = parsed.size();
    if (parsed.size() != cols) {
      Fail(ErrorCode::kIo, "csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(cols) + " columns");
    }
    data.insert(data.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  table.values = RealMatrix(rows, cols, std::move(data));
  return table;
}

inline CsvTable LoadCsv(const std::string& path) {
  auto bytes = detail::ReadAll(path);
  return ParseCsv(std::string(bytes.begin(), bytes.end()));
}

inline void WriteCsv(const std::string& path, const RealMatrix& m,
                     const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out.precision(17);
  for (size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << header[j];
  }
  if (!header.empty()) out << "\n";
  for (size_t i = 0; i < m.rows(); ++i) {
    for (size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

// Splits a table into features and a single label column, selected by
// header name or 0-based index. Empty selector means the last column.
inline Dataset CsvToDataset(const CsvTable& table, const std::string& label) {
  const size_t cols = table.values.cols();
  if (cols < 2) Fail(ErrorCode::kInvalidPlan, "csv needs >= 2 columns");
  size_t label_col = cols - 1;
  if (!label.empty()) {
    auto it = std::find(table.header.begin(), table.header.end(), label);
    if (it != table.header.end()) {
      label_col = static_cast<size_t>(it - table.header.begin());
    } else {
      label_col = detail::ParseSize(label, "label_column");
    }
    if (label_col >= cols) {
      Fail(ErrorCode::kInvalidPlan, "label column " + label + " not found");
    }
  }
  Dataset ds;
  RealMatrix x(table.values.rows(), cols - 1), y(table.values.rows(), 1);
  for (size_t i = 0; i < table.values.rows(); ++i) {
    size_t c = 0;
    for (size_t j = 0; j < cols; ++j) {
      if (j == label_col) {
        y(i, 0) = table.values(i, j);
      } else {
        x(i, c++) = table.values(i, j);
      }
    }
  }
  ds.x_steps.push_back(std::move(x));
  ds.y_steps.push_back(std::move(y));
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic data

enum class LabelModel { kLinear, kLogistic };

struct SyntheticData {
  RealMatrix x;        // m x n, rank min(r, m, n)
  RealMatrix y;        // m x k
  RealMatrix w_true;   // n x k
};

// X = A B with A: m x r, B: r x n standard normal scaled by 1/sqrt(r), so
// entries are O(1) and the rank is min(r, m, n) with probability one.
inline SyntheticData GenSynthetic(size_t m, size_t n, size_t k, size_t rank,
                                  double noise, uint64_t seed,
                                  LabelModel labels = LabelModel::kLinear) {
  Prg prg(DeriveKey(seed, Stream::kData));
  const size_t r = std::max<size_t>(1, std::min({rank, m, n}));
  RealMatrix a(m, r), b(r, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(r));
  for (double& v : a.data()) v = prg.Normal();
  for (double& v : b.data()) v = prg.Normal() * s;
  SyntheticData out;
  out.x = Matmul(a, b);
  out.w_true = RealMatrix(n, k);
  for (double& v : out.w_true.data()) v = prg.Normal();
  RealMatrix xw = Matmul(out.x, out.w_true);
  out.y = RealMatrix(m, k);
  for (size_t i = 0; i < xw.size(); ++i) {
    double z = xw.data()[i] + noise * prg.Normal();
    if (labels == LabelModel::kLinear) {
      out.y.data()[i] = z;
    } else {
      out.y.data()[i] = prg.NextUnit() < Sigmoid(z) ? 1.0 : 0.0;
    }
  }
  return out;
}

// Sequences for the recurrent model: T steps of m x n inputs and m x k
// targets in (0, 1) from a planted recurrence h_t = tanh(x_t A + h_{t-1} C).
inline Dataset GenSequences(size_t m, size_t n, size_t k, size_t steps,
                            uint64_t seed) {
  Prg prg(DeriveKey(seed, Stream::kData, {steps}));
  const size_t hidden = 3;
  RealMatrix a(n, hidden), c(hidden, hidden), out(hidden, k);
  for (double& v : a.data()) v = prg.Normal() / std::sqrt(double(n));
  for (double& v : c.data()) v = 0.5 * prg.Normal() / std::sqrt(3.0);
  for (double& v : out.data()) v = prg.Normal();
  Dataset ds;
  RealMatrix h(m, hidden);
  for (size_t t = 0; t < steps; ++t) {
    RealMatrix x(m, n);
    for (double& v : x.data()) v = prg.Normal();
    h = Tanh(Add(Matmul(x, a), Matmul(h, c)));
    ds.x_steps.push_back(std::move(x));
    ds.y_steps.push_back(Sigmoid(Matmul(h, out)));
  }
  return ds;
}

// Slices every step's features by the plan: result[l][t] = X^{l(t)}.
inline std::vector<std::vector<RealMatrix>> PartitionSteps(
    const Dataset& ds, const VerticalPartitionPlan& plan) {
  std::vector<std::vector<RealMatrix>> out(plan.parties());
  for (const auto& x : ds.x_steps) {
    auto slices = PartitionVertical(x, plan);
    for (size_t l = 0; l < slices.size(); ++l) {
      out[l].push_back(std::move(slices[l]));
    }
  }
  return out;
}

}  // namespace privcoll

#endif  // PRIVCOLL_DATA_IO_HPP_
