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

#ifndef PRIVCOLL_AUDIT_HPP_
#define PRIVCOLL_AUDIT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "privcoll/config.hpp"
#include "privcoll/data_io.hpp"
#include "privcoll/error.hpp"
#include "privcoll/protocol.hpp"
#include "privcoll/ring.hpp"
#include "privcoll/sharing.hpp"
#include "privcoll/tensor.hpp"

namespace privcoll {

namespace audit_detail {

inline Eigen::MatrixXd ToEigen(const RealMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (size_t i = 0; i < m.rows(); ++i) {
    for (size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  }
  return e;
}

inline RealMatrix FromEigen(const Eigen::MatrixXd& e) {
  RealMatrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  }
  return m;
}

}  // namespace audit_detail

// log10 of the bound 1/r!. r = 1 gives 0 (a vacuous bound).
inline double EpsilonBoundLog10(size_t r) {
  if (r < 1) Fail(ErrorCode::kConfig, "epsilon bound needs rank >= 1");
  return -std::lgamma(static_cast<double>(r) + 1.0) / std::log(10.0);
}

// Singular values above rank_tol * sigma_max. rank_tol <= 0 selects the
// default 1e-8 * max(m, n).
inline size_t NumericalRank(const RealMatrix& x, double rank_tol = 0.0) {
  if (x.empty()) Fail(ErrorCode::kShapeMismatch, "rank of an empty matrix");
  if (rank_tol <= 0) {
    rank_tol = 1e-8 * static_cast<double>(std::max(x.rows(), x.cols()));
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(audit_detail::ToEigen(x));
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rank_tol * sv(0);
  size_t r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > cut ? 1 : 0;
  return r;
}

// Spectral decomposition of a symmetric PSD A = B B^T.
struct EigenAnalysis {
  RealMatrix a;
  std::vector<double> eigenvalues;  // descending
  RealMatrix eigenvectors;          // columns match eigenvalues
  size_t rank = 0;
};

inline EigenAnalysis AnalyzeGram(const RealMatrix& a, double rank_tol = 1e-9) {
  if (a.rows() != a.cols() || a.empty()) {
    Fail(ErrorCode::kShapeMismatch, "gram matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(audit_detail::ToEigen(a));
  const Eigen::Index n = es.eigenvalues().size();
  EigenAnalysis out;
  out.a = a;
  Eigen::MatrixXd vecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {  // Eigen sorts ascending
    out.eigenvalues.push_back(es.eigenvalues()(n - 1 - i));
    vecs.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  out.eigenvectors = audit_detail::FromEigen(vecs);
  const double top = std::max(0.0, out.eigenvalues.front());
  for (double v : out.eigenvalues) out.rank += v > rank_tol * top ? 1 : 0;
  return out;
}

// Smallest eigenvalue relative to the largest magnitude; PSD up to
// tolerance when >= -tol.
inline bool IsPsd(const RealMatrix& a, double tol = 1e-9) {
  EigenAnalysis e = AnalyzeGram(a);
  double scale = 0.0;
  for (double v : e.eigenvalues) scale = std::max(scale, std::abs(v));
  return e.eigenvalues.back() >= -tol * std::max(scale, 1e-300);
}

struct ReconstructionCheck {
  uint64_t count = 0;        // orderings enumerated
  double log10_count = 0.0;  // log10 r!
  double max_error = 0.0;    // max over orderings of |B'B'^T - A|_max
};

// Enumerates every column ordering of U_r Lambda_r^{1/2} (r <= 4) and checks
// each reproduces A. For larger r only the count is reported.
inline ReconstructionCheck EigenReconstructions(const EigenAnalysis& e,
                                                size_t r) {
  ReconstructionCheck out;
  out.log10_count = std::lgamma(static_cast<double>(r) + 1.0) / std::log(10.0);
  if (r > 4) {
    out.count = 0;
    return out;
  }
  const size_t m = e.a.rows();
  RealMatrix base(m, r);
  for (size_t j = 0; j < r; ++j) {
    const double s = std::sqrt(std::max(0.0, e.eigenvalues[j]));
    for (size_t i = 0; i < m; ++i) base(i, j) = e.eigenvectors(i, j) * s;
  }
  std::vector<size_t> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    RealMatrix b(m, r);
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < r; ++j) b(i, j) = base(i, perm[j]);
    }
    out.max_error = std::max(
        out.max_error, MaxAbsDiff(MatmulTransposedRight(b, b), e.a));
    ++out.count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Party knowledge

// Adversary set: 0 denotes the aggregator, 1..s the local nodes.
using AdversarySet = std::set<int>;

inline AdversarySet ParseAdversarySet(const std::string& text, size_t s) {
  AdversarySet out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::Trim(item);
    if (item.empty()) continue;
    if (item == "agg" || item == "Agg" || item == "0") {
      out.insert(0);
      continue;
    }
    size_t id = detail::ParseSize(item, "adversary member");
    if (id < 1 || id > s) {
      Fail(ErrorCode::kInvalidAdversarySet,
           "adversary member " + item + " outside 1.." + std::to_string(s));
    }
    out.insert(static_cast<int>(id));
  }
  return out;
}

inline size_t CorruptNodes(const AdversarySet& adv) {
  return static_cast<size_t>(std::count_if(adv.begin(), adv.end(),
                                           [](int p) { return p > 0; }));
}

inline bool WithinProvenRegime(const AdversarySet& adv, size_t s) {
  return CorruptNodes(adv) + 1 < s;
}

struct PartyKnowledge {
  AdversarySet adversary;
  std::vector<int> honest;       // nodes outside the adversary set
  RealMatrix z1;                 // sum over honest of X^l W^l, m x k
  RealMatrix z2;                 // sum over honest of X^l X^l^T, m x m
  RealMatrix z3;                 // X X^T, m x m
  RealMatrix xw;                 // X W (only when Agg is corrupt)
  std::vector<RealMatrix> own_x, own_w;  // corrupt nodes' inputs
  bool knows_xw = false;
};

// Materializes exactly the adversary's knowledge from node slices and
// coefficients (node order).
inline PartyKnowledge BuildPartyKnowledge(const std::vector<RealMatrix>& x,
                                          const std::vector<RealMatrix>& w,
                                          const AdversarySet& adv) {
  const size_t s = x.size();
  if (w.size() != s || s == 0) {
    Fail(ErrorCode::kShapeMismatch, "need one X^l and W^l per node");
  }
  if (CorruptNodes(adv) + 1 >= s) {
    Fail(ErrorCode::kInvalidAdversarySet,
         std::to_string(CorruptNodes(adv)) + " corrupt nodes of s=" +
             std::to_string(s) + " is outside t < s-1");
  }
  PartyKnowledge k;
  k.adversary = adv;
  const size_t m = x[0].rows();
  k.z1 = RealMatrix(m, w[0].cols());
  k.z2 = RealMatrix(m, m);
  RealMatrix full = HorizontalConcat(x);
  k.z3 = MatmulTransposedRight(full, full);
  RealMatrix xw(m, w[0].cols());
  for (size_t l = 0; l < s; ++l) {
    RealMatrix p = Matmul(x[l], w[l]);
    AddInPlace(xw, p);
    const int id = static_cast<int>(l + 1);
    if (adv.count(id)) {
      k.own_x.push_back(x[l]);
      k.own_w.push_back(w[l]);
    } else {
      k.honest.push_back(id);
      AddInPlace(k.z1, p);
      AddInPlace(k.z2, MatmulTransposedRight(x[l], x[l]));
    }
  }
  if (adv.count(0)) {
    k.knows_xw = true;
    k.xw = std::move(xw);
  }
  return k;
}

// ---------------------------------------------------------------------------
// SIM / REAL for linear regression

struct SimRealResult {
  std::vector<double> deviation;  // per iteration, max |Sigma_SIM - Sigma_REAL|
  double max_deviation = 0.0;
};

// REAL runs the full protocol (plaintext, full batch, no bias) and records
// Sigma(i) = sum_l X^l W^l(i) - y. SIM replaces every party outside I0 by
// the recursion mu^l(i) = mu^l(i-1) - (alpha/m) z2^l Delta(i-1); parties in
// I0 run their own update. When `with_xw` is set the I1 simulator is used
// instead: mu(i) = XW(i-1) - (alpha/m) z3 Delta(i-1). Delta = Sigma for
// f(x) = x; the 1/m of the mean loss is the alpha/m factor.
inline SimRealResult SimRealCheck(TrainingConfig cfg, const Dataset& data,
                                  size_t iterations, const AdversarySet& i0,
                                  bool with_xw) {
  if (cfg.model.kind != ModelKind::kLinear) {
    Fail(ErrorCode::kConfig, "SIM/REAL is instantiated for linear regression");
  }
  cfg.model.fit_bias = false;
  cfg.model.lambda = 0.0;
  cfg.plaintext = true;
  cfg.batch_size = data.samples();
  cfg.max_epochs = iterations;
  cfg.max_iterations = iterations;
  cfg.tol = -1.0;  // never stop early
  const double m = static_cast<double>(data.samples());
  const double step = cfg.alpha / m;

  Simulation sim(cfg, data);
  auto x = PartitionVertical(data.x(), sim.plan());
  const RealMatrix& y = data.y();
  const size_t s = x.size();

  auto node_product = [&](size_t l) {
    return Matmul(x[l], sim.node(l + 1).weights());
  };
  // mu^l(0) is seeded with the honest nodes' X^l W^l(0), so SIM_0 and
  // REAL_0 coincide.
  std::vector<RealMatrix> mu;
  for (size_t l = 0; l < s; ++l) mu.push_back(node_product(l));
  std::vector<RealMatrix> z2;
  for (size_t l = 0; l < s; ++l) z2.push_back(MatmulTransposedRight(x[l], x[l]));
  RealMatrix z3;
  if (with_xw) {
    RealMatrix full = HorizontalConcat(x);
    z3 = MatmulTransposedRight(full, full);
  }
  RealMatrix mu_total = mu[0];
  for (size_t l = 1; l < s; ++l) AddInPlace(mu_total, mu[l]);

  SimRealResult out;
  RealMatrix prev_sigma;
  for (size_t i = 0; i < iterations; ++i) {
    // REAL.
    RealMatrix real = node_product(0);
    for (size_t l = 1; l < s; ++l) AddInPlace(real, node_product(l));
    RealMatrix real_sigma = Sub(real, y);

    // SIM.
    RealMatrix sim_sigma;
    if (with_xw) {
      if (i > 0) {
        mu_total = Sub(mu_total, Scale(Matmul(z3, prev_sigma), step));
      }
      sim_sigma = Sub(mu_total, y);
    } else {
      RealMatrix total;
      for (size_t l = 0; l < s; ++l) {
        if (i > 0) {
          if (i0.count(static_cast<int>(l + 1))) {
            mu[l] = node_product(l);  // own input, own update
          } else {
            mu[l] = Sub(mu[l], Scale(Matmul(z2[l], prev_sigma), step));
          }
        }
        if (l == 0) {
          total = mu[0];
        } else {
          AddInPlace(total, mu[l]);
        }
      }
      sim_sigma = Sub(total, y);
    }
    const double dev = MaxAbsDiff(sim_sigma, real_sigma);
    out.deviation.push_back(dev);
    out.max_deviation = std::max(out.max_deviation, dev);
    prev_sigma = std::move(sim_sigma);
    if (i + 1 < iterations) sim.RunIteration();
  }
  sim.Stop();
  return out;
}

// ---------------------------------------------------------------------------
// Collusion boundary

struct CollusionOutcome {
  std::vector<int> honest;
  RingTensor recovered;  // total minus the colluders' own secrets
  bool succeeded = false;
};

// Colluders (node ids) join the aggregator, who knows the total. With a
// single honest node the subtraction returns its secret exactly.
inline CollusionOutcome CollusionDemo(const ShareRoundTranscript& t,
                                      const std::set<int>& colluders) {
  const size_t s = t.secrets.size();
  CollusionOutcome out;
  out.recovered = t.total;
  for (size_t l = 0; l < s; ++l) {
    const int id = static_cast<int>(l + 1);
    if (colluders.count(id)) {
      out.recovered = RingSub(out.recovered, t.secrets[l]);
    } else {
      out.honest.push_back(id);
    }
  }
  out.succeeded = out.honest.size() == 1 &&
                  out.recovered == t.secrets[out.honest[0] - 1];
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct AuditReport {
  size_t parties = 0;
  AdversarySet adversary;
  bool within_regime = false;
  size_t rank = 0;               // rank of the honest nodes' X^H
  double log10_epsilon = 0.0;
  std::vector<std::pair<std::string, std::string>> knowledge_shapes;
  bool z2_psd = false, z3_psd = false;
  bool reconstruction_ok = true;
  size_t reconstruction_rank = 0;
  uint64_t reconstruction_count = 0;
  double reconstruction_error = 0.0;
  bool sim_real_run = false;
  double sim_real_deviation = 0.0;
  bool collusion_succeeded = false;   // S1..S(s-1) + Agg against S(s)
  bool adversary_recovered = false;   // the configured adversary set
  std::string notes;

  bool passed() const {
    return z2_psd && z3_psd && reconstruction_ok &&
           (!sim_real_run || sim_real_deviation <= 1e-6);
  }
};

inline std::string FormatAuditReport(const AuditReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "parties: " << r.parties << "\n";
  os << "adversary:";
  for (int p : r.adversary) os << ' ' << (p == 0 ? std::string("Agg") : "S" + std::to_string(p));
  os << "\n";
  os << "regime: "
     << (r.within_regime ? "within proven regime (t < s-1)"
                         : "outside proven regime (t >= s-1)")
     << "\n";
  os << "rank_r: " << r.rank << "\n";
  os << "log10_epsilon: " << r.log10_epsilon << "\n";
  for (const auto& [name, shape] : r.knowledge_shapes) {
    os << "knowledge." << name << ": " << shape << "\n";
  }
  os << "z2_psd: " << (r.z2_psd ? "yes" : "no") << "\n";
  os << "z3_psd: " << (r.z3_psd ? "yes" : "no") << "\n";
  os << "eigen_reconstructions: rank " << r.reconstruction_rank << ", "
     << r.reconstruction_count << " orderings, max error "
     << r.reconstruction_error << "\n";
  if (r.sim_real_run) {
    os << "sim_real_max_deviation: " << r.sim_real_deviation << "\n";
  } else {
    os << "sim_real_max_deviation: not run (linear regression only)\n";
  }
  os << "collusion_demo (S1..S" << (r.parties - 1) << " + Agg vs S"
     << r.parties << "): "
     << (r.collusion_succeeded ? "recovery succeeded" : "recovery impossible")
     << "\n";
  os << "adversary_recovery: "
     << (r.adversary_recovered ? "recovery succeeded" : "recovery impossible")
     << "\n";
  if (!r.notes.empty()) os << "notes: " << r.notes << "\n";
  os << "status: " << (r.passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

// Full audit of a configured run: rank and bound from the honest columns,
// knowledge set, PSD checks, eigen reconstructions on a small Gram matrix,
// SIM/REAL on a <= 50-sample linear slice, and the s-1 collusion demo on
// the final node products.
inline AuditReport RunAudit(const TrainingConfig& cfg, const Dataset& data,
                            const std::vector<RealMatrix>& node_weights,
                            const AdversarySet& adv) {
  AuditReport rep;
  rep.parties = cfg.parties;
  rep.adversary = adv;
  rep.within_regime = WithinProvenRegime(adv, cfg.parties);
  auto plan = ResolvePlan(cfg, data.features());
  auto x = PartitionVertical(data.x(), plan);

  std::vector<RealMatrix> honest_x;
  for (size_t l = 0; l < x.size(); ++l) {
    if (!adv.count(static_cast<int>(l + 1))) honest_x.push_back(x[l]);
  }
  if (honest_x.empty()) {
    Fail(ErrorCode::kInvalidAdversarySet, "every local node is corrupt");
  }
  RealMatrix xh = HorizontalConcat(honest_x);
  rep.rank = NumericalRank(xh);
  rep.log10_epsilon = EpsilonBoundLog10(std::max<size_t>(rep.rank, 1));
  rep.notes =
      "10^-40 privacy needs rank >= 35 (35! ~ 1.03e40); a rank-32 figure "
      "also circulates and is insufficient";

  // Knowledge on at most 200 rows keeps the m x m matrices small.
  const size_t m = std::min<size_t>(data.samples(), 200);
  std::vector<RealMatrix> xs;
  for (const auto& xl : x) xs.push_back(RowRange(xl, 0, m));
  if (rep.within_regime) {
    PartyKnowledge k = BuildPartyKnowledge(xs, node_weights, adv);
    rep.knowledge_shapes.push_back({"z1", k.z1.ShapeString()});
    rep.knowledge_shapes.push_back({"z2", k.z2.ShapeString()});
    rep.knowledge_shapes.push_back({"z3", k.z3.ShapeString()});
    if (k.knows_xw) rep.knowledge_shapes.push_back({"XW", k.xw.ShapeString()});
    for (size_t i = 0; i < k.own_x.size(); ++i) {
      rep.knowledge_shapes.push_back(
          {"own_X" + std::to_string(i), k.own_x[i].ShapeString()});
    }
    rep.z2_psd = IsPsd(k.z2);
    rep.z3_psd = IsPsd(k.z3);
  } else {
    rep.z2_psd = rep.z3_psd = true;
    rep.knowledge_shapes.push_back({"status", "not computed (outside t < s-1)"});
  }

  // Eigen reconstructions on the Gram matrix of a rank-<=4 column slice.
  const size_t small = std::min<size_t>({4, xh.cols(), m});
  RealMatrix b = RowRange(ColumnRange(xh, 0, small), 0, std::min<size_t>(m, 12));
  EigenAnalysis ea = AnalyzeGram(MatmulTransposedRight(b, b));
  rep.reconstruction_rank = std::min(ea.rank, small);
  if (rep.reconstruction_rank > 0) {
    auto rc = EigenReconstructions(ea, rep.reconstruction_rank);
    rep.reconstruction_count = rc.count;
    rep.reconstruction_error = rc.max_error;
    uint64_t fact = 1;
    for (size_t i = 2; i <= rep.reconstruction_rank; ++i) fact *= i;
    rep.reconstruction_ok = rc.count == fact && rc.max_error <= 1e-8;
  }

  if (cfg.model.kind == ModelKind::kLinear && cfg.parties >= 2) {
    Dataset slice;
    const size_t ms = std::min<size_t>(data.samples(), 50);
    slice.x_steps.push_back(RowRange(data.x(), 0, ms));
    slice.y_steps.push_back(RowRange(data.y(), 0, ms));
    TrainingConfig sc = cfg;
    sc.alpha = std::min(cfg.alpha, 0.01);
    AdversarySet i0;
    for (int p : adv) {
      if (p > 0) i0.insert(p);
    }
    auto sr = SimRealCheck(sc, slice, 20, i0, adv.count(0) > 0);
    rep.sim_real_run = true;
    rep.sim_real_deviation = sr.max_deviation;
  }

  // s-1 colluders plus Agg against the last node, on the final products.
  if (cfg.parties >= 2) {
    std::vector<RingTensor> secrets;
    std::vector<Prg> prgs;
    for (size_t l = 0; l < xs.size(); ++l) {
      secrets.push_back(Encode(Matmul(xs[l], node_weights[l]), cfg.ring));
      prgs.emplace_back(DeriveKey(cfg.seed, Stream::kAudit, {l + 1}));
    }
    auto t = RunShareRound(std::move(secrets), prgs);
    std::set<int> colluders;
    for (size_t l = 1; l < cfg.parties; ++l) colluders.insert(static_cast<int>(l));
    rep.collusion_succeeded = CollusionDemo(t, colluders).succeeded;
    std::set<int> corrupt;
    for (int p : adv) {
      if (p > 0) corrupt.insert(p);
    }
    rep.adversary_recovered =
        adv.count(0) > 0 && CollusionDemo(t, corrupt).succeeded;
  }
  return rep;
}

}  // namespace privcoll

#endif  // PRIVCOLL_AUDIT_HPP_
