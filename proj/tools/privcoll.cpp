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

// Command-line entry point for the privcoll library.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "privcoll.hpp"

namespace {

namespace fs = std::filesystem;
using namespace privcoll;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel CurrentLogLevel() {
  static const LogLevel level = [] {
    const char* env = std::getenv("PRIVCOLL_LOG");
    std::string v = env ? env : "info";
    if (v == "error") return LogLevel::kError;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

void Log(LogLevel level, const std::string& msg, const char* tag = nullptr) {
  if (level > CurrentLogLevel()) return;
  static const char* names[] = {"error", "info", "debug"};
  std::cerr << "[privcoll " << (tag ? tag : names[static_cast<int>(level)])
            << "] " << msg << "\n";
}

// Thrown for anything that must exit with the config status.
struct ConfigFailure {
  std::string what;
};

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  std::string profile;
  bool plaintext = false;
  std::vector<std::string> overrides;
};

void AddCommonOptions(CLI::App* cmd, CommonOptions& o, bool with_out) {
  cmd->add_option("--config", o.config, "Configuration file (key = value)")
      ->required();
  if (with_out) cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Override the training seed");
  cmd->add_option("--profile", o.profile, "Network profile")
      ->check(CLI::IsMember({"lan", "wan", "custom"}));
  cmd->add_flag("--plaintext", o.plaintext,
                "INSECURE oracle mode: send X^lW^l without secret sharing");
  cmd->add_option("--set", o.overrides, "Override a config key (key=value)");
}

TrainingConfig LoadEffectiveConfig(const CommonOptions& o) {
  try {
    TrainingConfig cfg = LoadConfig(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.profile.empty()) ApplyConfigKey(cfg, "profile", o.profile);
    if (o.plaintext) cfg.plaintext = true;
    for (const auto& kv : o.overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) {
        Fail(ErrorCode::kConfig, "--set expects key=value, got '" + kv + "'");
      }
      ApplyConfigKey(cfg, detail::Trim(kv.substr(0, eq)),
                     detail::Trim(kv.substr(eq + 1)));
    }
    cfg.Validate();
    for (const auto& w : cfg.Warnings()) Log(LogLevel::kError, w, "warning");
    return cfg;
  } catch (const Error& e) {
    throw ConfigFailure{e.what()};
  }
}

Dataset LoadData(TrainingConfig& cfg) {
  try {
    Dataset ds = LoadDataset(cfg);
    ResolvePlan(cfg, ds.features());
    cfg.Validate();
    return ds;
  } catch (const Error& e) {
    throw ConfigFailure{e.what()};
  }
}

fs::path RequireOut(const std::string& out) {
  if (out.empty()) throw ConfigFailure{"--out DIR is required"};
  fs::create_directories(out);
  return fs::path(out);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) Fail(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
}

void LogRound(const IterationReport& r) {
  std::ostringstream os;
  os << "iteration " << r.iteration << " epoch " << r.epoch << " loss "
     << std::setprecision(10) << r.loss << " bytes " << r.bytes_sent;
  Log(LogLevel::kDebug, os.str());
}

void WriteRunArtifacts(const fs::path& dir, const TrainingConfig& cfg,
                       const std::vector<IterationReport>& history,
                       const std::optional<ModelParams>& params) {
  WriteHistory((dir / "history.jsonl").string(), history);
  WriteText(dir / "config.txt", FormatConfig(cfg));
  if (params) WriteText(dir / "model.json", ParamsToJson(*params).dump(1));
}

// ---------------------------------------------------------------------------

int CmdSimulate(const CommonOptions& o) {
  TrainingConfig cfg = LoadEffectiveConfig(o);
  fs::path out = RequireOut(o.out);
  cfg.transport = TransportMode::kInProcess;
  Dataset ds = LoadData(cfg);
  Simulation sim(cfg, ds);
  try {
    while (!sim.done()) LogRound(sim.RunIteration());
    sim.Stop();
  } catch (const std::exception& e) {
    WriteRunArtifacts(out, cfg, sim.aggregator().history(), std::nullopt);
    Log(LogLevel::kError, std::string("training aborted: ") + e.what());
    return kExitRuntime;
  }
  TrainingResult r = sim.Result();
  WriteRunArtifacts(out, cfg, r.history, r.params);
  std::ostringstream os;
  os << "simulate: " << r.history.size() << " iterations, final loss "
     << std::setprecision(10)
     << (r.history.empty() ? 0.0 : r.history.back().loss)
     << (r.converged ? " (converged)" : " (iteration budget reached)");
  Log(LogLevel::kInfo, os.str());
  return kExitOk;
}

int CmdAgg(const CommonOptions& o) {
  TrainingConfig cfg = LoadEffectiveConfig(o);
  fs::path out = RequireOut(o.out);
  cfg.transport = TransportMode::kTcp;
  Dataset ds = LoadData(cfg);
  if (cfg.addresses.size() != cfg.parties + 1) {
    throw ConfigFailure{"agg needs address.0..address." +
                        std::to_string(cfg.parties)};
  }
  TcpEndpoint ep(0, cfg.addresses, cfg.Fingerprint(), cfg.profile, cfg.timeout);
  Aggregator agg(cfg, ds.y_steps);
  try {
    while (!agg.done()) LogRound(agg.RunRound(ep));
    agg.Finish(ep);
    ep.Shutdown();
  } catch (const std::exception& e) {
    ep.Abort(e.what());
    WriteRunArtifacts(out, cfg, agg.history(), std::nullopt);
    Log(LogLevel::kError, std::string("training aborted: ") + e.what());
    return kExitRuntime;
  }
  ModelParams p = cfg.model.kind == ModelKind::kRnn
                      ? MakeRnnParams({}, agg.rnn())
                      : MakeParams(cfg.model.kind, {}, agg.head());
  WriteRunArtifacts(out, cfg, agg.history(), p);
  Log(LogLevel::kInfo, "agg: " + std::to_string(agg.history().size()) +
                           " iterations complete");
  return kExitOk;
}

int CmdNode(const CommonOptions& o, int id) {
  TrainingConfig cfg = LoadEffectiveConfig(o);
  cfg.transport = TransportMode::kTcp;
  Dataset ds = LoadData(cfg);
  if (id < 1 || static_cast<size_t>(id) > cfg.parties) {
    throw ConfigFailure{"--id must be in 1.." + std::to_string(cfg.parties)};
  }
  auto plan = ResolvePlan(cfg, ds.features());
  auto slices = PartitionSteps(ds, plan);
  TcpEndpoint ep(id, cfg.addresses, cfg.Fingerprint(), cfg.profile,
                 cfg.timeout);
  LocalNode node(id, cfg, std::move(slices[id - 1]));
  try {
    node.Serve(ep);
    ep.Shutdown();
  } catch (const std::exception& e) {
    ep.Abort(e.what());
    Log(LogLevel::kError, std::string("node aborted: ") + e.what());
    return kExitRuntime;
  }
  if (!o.out.empty()) {
    fs::path out = RequireOut(o.out);
    WriteText(out / ("node_" + std::to_string(id) + "_weights.json"),
              MatrixToJson(node.weights()).dump());
  }
  Log(LogLevel::kInfo, "node " + std::to_string(id) + ": stopped after " +
                           std::to_string(node.iteration()) + " iterations");
  return kExitOk;
}

int CmdPartition(const CommonOptions& o) {
  TrainingConfig cfg = LoadEffectiveConfig(o);
  fs::path out = RequireOut(o.out);
  Dataset ds = LoadData(cfg);
  auto plan = ResolvePlan(cfg, ds.features());
  auto slices = PartitionSteps(ds, plan);
  for (size_t l = 0; l < slices.size(); ++l) {
    for (size_t c = 0; c < slices[l].size(); ++c) {
      std::vector<std::string> header;
      for (size_t j = plan.ranges[l].begin; j < plan.ranges[l].end; ++j) {
        header.push_back("f" + std::to_string(j));
      }
      std::string name = "node_" + std::to_string(l + 1);
      if (slices[l].size() > 1) name += "_step_" + std::to_string(c);
      WriteCsv((out / (name + ".csv")).string(), slices[l][c], header);
    }
  }
  for (size_t c = 0; c < ds.steps(); ++c) {
    std::vector<std::string> header;
    for (size_t j = 0; j < ds.outputs(); ++j) {
      header.push_back("y" + std::to_string(j));
    }
    std::string name = ds.steps() > 1 ? "labels_step_" + std::to_string(c)
                                      : std::string("labels");
    WriteCsv((out / (name + ".csv")).string(), ds.y_steps[c], header);
  }
  WriteText(out / "plan.txt", FormatPlan(plan));
  Log(LogLevel::kInfo, "partition: " + std::to_string(plan.parties()) +
                           " nodes written to " + out.string());
  return kExitOk;
}

int CmdAudit(const std::string& run_dir, const std::string& adversary,
             const std::string& out_file) {
  TrainingConfig cfg;
  nlohmann::ordered_json model;
  Dataset ds;
  AdversarySet adv;
  try {
    cfg = LoadConfig((fs::path(run_dir) / "config.txt").string());
    model = nlohmann::ordered_json::parse(
        ReadFile((fs::path(run_dir) / "model.json").string()));
    ds = LoadDataset(cfg);
    adv = ParseAdversarySet(adversary, cfg.parties);
  } catch (const Error& e) {
    throw ConfigFailure{e.what()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigFailure{std::string("model.json: ") + e.what()};
  }
  RealMatrix w = MatrixFromJson(model.at("w"));
  auto plan = ResolvePlan(cfg, ds.features());
  if (w.rows() != ds.features()) {
    throw ConfigFailure{"model.json coefficients do not match the data"};
  }
  std::vector<RealMatrix> node_w;
  for (const auto& r : plan.ranges) node_w.push_back(RowRange(w, r.begin, r.end));
  AuditReport rep = RunAudit(cfg, ds, node_w, adv);
  std::string text = FormatAuditReport(rep);
  std::cout << text;
  WriteText(out_file.empty() ? fs::path(run_dir) / "audit.txt"
                             : fs::path(out_file),
            text);
  return rep.passed() ? kExitOk : kExitRuntime;
}

int CmdBench(const CommonOptions& o, size_t iterations,
             const std::vector<std::string>& profiles) {
  TrainingConfig base = LoadEffectiveConfig(o);
  base.transport = TransportMode::kInProcess;
  Dataset ds = LoadData(base);
  std::ostringstream table;
  table << "profile\titerations\tcomputation_s\tcommunication_s\ttotal_s\t"
           "step2_bytes\tbytes_sent\tpredicted_comm_floor_s\n";
  for (const auto& name : profiles) {
    TrainingConfig cfg = base;
    try {
      ApplyConfigKey(cfg, "profile", name);
    } catch (const Error& e) {
      throw ConfigFailure{e.what()};
    }
    cfg.max_iterations = iterations;
    cfg.max_epochs = iterations;
    cfg.tol = -1.0;
    Simulation sim(cfg, ds);
    double compute = 0, comm = 0, total = 0;
    uint64_t step2 = 0, bytes = 0;
    size_t done = 0;
    while (!sim.done()) {
      IterationReport r = sim.RunIteration();
      compute += r.agg_compute_s + r.node_compute_s;
      comm += r.comm_s;
      total += r.wall_s;
      step2 += r.step2_bytes;
      bytes += r.bytes_sent;
      ++done;
    }
    sim.Stop();
    // CONTROL, SHARE and SHARE_SUM are sequential per round.
    const double floor_s = 3.0 * cfg.profile.latency_ms * 1e-3 * done;
    table << name << '\t' << done << '\t' << std::setprecision(6) << compute
          << '\t' << comm << '\t' << total << '\t' << step2 << '\t' << bytes
          << '\t' << floor_s << '\n';
  }
  std::cout << table.str();
  if (!o.out.empty()) WriteText(RequireOut(o.out) / "bench.tsv", table.str());
  return kExitOk;
}

int CmdCompare(const CommonOptions& o) {
  TrainingConfig cfg = LoadEffectiveConfig(o);
  cfg.transport = TransportMode::kInProcess;
  Dataset ds = LoadData(cfg);
  CentralizedRun central = TrainCentralized(cfg, ds);
  DistributedRun dist = RunDistributedWithTrajectory(cfg, ds);
  std::vector<double> dev = CompareTrajectories(central.trajectory,
                                                dist.trajectory);
  double max_dev = 0, max_step = 0;
  for (size_t i = 0; i < dev.size(); ++i) {
    max_dev = std::max(max_dev, dev[i]);
    if (i > 0) max_step = std::max(max_step, dev[i] - dev[i - 1]);
  }
  bool pass;
  std::ostringstream os;
  os << std::setprecision(6);
  if (cfg.plaintext) {
    const double tol = cfg.model.kind == ModelKind::kRnn ||
                               cfg.model.kind == ModelKind::kFeedForward
                           ? 1e-10
                           : 1e-12;
    pass = max_dev <= tol;
    os << "compare: plaintext, max per-iteration deviation " << max_dev
       << " (threshold " << tol << ")";
  } else {
    const double tol = 16.0 * std::ldexp(1.0, -static_cast<int>(cfg.ring.frac_bits));
    pass = max_step <= tol;
    os << "compare: ring-encoded, max deviation " << max_dev
       << ", max per-iteration increment " << max_step << " (threshold "
       << tol << ")";
  }
  std::cout << os.str() << (pass ? " PASS" : " FAIL") << "\n";
  if (!o.out.empty()) {
    fs::path out = RequireOut(o.out);
    WriteHistory((out / "central_history.jsonl").string(), central.history);
    WriteHistory((out / "history.jsonl").string(), dist.result.history);
    std::ostringstream series;
    series << std::setprecision(17);
    for (size_t i = 0; i < dev.size(); ++i) series << i << '\t' << dev[i] << '\n';
    WriteText(out / "deviation.tsv", series.str());
  }
  return pass ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving collaborative learning over vertically "
               "partitioned data"};
  app.require_subcommand(1);

  CommonOptions o;
  int node_id = 0;
  std::string run_dir, adversary = "agg", audit_out;
  size_t bench_iters = 5;
  std::vector<std::string> bench_profiles{"lan", "wan"};

  auto* partition = app.add_subcommand("partition",
                                       "Split a dataset by the partition plan");
  AddCommonOptions(partition, o, true);
  auto* agg = app.add_subcommand("agg", "Run the aggregator over TCP");
  AddCommonOptions(agg, o, true);
  auto* node = app.add_subcommand("node", "Run one local node over TCP");
  AddCommonOptions(node, o, true);
  node->add_option("--id", node_id, "Node id (1..s)")->required();
  auto* simulate = app.add_subcommand("simulate",
                                      "Run every party in this process");
  AddCommonOptions(simulate, o, true);
  auto* audit = app.add_subcommand("audit", "Privacy audit of a recorded run");
  audit->add_option("--run", run_dir, "Run directory written by simulate")
      ->required();
  audit->add_option("--adversary", adversary,
                    "Corrupt parties, e.g. agg,1 (default: agg)");
  audit->add_option("--out", audit_out, "Report path (default RUN/audit.txt)");
  auto* bench = app.add_subcommand("bench", "LAN/WAN overhead breakdown");
  AddCommonOptions(bench, o, true);
  bench->add_option("--iterations", bench_iters, "Rounds per profile");
  bench->add_option("--profiles", bench_profiles, "Profiles to run")
      ->delimiter(',');
  auto* compare = app.add_subcommand(
      "compare", "Distributed vs centralized parameter trajectories");
  AddCommonOptions(compare, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (o.plaintext) {
    std::cerr << "WARNING: --plaintext disables secret sharing; X^lW^l is "
                 "sent in the clear. Use only for oracle testing.\n";
  }

  try {
    if (*partition) return CmdPartition(o);
    if (*agg) return CmdAgg(o);
    if (*node) return CmdNode(o, node_id);
    if (*simulate) return CmdSimulate(o);
    if (*audit) return CmdAudit(run_dir, adversary, audit_out);
    if (*bench) return CmdBench(o, bench_iters, bench_profiles);
    if (*compare) return CmdCompare(o);
  } catch (const ConfigFailure& e) {
    Log(LogLevel::kError, "config error: " + e.what);
    return kExitConfig;
  } catch (const std::exception& e) {
    Log(LogLevel::kError, e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
