#pragma once

// Command implementations behind the roamsim CLI. Argument parsing lives in
// tools/roamsim.cpp; everything here takes already-typed requests so the
// test suite can drive the commands in-process.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "roamsim/contention.hpp"
#include "roamsim/core.hpp"
#include "roamsim/dqn.hpp"
#include "roamsim/engine.hpp"
#include "roamsim/log.hpp"
#include "roamsim/policy.hpp"
#include "roamsim/radio.hpp"
#include "roamsim/report.hpp"
#include "roamsim/scanning.hpp"

#ifndef ROAMSIM_VERSION
#define ROAMSIM_VERSION "0.1.0-dev"
#endif

namespace roamsim::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kManifestVersion = 1;

/// A bad command-line value. The message always starts with the flag name.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& flag, const std::string& what) : std::runtime_error(flag + ": " + what) {}
};

inline std::string read_file(const fs::path& path, const std::string& flag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(flag, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// Parses scenario text, reporting problems against `flag`.
inline ScenarioConfig parse_scenario(const std::string& text, const std::string& flag) {
  try {
    return load_scenario(text);
  } catch (const std::exception& e) {
    throw UsageError(flag, e.what());
  }
}

inline policy::PolicyKind parse_policy_flag(const std::string& name, const std::string& flag = "--policy") {
  const auto kind = policy::parse_policy(name);
  if (!kind) throw UsageError(flag, "unknown policy '" + name + "' (expected rssi, eps or madar)");
  return *kind;
}

// ---------------------------------------------------------------------------
// Agent checkpoints: a count line followed by one network block per agent.

inline void save_agents(const engine::AgentPool& agents, std::ostream& os) {
  os << "roamsim-agents 1\ncount " << agents.size() << '\n';
  for (const auto& a : agents) dqn::save_checkpoint(a.q, os);
}

/// Replaces the networks of `agents` (already sized for the scenario) with
/// the checkpointed ones; target networks start as copies.
inline void load_agents(std::istream& is, engine::AgentPool& agents, const std::string& flag) {
  std::string magic, tag;
  int version = 0;
  std::size_t count = 0;
  if (!(is >> magic >> version >> tag >> count) || magic != "roamsim-agents" || version != 1 || tag != "count") {
    throw UsageError(flag, "not an agent checkpoint");
  }
  if (count != agents.size()) {
    throw UsageError(flag, "checkpoint holds " + std::to_string(count) + " agents, scenario needs " +
                               std::to_string(agents.size()));
  }
  for (auto& a : agents) {
    auto net = [&] {
      try {
        return dqn::load_checkpoint(is);
      } catch (const std::exception& e) {
        throw UsageError(flag, e.what());
      }
    }();
    if (!net.same_architecture(a.q)) throw UsageError(flag, "network shape does not match the scenario");
    a.q = net;
    a.target = net;
  }
}

// ---------------------------------------------------------------------------
// run

struct RunRequest {
  std::string scenario_path;  // informational once scenario_text is set
  std::string scenario_text;
  std::string policy = "rssi";
  std::uint64_t seed = 1;
  std::optional<double> duration_s;  // scenario duration when absent
  std::string out;
  std::optional<double> epsilon;
  int episodes = 0;  // MADAR pre-training episodes
  double episode_s = 60.0;
  std::string checkpoint;  // MADAR initial networks, optional
};

inline json manifest_for(const RunRequest& r, const ScenarioConfig& cfg, double duration) {
  json m;
  m["manifest_version"] = kManifestVersion;
  m["csv_schema_version"] = report::kCsvSchemaVersion;
  m["version"] = ROAMSIM_VERSION;
  m["command"] = "run";
  m["scenario_path"] = r.scenario_path;
  m["scenario"] = to_text(cfg);
  m["policy"] = r.policy;
  m["seeds"] = json::array({r.seed});
  m["duration_s"] = duration;
  m["out"] = r.out;
  m["epsilon"] = r.epsilon ? json(*r.epsilon) : json(nullptr);
  m["episodes"] = r.episodes;
  m["episode_duration_s"] = r.episode_s;
  m["checkpoint"] = r.checkpoint;
  return m;
}

/// Rebuilds a run request from a manifest written by execute_run. The
/// embedded scenario text takes precedence over the recorded path.
inline RunRequest request_from_manifest(const std::string& text, const std::string& flag = "--manifest") {
  json m;
  try {
    m = json::parse(text);
  } catch (const std::exception& e) {
    throw UsageError(flag, std::string("not valid JSON: ") + e.what());
  }
  try {
    if (m.at("command") != "run") throw UsageError(flag, "manifest is not from a run command");
    if (m.at("manifest_version").get<int>() != kManifestVersion) throw UsageError(flag, "unsupported manifest version");
    RunRequest r;
    r.scenario_path = m.at("scenario_path").get<std::string>();
    r.scenario_text = m.at("scenario").get<std::string>();
    r.policy = m.at("policy").get<std::string>();
    const auto& seeds = m.at("seeds");
    if (seeds.size() != 1) throw UsageError(flag, "run manifests carry exactly one seed");
    r.seed = seeds[0].get<std::uint64_t>();
    r.duration_s = m.at("duration_s").get<double>();
    r.out = m.at("out").get<std::string>();
    if (!m.at("epsilon").is_null()) r.epsilon = m.at("epsilon").get<double>();
    r.episodes = m.at("episodes").get<int>();
    r.episode_s = m.at("episode_duration_s").get<double>();
    r.checkpoint = m.at("checkpoint").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw UsageError(flag, std::string("incomplete manifest: ") + e.what());
  }
}

inline void check_run_request(const RunRequest& r, double duration) {
  if (!(duration >= 0)) throw UsageError("--duration", "must be >= 0");
  if (r.out.empty()) throw UsageError("--out", "output directory required");
  if (r.epsilon && !(*r.epsilon >= 0 && *r.epsilon <= 1)) throw UsageError("--epsilon", "must lie in [0, 1]");
  if (r.episodes < 0) throw UsageError("--episodes", "must be >= 0");
  if (!(r.episode_s > 0)) throw UsageError("--episode-duration", "must be > 0");
}

/// Writes the three CSV streams of one run into `dir`.
inline void write_run_outputs(const fs::path& dir, const engine::MetricsSink& m) {
  fs::create_directories(dir);
  std::ostringstream h, r, l;
  report::write_handoffs(h, m.handoffs);
  report::write_rates(r, m.rates);
  report::write_channel_load(l, m.load_trace);
  write_file(dir / "handoffs.csv", h.str());
  write_file(dir / "rates.csv", r.str());
  write_file(dir / "channel_load.csv", l.str());
}

/// Trains (when asked) and runs one policy for one seed. MADAR agents are
/// seeded from `seed`; pre-training episodes use seeds derived from it.
inline engine::MetricsSink simulate(ScenarioConfig cfg, policy::PolicyKind kind, std::uint64_t seed, double duration,
                                    std::optional<double> epsilon, int episodes, double episode_s,
                                    const std::string& checkpoint, const Logger& log) {
  cfg.seed = seed;
  engine::RunOptions opt;
  opt.epsilon = epsilon;
  opt.logger = &log;
  if (kind != policy::PolicyKind::madar) return engine::run(cfg, kind, duration, seed, nullptr, opt);
  auto agents = engine::make_agents(cfg);
  if (!checkpoint.empty()) {
    std::istringstream in(read_file(checkpoint, "--checkpoint"));
    load_agents(in, agents, "--checkpoint");
  }
  if (episodes > 0) engine::train(cfg, agents, episodes, episode_s, mix64(seed ^ 0x7261696eULL), &log);
  return engine::run(cfg, kind, duration, seed, &agents, opt);
}

/// The `run` command: simulates, then writes handoffs.csv, rates.csv,
/// channel_load.csv and manifest.json into r.out.
inline engine::MetricsSink execute_run(const RunRequest& r, const Logger& log = Logger()) {
  const auto cfg = parse_scenario(r.scenario_text, "--scenario");
  const auto kind = parse_policy_flag(r.policy);
  const double duration = r.duration_s.value_or(cfg.duration_s);
  check_run_request(r, duration);

  auto m = simulate(cfg, kind, r.seed, duration, r.epsilon, r.episodes, r.episode_s, r.checkpoint, log);
  const fs::path dir(r.out);
  write_run_outputs(dir, m);
  write_file(dir / "manifest.json", manifest_for(r, cfg, duration).dump(2) + "\n");
  log.info("run: " + std::to_string(m.handoffs.size()) + " handoffs written to " + dir.string());
  return m;
}

// ---------------------------------------------------------------------------
// compare

struct CompareRequest {
  std::string scenario_path;
  std::string scenario_text;
  std::vector<std::string> policies{"rssi", "eps", "madar"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<int> stas;  // empty: the scenario's own num_stas
  std::optional<double> duration_s;
  std::string out;
  std::optional<double> epsilon;
  int episodes = 0;
  double episode_s = 60.0;
  int jobs = 1;
};

/// Runs every (K, policy, seed) combination, each into its own
/// subdirectory, and writes summary.csv with one row per (policy, K).
/// Rows come out in request order regardless of worker scheduling.
inline std::vector<report::SummaryRow> execute_compare(const CompareRequest& r, const Logger& log = Logger()) {
  const auto base = parse_scenario(r.scenario_text, "--scenario");
  if (r.policies.empty()) throw UsageError("--policies", "at least one policy required");
  if (r.seeds.empty()) throw UsageError("--seeds", "at least one seed required");
  if (r.out.empty()) throw UsageError("--out", "output directory required");
  if (r.jobs < 1) throw UsageError("--jobs", "must be >= 1");
  std::vector<policy::PolicyKind> kinds;
  for (const auto& p : r.policies) kinds.push_back(parse_policy_flag(p, "--policies"));
  const double duration = r.duration_s.value_or(base.duration_s);
  if (!(duration >= 0)) throw UsageError("--duration", "must be >= 0");
  if (r.epsilon && !(*r.epsilon >= 0 && *r.epsilon <= 1)) throw UsageError("--epsilon", "must lie in [0, 1]");

  std::vector<ScenarioConfig> variants;
  if (r.stas.empty()) {
    variants.push_back(base);
  } else {
    for (int k : r.stas) {
      auto c = base;
      c.num_stas = k;
      try {
        validate(c);
      } catch (const std::exception& e) {
        throw UsageError("--stas", e.what());
      }
      variants.push_back(c);
    }
  }

  struct Job {
    std::size_t variant, policy, seed;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (std::size_t p = 0; p < kinds.size(); ++p)
      for (std::size_t s = 0; s < r.seeds.size(); ++s) jobs.push_back({v, p, s});

  const fs::path root(r.out);
  fs::create_directories(root);
  std::vector<engine::MetricsSink> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& j = jobs[i];
      try {
        const auto& cfg = variants[j.variant];
        auto m = simulate(cfg, kinds[j.policy], r.seeds[j.seed], duration, r.epsilon, r.episodes, r.episode_s, "", log);
        const auto name = r.policies[j.policy] + "_k" + std::to_string(cfg.num_stas) + "_s" +
                          std::to_string(r.seeds[j.seed]);
        write_run_outputs(root / name, m);
        results[i] = std::move(m);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(r.jobs, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::vector<report::SummaryRow> rows;
  std::size_t i = 0;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t p = 0; p < kinds.size(); ++p) {
      std::vector<engine::MetricsSink> runs(std::make_move_iterator(results.begin() + static_cast<long>(i)),
                                            std::make_move_iterator(results.begin() + static_cast<long>(i + r.seeds.size())));
      i += r.seeds.size();
      rows.push_back(report::summarize(r.policies[p], variants[v], runs));
    }
  }
  std::ostringstream summary;
  report::write_summary(summary, rows);
  write_file(root / "summary.csv", summary.str());

  json m;
  m["manifest_version"] = kManifestVersion;
  m["csv_schema_version"] = report::kCsvSchemaVersion;
  m["version"] = ROAMSIM_VERSION;
  m["command"] = "compare";
  m["scenario_path"] = r.scenario_path;
  m["scenario"] = to_text(base);
  m["policies"] = r.policies;
  m["seeds"] = r.seeds;
  m["stas"] = r.stas;
  m["duration_s"] = duration;
  m["out"] = r.out;
  m["epsilon"] = r.epsilon ? json(*r.epsilon) : json(nullptr);
  m["episodes"] = r.episodes;
  m["episode_duration_s"] = r.episode_s;
  write_file(root / "manifest.json", m.dump(2) + "\n");
  return rows;
}

// ---------------------------------------------------------------------------
// train

struct TrainRequest {
  std::string scenario_text;
  std::uint64_t seed = 1;
  int episodes = 200;
  double episode_s = 60.0;
  std::string checkpoint;  // output path
};

/// Trains MADAR agents and writes their Q-networks to r.checkpoint.
inline std::vector<engine::EpisodeStats> execute_train(const TrainRequest& r, const Logger& log = Logger()) {
  auto cfg = parse_scenario(r.scenario_text, "--scenario");
  if (r.episodes < 1) throw UsageError("--episodes", "must be >= 1");
  if (!(r.episode_s > 0)) throw UsageError("--duration", "must be > 0");
  if (r.checkpoint.empty()) throw UsageError("--checkpoint", "output path required");
  cfg.seed = r.seed;
  auto agents = engine::make_agents(cfg);
  auto stats = engine::train(cfg, agents, r.episodes, r.episode_s, mix64(r.seed ^ 0x7261696eULL), &log);
  std::ostringstream out;
  save_agents(agents, out);
  write_file(r.checkpoint, out.str());
  return stats;
}

// ---------------------------------------------------------------------------
// calculators

/// Shannon capacity for a linear SNR over `bandwidth_hz`.
inline json calc_shannon(double snr_linear, double bandwidth_hz) {
  if (!(snr_linear >= 0) || !std::isfinite(snr_linear)) throw UsageError("--snr-linear", "must be a finite value >= 0");
  if (!(bandwidth_hz > 0) || !std::isfinite(bandwidth_hz)) throw UsageError("--bw", "must be > 0");
  const double cap = radio::shannon_cap(true, 1.0, snr_linear, 1.0, bandwidth_hz);
  return {{"snr_linear", snr_linear}, {"bandwidth_hz", bandwidth_hz}, {"capacity_bps", cap}};
}

/// P_s, E[D_s], E[T_BO] and T_cont. p_c is derived from tau and K_sta when
/// not supplied.
inline json calc_contention(double tau, std::optional<double> pc, int ksta, int w0, int max_stage, double t_ifs_us,
                            double slot_us, bool idle) {
  if (!(tau > 0 && tau <= 1)) throw UsageError("--tau", "must lie in (0, 1]");
  if (pc && !(*pc >= 0 && *pc < 1)) throw UsageError("--pc", "must lie in [0, 1)");
  if (ksta < 1) throw UsageError("--ksta", "must be >= 1");
  if (w0 < 1) throw UsageError("--w0", "must be >= 1");
  if (max_stage < 0 || max_stage > 30) throw UsageError("--stages", "must lie in [0, 30]");
  if (!(t_ifs_us >= 0)) throw UsageError("--t-ifs-us", "must be >= 0");
  if (!(slot_us >= 0)) throw UsageError("--slot-us", "must be >= 0");
  contention::UoraParams p;
  p.tau = tau;
  p.contenders = ksta;
  p.collision_prob = pc.value_or(contention::collision_prob(tau, ksta));
  p.w0 = w0;
  p.max_stage = max_stage;
  p.t_ifs_s = t_ifs_us * 1e-6;
  p.slot_s = slot_us * 1e-6;
  const auto res = contention::analyze(p);
  return {{"tau", tau},
          {"p_c", p.collision_prob},
          {"k_sta", ksta},
          {"P_s", res.success_prob},
          {"E_D_s", res.expected_stages},
          {"E_T_BO_slots", res.expected_backoff},
          {"T_cont_s", contention::contention_delay(idle, p)}};
}

inline ScanAccounting parse_accounting(const std::string& mode) {
  if (mode == "fsm") return ScanAccounting::fsm;
  if (mode == "eq3-literal") return ScanAccounting::eq3_literal;
  throw UsageError("--mode", "expected fsm or eq3-literal, got '" + mode + "'");
}

/// T_CS for `channels` channels with default (or given) timers.
inline json calc_scan_time(int channels, std::optional<int> responding, const std::string& mode,
                           const scanning::ScanTiming& timing) {
  if (channels < 1) throw UsageError("--channels", "must be >= 1");
  const int resp = responding.value_or(channels);
  if (resp < 0 || resp > channels) throw UsageError("--responding", "must lie in [0, channels]");
  const auto acc = parse_accounting(mode);
  return {{"channels", channels},
          {"responding", resp},
          {"mode", mode},
          {"t_cs_s", scanning::scan_time(channels, resp, timing, acc)}};
}

/// CSV sweep over (tau, K_sta) with derived p_c on a busy channel.
inline void contention_sweep(std::ostream& os, const std::vector<double>& taus, const std::vector<int>& ksta, int w0,
                             int max_stage, double t_ifs_us, double slot_us) {
  os << "tau,k_sta,p_c,P_s,E_D_s,E_T_BO_slots,T_cont_s\n";
  for (double tau : taus) {
    for (int k : ksta) {
      const auto j = calc_contention(tau, std::nullopt, k, w0, max_stage, t_ifs_us, slot_us, false);
      os << report::num(tau) << ',' << k << ',' << report::num(j["p_c"].get<double>()) << ','
         << report::num(j["P_s"].get<double>()) << ',' << report::num(j["E_D_s"].get<double>()) << ','
         << report::num(j["E_T_BO_slots"].get<double>()) << ',' << report::num(j["T_cont_s"].get<double>()) << '\n';
    }
  }
}

}  // namespace roamsim::cli
