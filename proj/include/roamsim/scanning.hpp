#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "roamsim/core.hpp"
#include "roamsim/radio.hpp"

namespace roamsim::scanning {

/// Active-scan timers, seconds.
struct ScanTiming {
  double probe_s = 0.001;        // T_pb
  double min_channel_s = 0.010;  // MinChannelTime
  double max_channel_s = 0.100;  // MaxChannelTime
  double switch_s = 0.005;       // T_sw
};

inline ScanTiming timing_from(const ScenarioConfig& c) {
  return {c.t_pb_ms / 1000.0, c.t_min_ms / 1000.0, c.t_max_ms / 1000.0, c.t_sw_ms / 1000.0};
}

/// What a probing STA can measure, plus what it needs to turn a measurement
/// into a throughput estimate.
struct RadioEnv {
  radio::PathLossModel path_loss;
  double interference_db = 0.0;
  double sensitivity_dbm = -94.0;
  double bandwidth_hz = 20e6;
  double payload_bits = 1500 * 8;
  double t_ifs_s = 16e-6;
};

inline RadioEnv radio_env_from(const ScenarioConfig& c) {
  RadioEnv env;
  env.path_loss = {c.pl0_db, c.pl_exponent, c.noise_floor_dbm};
  env.interference_db = c.interference_db;
  env.sensitivity_dbm = c.sensitivity_dbm;
  env.bandwidth_hz = c.bandwidth_hz;
  env.payload_bits = c.payload_bytes * 8.0;
  env.t_ifs_s = c.t_ifs_us * 1e-6;
  return env;
}

/// Read-only snapshot of the network a STA probes.
struct TopologyView {
  std::span<const ApNode> aps;
  std::span<const int> channel_load;  // associated STAs per channel, index channel-1
  int num_channels = 1;
};

/// One candidate AP as seen in a ProbeResponse. `load` is the channel's
/// associated-STA count advertised by the AP.
struct ScanRow {
  int ap = 0;
  int channel = 1;
  double tx_power_dbm = 0;
  double rssi_dbm = 0;
  double snr_db = 0;
  double throughput_bps = 0;  // S_R
  double shannon_bps = 0;     // R_upp of this link
  int load = 0;
  bool operator==(const ScanRow&) const = default;
};

struct ScanResult {
  int channel = 1;
  std::vector<ScanRow> rows;
  double dwell_s = 0;
};

/// Per-STA observation: one row per discovered AP, columns
/// (throughput, RSSI, SNR) plus bookkeeping.
struct StateTable {
  std::vector<ScanRow> rows;

  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }
  const ScanRow* find(int ap) const {
    auto it = std::find_if(rows.begin(), rows.end(), [ap](const ScanRow& r) { return r.ap == ap; });
    return it == rows.end() ? nullptr : &*it;
  }
  bool operator==(const StateTable&) const = default;
};

inline double channel_dwell(bool responded, const ScanTiming& t, ScanAccounting mode) {
  if (mode == ScanAccounting::eq3_literal || responded) return t.probe_s + t.min_channel_s + t.max_channel_s + t.switch_s;
  return t.probe_s + t.min_channel_s + t.switch_s;
}

/// Closed-form scan time for `channels` channels of which `responding` have
/// at least one AP answering the probe.
inline double scan_time(int channels, int responding, const ScanTiming& t, ScanAccounting mode) {
  if (channels < 0 || responding < 0 || responding > channels) {
    throw std::invalid_argument("scan_time: need 0 <= responding <= channels");
  }
  return responding * channel_dwell(true, t, mode) + (channels - responding) * channel_dwell(false, t, mode);
}

inline ScanRow measure(const ApNode& ap, Vec2 sta_position, const TopologyView& topo, const RadioEnv& env,
                       std::optional<int> own_ap) {
  const auto q = radio::link_quality(ap, sta_position, env.path_loss, env.interference_db);
  ScanRow row;
  row.ap = ap.id;
  row.channel = ap.channel;
  row.tx_power_dbm = ap.tx_power_dbm;
  row.rssi_dbm = q.rssi_dbm;
  row.snr_db = q.snr_db;
  row.load = topo.channel_load.empty() ? 0 : topo.channel_load[static_cast<std::size_t>(ap.channel - 1)];
  row.shannon_bps = radio::shannon_cap_from_snr(q.snr_db, env.bandwidth_hz);
  const int contenders = row.load + (own_ap == ap.id ? 0 : 1);
  row.throughput_bps = radio::throughput_estimate(
      env.payload_bits, radio::shared_slot_seconds(env.payload_bits, row.shannon_bps, contenders, env.t_ifs_s),
      row.shannon_bps);
  return row;
}

/// Probe one channel. APs below the receive sensitivity do not answer.
inline ScanResult scan_channel(int channel, const TopologyView& topo, Vec2 sta_position, const RadioEnv& env,
                               const ScanTiming& timing, ScanAccounting mode = ScanAccounting::fsm,
                               std::optional<int> own_ap = std::nullopt) {
  ScanResult result;
  result.channel = channel;
  for (const auto& ap : topo.aps) {
    if (ap.channel != channel) continue;
    if (radio::rssi_at(ap, sta_position, env.path_loss) < env.sensitivity_dbm) continue;
    result.rows.push_back(measure(ap, sta_position, topo, env, own_ap));
  }
  result.dwell_s = channel_dwell(!result.rows.empty(), timing, mode);
  return result;
}

struct FullScan {
  double t_cs = 0;
  StateTable table;
  std::vector<ScanResult> channels;  // in scan order
};

/// Scans all N channels starting from `start_channel` and wrapping around.
/// T_CS is the plain sum of the per-channel dwells.
inline FullScan full_scan(int start_channel, const TopologyView& topo, Vec2 sta_position, const RadioEnv& env,
                          const ScanTiming& timing, ScanAccounting mode = ScanAccounting::fsm,
                          std::optional<int> own_ap = std::nullopt) {
  FullScan out;
  const int n = topo.num_channels;
  const int start = (start_channel >= 1 && start_channel <= n) ? start_channel : 1;
  for (int step = 0; step < n; ++step) {
    const int channel = (start - 1 + step) % n + 1;
    auto result = scan_channel(channel, topo, sta_position, env, timing, mode, own_ap);
    out.t_cs += result.dwell_s;
    out.table.rows.insert(out.table.rows.end(), result.rows.begin(), result.rows.end());
    out.channels.push_back(std::move(result));
  }
  std::sort(out.table.rows.begin(), out.table.rows.end(),
            [](const ScanRow& a, const ScanRow& b) { return a.ap < b.ap; });
  return out;
}

}  // namespace roamsim::scanning
