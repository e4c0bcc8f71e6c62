#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "roamsim/contention.hpp"
#include "roamsim/core.hpp"
#include "roamsim/radio.hpp"
#include "roamsim/rng.hpp"
#include "roamsim/scanning.hpp"

namespace roamsim::roaming {

/// Association-phase timers in seconds. `auth_s` is T_au and `assoc_s` is
/// T_as; the names follow the symbol, not any particular expansion.
struct RoamTiming {
  double auth_s = 0.005;
  double assoc_s = 0.005;
  double timeout_s = 0.100;
  int max_retries = 3;
};

inline RoamTiming timing_from(const ScenarioConfig& c) {
  return {c.t_au_ms / 1000.0, c.t_as_ms / 1000.0, c.assoc_timeout_ms / 1000.0, c.max_retries};
}

/// Selection constraints: rate, signal, error rate, power.
struct ConstraintSet {
  double min_throughput_bps = 1e6;
  double min_rssi_dbm = -85.0;
  double max_per = 0.001;
  double max_power_dbm = 23.0;
  radio::PerCurve per_curve;
};

inline ConstraintSet constraints_from(const ScenarioConfig& c) {
  return {c.r_thr_bps, c.handoff_threshold_dbm, c.per_max, c.p_max_dbm, {c.per_k, c.per_gamma0_db}};
}

enum class Branch { greedy, explore, exploit };

inline std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::explore: return "explore";
    case Branch::exploit: return "exploit";
    default: return "greedy";
  }
}

/// One completed roam.
struct HandoffRecord {
  int sta = 0;
  int ap = 0;
  int channel = 1;
  double t_cs = 0;
  double t_ro = 0;
  double t_cont = 0;
  double total = 0;
  int retries = 0;
  double time_s = 0;     // association complete
  double started_s = 0;  // triggering scan start
  std::string policy;
  Branch branch = Branch::greedy;
  bool infeasible = false;
  int ap_load = 0;       // STAs already on the chosen channel
  double rssi_dbm = 0;   // of the chosen row, at selection
  double snr_db = 0;
  double throughput_bps = 0;

  double association_delay() const { return t_ro + t_cont; }
};

/// Strictly below the threshold, or not associated at all.
inline bool handoff_needed(std::optional<double> current_rssi_dbm, double threshold_dbm) {
  return !current_rssi_dbm || *current_rssi_dbm < threshold_dbm;
}

inline bool satisfies(const scanning::ScanRow& row, const ConstraintSet& c) {
  return row.throughput_bps >= c.min_throughput_bps && row.rssi_dbm >= c.min_rssi_dbm &&
         radio::per_from_snr(row.snr_db, c.per_curve) <= c.max_per && row.tx_power_dbm >= 0.0 &&
         row.tx_power_dbm <= c.max_power_dbm;
}

/// Rows meeting every constraint, or nullopt when none does.
inline std::optional<scanning::StateTable> feasible_candidates(const scanning::StateTable& table,
                                                               const ConstraintSet& c) {
  scanning::StateTable out;
  std::copy_if(table.rows.begin(), table.rows.end(), std::back_inserter(out.rows),
               [&](const auto& row) { return satisfies(row, c); });
  if (out.empty()) return std::nullopt;
  return out;
}

struct AssociationOutcome {
  bool success = false;
  double t_ro = 0;    // T_au + T_as of the successful attempt plus one timeout per lost attempt
  double t_cont = 0;  // sum of contention draws over all attempts
  int retries = 0;
};

/// Link and channel state seen by the association exchange.
struct AssociationContext {
  double snr_db = 0;
  radio::PerCurve per_curve;
  contention::UoraParams uora;
  double busy_prob = 0;  // probability the channel is busy at each access
};

/// Runs up to max_retries + 1 attempts. Each attempt draws channel state and
/// a contention delay; it is lost if contention exceeds the retry limit or
/// the frame is corrupted (probability PER(snr)). A lost attempt costs the
/// association timeout; a successful one costs T_au + T_as.
inline AssociationOutcome associate(const AssociationContext& ctx, const RoamTiming& timing, Rng& rng) {
  AssociationOutcome out;
  const double per = radio::per_from_snr(ctx.snr_db, ctx.per_curve);
  for (int attempt = 0; attempt <= timing.max_retries; ++attempt) {
    const bool busy = ctx.busy_prob > 0 && rng.bernoulli(ctx.busy_prob);
    const auto draw = contention::draw_contention(!busy, ctx.uora, rng);
    out.t_cont += draw.seconds;
    const bool lost = draw.dropped || (per > 0 && rng.bernoulli(per));
    if (!lost) {
      out.t_ro += timing.auth_s + timing.assoc_s;
      out.success = true;
      out.retries = attempt;
      return out;
    }
    out.t_ro += timing.timeout_s;
  }
  out.retries = timing.max_retries;
  return out;
}

/// T = T_CS + T_RO + T_cont.
inline double total_latency(const HandoffRecord& r) { return r.t_cs + r.t_ro + r.t_cont; }

/// W = -T / T_norm.
inline double reward(double total_latency_s, double t_norm_s) { return -total_latency_s / t_norm_s; }

}  // namespace roamsim::roaming
