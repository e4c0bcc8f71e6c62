#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "roamsim/core.hpp"

namespace roamsim::radio {

// Unit conversions. Every other function in this header states its units in
// the parameter names; these are the only places dB and linear meet.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }
inline double mw_to_dbm(double mw) { return linear_to_db(mw); }

inline constexpr double kMinDistanceM = 0.1;

/// Log-distance path loss, reference distance 1 m.
struct PathLossModel {
  double pl0_db = 46.67;
  double exponent = 4.0;
  double noise_floor_dbm = -101.0;

  double loss_db(double distance_m) const {
    return pl0_db + 10.0 * exponent * std::log10(std::max(distance_m, kMinDistanceM));
  }
};

/// Logistic packet-error curve PER(snr) = 1 / (1 + exp(k (snr - gamma0))).
struct PerCurve {
  double k = 1.0;
  double gamma0_db = 5.0;
};

struct LinkQuality {
  double rssi_dbm = 0;
  double snr_db = 0;
  double gain = 0;       // linear, rssi / tx power
  double noise_dbm = 0;  // noise plus folded-in interference
};

/// Distances below 0.1 m are clamped to 0.1 m.
inline double rssi_at(double tx_power_dbm, double distance_m, const PathLossModel& model) {
  return tx_power_dbm - model.loss_db(distance_m);
}

inline double rssi_at(const ApNode& ap, Vec2 sta_position, const PathLossModel& model) {
  return rssi_at(ap.tx_power_dbm, distance(ap.position, sta_position), model);
}

inline double snr_at(double rssi_dbm, double noise_dbm) { return rssi_dbm - noise_dbm; }

/// h = rssi / p in linear terms.
inline double channel_gain(double rssi_dbm, double tx_power_dbm) { return db_to_linear(rssi_dbm - tx_power_dbm); }

inline LinkQuality link_quality(const ApNode& ap, Vec2 sta_position, const PathLossModel& model,
                                double interference_db = 0.0) {
  LinkQuality q;
  q.rssi_dbm = rssi_at(ap, sta_position, model);
  q.noise_dbm = model.noise_floor_dbm + interference_db;
  q.snr_db = snr_at(q.rssi_dbm, q.noise_dbm);
  q.gain = channel_gain(q.rssi_dbm, ap.tx_power_dbm);
  return q;
}

/// R_upp = B log2(1 + alpha p h / sigma^2), powers linear (same unit), B in Hz.
inline double shannon_cap(bool selected, double tx_power, double gain, double noise_power, double bandwidth_hz) {
  if (!selected) return 0.0;
  return bandwidth_hz * std::log2(1.0 + tx_power * gain / noise_power);
}

inline double shannon_cap_from_snr(double snr_db, double bandwidth_hz) {
  return bandwidth_hz * std::log2(1.0 + db_to_linear(snr_db));
}

/// R = min(E[P] / E[L], R_upp). Throws std::invalid_argument if slot_seconds <= 0.
inline double throughput_estimate(double payload_bits, double slot_seconds, double cap_bps) {
  if (!(slot_seconds > 0)) throw std::invalid_argument("throughput_estimate: slot length must be positive");
  return std::min(payload_bits / slot_seconds, cap_bps);
}

/// Expected slot length for one frame when `contenders` STAs (including the
/// caller) share the channel round-robin: each frame costs an IFS plus its
/// airtime at the Shannon rate.
inline double shared_slot_seconds(double payload_bits, double cap_bps, int contenders, double t_ifs_s) {
  return std::max(contenders, 1) * (t_ifs_s + payload_bits / cap_bps);
}

inline double per_from_snr(double snr_db, const PerCurve& curve = {}) {
  const double z = curve.k * (snr_db - curve.gamma0_db);
  if (z > 700) return 0.0;
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace roamsim::radio
