#pragma once

#include <algorithm>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "roamsim/core.hpp"
#include "roamsim/engine.hpp"

namespace roamsim::report {

/// Bumped whenever a column is added, removed, renamed or reordered.
inline constexpr int kCsvSchemaVersion = 1;

inline constexpr const char* kHandoffColumns =
    "time_s,sta,policy,branch,ap,channel,t_cs_s,t_ro_s,t_cont_s,t_total_s,retries,infeasible";
inline constexpr const char* kRateColumns = "time_s,sta,ap,channel,rate_bps";
inline constexpr const char* kLoadColumns = "time_s,channel,contenders";
inline constexpr const char* kSummaryColumns =
    "policy,num_stas,band,runs,handoffs,assoc_delay_max_s,assoc_delay_min_s,assoc_delay_avg_s,"
    "max_contenders,max_contenders_mean,avg_rate_bps";

inline std::string num(double v) { return detail::format_double(v); }

inline void write_handoffs(std::ostream& os, const std::vector<roaming::HandoffRecord>& records) {
  os << kHandoffColumns << '\n';
  for (const auto& r : records) {
    os << num(r.time_s) << ',' << r.sta << ',' << r.policy << ',' << roaming::to_string(r.branch) << ',' << r.ap
       << ',' << r.channel << ',' << num(r.t_cs) << ',' << num(r.t_ro) << ',' << num(r.t_cont) << ','
       << num(r.total) << ',' << r.retries << ',' << (r.infeasible ? 1 : 0) << '\n';
  }
}

/// Unassociated samples carry ap = -1 and channel = 0.
inline void write_rates(std::ostream& os, const std::vector<engine::RateSample>& rates) {
  os << kRateColumns << '\n';
  for (const auto& r : rates) {
    os << num(r.time_s) << ',' << r.sta << ',' << r.ap << ',' << r.channel << ',' << num(r.rate_bps) << '\n';
  }
}

/// One row per change of a channel's associated-STA count.
inline void write_channel_load(std::ostream& os, const std::vector<engine::LoadSample>& trace) {
  os << kLoadColumns << '\n';
  for (const auto& s : trace) os << num(s.time_s) << ',' << s.channel << ',' << s.contenders << '\n';
}

/// "2.4", "5", or "mixed" depending on where the scenario's APs operate.
inline std::string band_label(const ScenarioConfig& c) {
  bool low = false, high = false;
  for (int m = 0; m < c.num_aps; ++m) {
    (c.band_of(c.channel_of_ap(m)) == Band::ghz2_4 ? low : high) = true;
  }
  if (low && high) return "mixed";
  return std::string(to_string(low ? Band::ghz2_4 : Band::ghz5));
}

struct SummaryRow {
  std::string policy;
  int num_stas = 0;
  std::string band;
  int runs = 0;
  int handoffs = 0;
  double delay_max = 0;
  double delay_min = 0;
  double delay_avg = 0;
  int max_contenders = 0;
  double max_contenders_mean = 0;
  double avg_rate_bps = 0;
};

/// Aggregates the runs of one policy. Delay statistics pool every handoff
/// record of every run; the contender peak is reported both as the maximum
/// and as the mean of the per-run peaks.
inline SummaryRow summarize(std::string policy, const ScenarioConfig& c, const std::vector<engine::MetricsSink>& runs) {
  SummaryRow row;
  row.policy = std::move(policy);
  row.num_stas = c.num_stas;
  row.band = band_label(c);
  row.runs = static_cast<int>(runs.size());
  double delay_sum = 0, peak_sum = 0, rate_sum = 0;
  std::size_t rate_n = 0;
  row.delay_min = std::numeric_limits<double>::infinity();
  for (const auto& m : runs) {
    for (const auto& h : m.handoffs) {
      const double d = h.association_delay();
      row.delay_max = std::max(row.delay_max, d);
      row.delay_min = std::min(row.delay_min, d);
      delay_sum += d;
      ++row.handoffs;
    }
    row.max_contenders = std::max(row.max_contenders, m.peak_contenders());
    peak_sum += m.peak_contenders();
    for (const auto& r : m.rates) rate_sum += r.rate_bps;
    rate_n += m.rates.size();
  }
  if (row.handoffs == 0) row.delay_min = 0;
  else row.delay_avg = delay_sum / row.handoffs;
  if (!runs.empty()) row.max_contenders_mean = peak_sum / static_cast<double>(runs.size());
  if (rate_n > 0) row.avg_rate_bps = rate_sum / static_cast<double>(rate_n);
  return row;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << kSummaryColumns << '\n';
  for (const auto& r : rows) {
    os << r.policy << ',' << r.num_stas << ',' << r.band << ',' << r.runs << ',' << r.handoffs << ','
       << num(r.delay_max) << ',' << num(r.delay_min) << ',' << num(r.delay_avg) << ',' << r.max_contenders << ','
       << num(r.max_contenders_mean) << ',' << num(r.avg_rate_bps) << '\n';
  }
}

}  // namespace roamsim::report
