#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "roamsim/rng.hpp"

namespace roamsim {

/// Malformed scenario text. Carries the 1-based line number when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A well-formed value outside its admissible range. Names the offending key.
class RangeError : public std::runtime_error {
 public:
  RangeError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

enum class Band { ghz2_4, ghz5 };
enum class Layout { linear, grid };
enum class Mobility { waypoint, stationary };
enum class ScanAccounting { fsm, eq3_literal };
enum class EpsilonSchedule { constant, linear };
enum class ExploreRule { rssi, uniform };

inline std::string_view to_string(Band b) { return b == Band::ghz2_4 ? "2.4" : "5"; }
inline std::string_view to_string(ScanAccounting a) { return a == ScanAccounting::fsm ? "fsm" : "eq3-literal"; }

/// Everything one simulation run needs. Fields are stored in the unit named
/// by their scenario-file key (`t_min_ms` holds milliseconds) so that
/// serialize/parse round-trips are exact; modules convert at their boundary.
struct ScenarioConfig {
  // topology
  int num_channels = 5;
  int num_aps = 3;
  int num_stas = 10;
  double bandwidth_hz = 20e6;
  double ap_spacing_m = 25.0;
  double max_range_m = 30.0;
  double scan_interval_s = 0.2;
  std::uint64_t seed = 1;
  std::vector<Band> bands;      // per channel; empty means every channel is 5 GHz
  std::vector<int> ap_channels; // per AP, 1-based; empty means round-robin
  double duration_s = 60.0;
  Layout layout = Layout::linear;
  int grid_columns = 0;  // 0 picks ceil(sqrt(M))
  double tx_power_dbm = 20.0;
  int ap_capacity = 0;   // 0 = unlimited

  // mobility and sampling
  Mobility mobility = Mobility::waypoint;
  double speed_mps = 1.0;
  double move_tick_s = 0.1;
  double rate_sample_s = 1.0;

  // radio
  double pl0_db = 46.67;
  double pl_exponent = 4.0;
  double noise_floor_dbm = -101.0;
  double interference_db = 0.0;
  double per_k = 1.0;
  double per_gamma0_db = 5.0;
  double sensitivity_dbm = -94.0;
  int payload_bytes = 1500;

  // scanning
  double t_min_ms = 10.0;
  double t_max_ms = 100.0;
  double t_pb_ms = 1.0;
  double t_sw_ms = 5.0;
  ScanAccounting scan_accounting = ScanAccounting::fsm;

  // contention
  double tau = 0.25;
  int w0 = 16;
  int max_stage = 6;
  double t_ifs_us = 16.0;
  double slot_us = 9.0;

  // roaming
  double t_au_ms = 5.0;
  double t_as_ms = 5.0;
  double assoc_timeout_ms = 100.0;
  int max_retries = 3;
  double handoff_threshold_dbm = -85.0;
  double r_thr_bps = 1e6;
  double per_max = 0.001;
  double p_max_dbm = 23.0;
  double t_norm_s = 1.0;

  // learning
  double learning_rate = 0.3;
  double discount = 0.9;
  int batch_size = 32;
  int target_sync = 100;
  int buffer_capacity = 10000;
  std::vector<int> hidden_layers{16, 32, 64, 128};
  double epsilon = 0.3;
  double epsilon_min = 0.0;
  EpsilonSchedule epsilon_schedule = EpsilonSchedule::constant;
  int epsilon_decay_steps = 1000;
  ExploreRule explore = ExploreRule::rssi;
  bool share_params = false;

  bool operator==(const ScenarioConfig&) const = default;

  Band band_of(int channel) const {
    return bands.empty() ? Band::ghz5 : bands.at(static_cast<std::size_t>(channel - 1));
  }
  int channel_of_ap(int ap) const {
    return ap_channels.empty() ? (ap % num_channels) + 1 : ap_channels.at(static_cast<std::size_t>(ap));
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

inline std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

struct KeySpec {
  std::string_view key;
  std::function<bool(ScenarioConfig&, std::string_view)> set;  // false on malformed value
  std::function<std::string(const ScenarioConfig&)> get;
};

template <class T>
KeySpec number_key(std::string_view key, T ScenarioConfig::*member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view v) {
            auto parsed = parse_number<T>(v);
            if (!parsed) return false;
            c.*member = *parsed;
            return true;
          },
          [member](const ScenarioConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <class E>
KeySpec enum_key(std::string_view key, E ScenarioConfig::*member, std::vector<std::pair<std::string_view, E>> names) {
  return {key,
          [member, names](ScenarioConfig& c, std::string_view v) {
            for (const auto& [name, value] : names) {
              if (name == v) {
                c.*member = value;
                return true;
              }
            }
            return false;
          },
          [member, names](const ScenarioConfig& c) {
            for (const auto& [name, value] : names) {
              if (value == c.*member) return std::string(name);
            }
            return std::string{};
          }};
}

inline KeySpec int_list_key(std::string_view key, std::vector<int> ScenarioConfig::*member) {
  return {key,
          [member](ScenarioConfig& c, std::string_view v) {
            std::vector<int> out;
            for (auto item : split_list(v)) {
              auto parsed = parse_number<int>(item);
              if (!parsed) return false;
              out.push_back(*parsed);
            }
            c.*member = std::move(out);
            return true;
          },
          [member](const ScenarioConfig& c) {
            std::string out;
            for (std::size_t i = 0; i < (c.*member).size(); ++i) {
              if (i) out += ',';
              out += std::to_string((c.*member)[i]);
            }
            return out;
          }};
}

inline const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    using C = ScenarioConfig;
    std::vector<KeySpec> t;
    t.push_back(number_key("num_channels", &C::num_channels));
    t.push_back(number_key("num_aps", &C::num_aps));
    t.push_back(number_key("num_stas", &C::num_stas));
    t.push_back(number_key("bandwidth_hz", &C::bandwidth_hz));
    t.push_back(number_key("ap_spacing_m", &C::ap_spacing_m));
    t.push_back(number_key("max_range_m", &C::max_range_m));
    t.push_back(number_key("scan_interval_s", &C::scan_interval_s));
    t.push_back(number_key("seed", &C::seed));
    t.push_back({"bands",
                 [](C& c, std::string_view v) {
                   std::vector<Band> out;
                   for (auto item : split_list(v)) {
                     if (item == "2.4") out.push_back(Band::ghz2_4);
                     else if (item == "5") out.push_back(Band::ghz5);
                     else return false;
                   }
                   c.bands = std::move(out);
                   return true;
                 },
                 [](const C& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.bands.size(); ++i) {
                     if (i) out += ',';
                     out += to_string(c.bands[i]);
                   }
                   return out;
                 }});
    t.push_back(int_list_key("ap_channels", &C::ap_channels));
    t.push_back(number_key("duration_s", &C::duration_s));
    t.push_back(enum_key<Layout>("layout", &C::layout, {{"linear", Layout::linear}, {"grid", Layout::grid}}));
    t.push_back(number_key("grid_columns", &C::grid_columns));
    t.push_back(number_key("tx_power_dbm", &C::tx_power_dbm));
    t.push_back(number_key("ap_capacity", &C::ap_capacity));
    t.push_back(enum_key<Mobility>("mobility", &C::mobility,
                                   {{"waypoint", Mobility::waypoint}, {"stationary", Mobility::stationary}}));
    t.push_back(number_key("speed_mps", &C::speed_mps));
    t.push_back(number_key("move_tick_s", &C::move_tick_s));
    t.push_back(number_key("rate_sample_s", &C::rate_sample_s));
    t.push_back(number_key("pl0_db", &C::pl0_db));
    t.push_back(number_key("pl_exponent", &C::pl_exponent));
    t.push_back(number_key("noise_floor_dbm", &C::noise_floor_dbm));
    t.push_back(number_key("interference_db", &C::interference_db));
    t.push_back(number_key("per_k", &C::per_k));
    t.push_back(number_key("per_gamma0_db", &C::per_gamma0_db));
    t.push_back(number_key("sensitivity_dbm", &C::sensitivity_dbm));
    t.push_back(number_key("payload_bytes", &C::payload_bytes));
    t.push_back(number_key("t_min_ms", &C::t_min_ms));
    t.push_back(number_key("t_max_ms", &C::t_max_ms));
    t.push_back(number_key("t_pb_ms", &C::t_pb_ms));
    t.push_back(number_key("t_sw_ms", &C::t_sw_ms));
    t.push_back(enum_key<ScanAccounting>("scan_accounting", &C::scan_accounting,
                                         {{"fsm", ScanAccounting::fsm}, {"eq3-literal", ScanAccounting::eq3_literal}}));
    t.push_back(number_key("tau", &C::tau));
    t.push_back(number_key("w0", &C::w0));
    t.push_back(number_key("max_stage", &C::max_stage));
    t.push_back(number_key("t_ifs_us", &C::t_ifs_us));
    t.push_back(number_key("slot_us", &C::slot_us));
    t.push_back(number_key("t_au_ms", &C::t_au_ms));
    t.push_back(number_key("t_as_ms", &C::t_as_ms));
    t.push_back(number_key("assoc_timeout_ms", &C::assoc_timeout_ms));
    t.push_back(number_key("max_retries", &C::max_retries));
    t.push_back(number_key("handoff_threshold_dbm", &C::handoff_threshold_dbm));
    t.push_back(number_key("r_thr_bps", &C::r_thr_bps));
    t.push_back(number_key("per_max", &C::per_max));
    t.push_back(number_key("p_max_dbm", &C::p_max_dbm));
    t.push_back(number_key("t_norm_s", &C::t_norm_s));
    t.push_back(number_key("learning_rate", &C::learning_rate));
    t.push_back(number_key("discount", &C::discount));
    t.push_back(number_key("batch_size", &C::batch_size));
    t.push_back(number_key("target_sync", &C::target_sync));
    t.push_back(number_key("buffer_capacity", &C::buffer_capacity));
    t.push_back(int_list_key("hidden_layers", &C::hidden_layers));
    t.push_back(number_key("epsilon", &C::epsilon));
    t.push_back(number_key("epsilon_min", &C::epsilon_min));
    t.push_back(enum_key<EpsilonSchedule>("epsilon_schedule", &C::epsilon_schedule,
                                          {{"constant", EpsilonSchedule::constant}, {"linear", EpsilonSchedule::linear}}));
    t.push_back(number_key("epsilon_decay_steps", &C::epsilon_decay_steps));
    t.push_back(enum_key<ExploreRule>("explore", &C::explore, {{"rssi", ExploreRule::rssi}, {"uniform", ExploreRule::uniform}}));
    t.push_back({"share_params",
                 [](C& c, std::string_view v) {
                   if (v == "true" || v == "1") c.share_params = true;
                   else if (v == "false" || v == "0") c.share_params = false;
                   else return false;
                   return true;
                 },
                 [](const C& c) { return std::string(c.share_params ? "true" : "false"); }});
    return t;
  }();
  return table;
}

inline void require(bool ok, std::string_view key, const std::string& what) {
  if (!ok) throw RangeError(std::string(key), what);
}

}  // namespace detail

/// Names of every recognised scenario key, in serialization order.
inline std::vector<std::string_view> scenario_keys() {
  std::vector<std::string_view> out;
  for (const auto& spec : detail::key_table()) out.push_back(spec.key);
  return out;
}

/// Throws RangeError naming the first field outside its admissible range.
inline void validate(const ScenarioConfig& c) {
  using detail::require;
  require(c.num_channels >= 1, "num_channels", "must be >= 1");
  require(c.num_aps >= 1, "num_aps", "must be >= 1");
  require(c.num_stas >= 1, "num_stas", "must be >= 1");
  require(c.bandwidth_hz > 0, "bandwidth_hz", "must be > 0");
  require(c.ap_spacing_m > 0, "ap_spacing_m", "must be > 0");
  require(c.max_range_m > 0, "max_range_m", "must be > 0");
  require(c.scan_interval_s > 0, "scan_interval_s", "must be > 0");
  require(c.bands.empty() || static_cast<int>(c.bands.size()) == c.num_channels, "bands",
          "needs one entry per channel");
  require(c.ap_channels.empty() || static_cast<int>(c.ap_channels.size()) == c.num_aps, "ap_channels",
          "needs one entry per AP");
  for (int ch : c.ap_channels) require(ch >= 1 && ch <= c.num_channels, "ap_channels", "channel outside [1, N]");
  require(c.duration_s >= 0, "duration_s", "must be >= 0");
  require(c.grid_columns >= 0, "grid_columns", "must be >= 0");
  require(c.p_max_dbm >= 0, "p_max_dbm", "must be >= 0");
  require(c.tx_power_dbm >= 0 && c.tx_power_dbm <= c.p_max_dbm, "tx_power_dbm", "must lie in [0, p_max_dbm]");
  require(c.ap_capacity >= 0, "ap_capacity", "must be >= 0");
  require(c.speed_mps >= 0, "speed_mps", "must be >= 0");
  require(c.move_tick_s > 0, "move_tick_s", "must be > 0");
  require(c.rate_sample_s > 0, "rate_sample_s", "must be > 0");
  require(c.pl_exponent > 0, "pl_exponent", "must be > 0");
  require(c.per_k >= 0, "per_k", "must be >= 0");
  require(c.payload_bytes > 0, "payload_bytes", "must be > 0");
  require(c.t_min_ms >= 0, "t_min_ms", "must be >= 0");
  require(c.t_max_ms > c.t_min_ms, "t_max_ms", "must exceed t_min_ms");
  require(c.t_pb_ms >= 0, "t_pb_ms", "must be >= 0");
  require(c.t_sw_ms >= 0, "t_sw_ms", "must be >= 0");
  require(c.tau >= 0 && c.tau <= 1, "tau", "must lie in [0, 1]");
  require(c.w0 >= 1, "w0", "must be >= 1");
  require(c.max_stage >= 0 && c.max_stage <= 30, "max_stage", "must lie in [0, 30]");
  require(c.t_ifs_us >= 0, "t_ifs_us", "must be >= 0");
  require(c.slot_us >= 0, "slot_us", "must be >= 0");
  require(c.t_au_ms >= 0, "t_au_ms", "must be >= 0");
  require(c.t_as_ms >= 0, "t_as_ms", "must be >= 0");
  require(c.assoc_timeout_ms > 0, "assoc_timeout_ms", "must be > 0");
  require(c.max_retries >= 0, "max_retries", "must be >= 0");
  require(c.r_thr_bps >= 0, "r_thr_bps", "must be >= 0");
  require(c.per_max > 0 && c.per_max < 1, "per_max", "must lie in (0, 1)");
  require(c.t_norm_s > 0, "t_norm_s", "must be > 0");
  require(c.learning_rate > 0, "learning_rate", "must be > 0");
  require(c.discount >= 0 && c.discount < 1, "discount", "must lie in [0, 1)");
  require(c.batch_size >= 1, "batch_size", "must be >= 1");
  require(c.target_sync >= 1, "target_sync", "must be >= 1");
  require(c.buffer_capacity >= c.batch_size, "buffer_capacity", "must be >= batch_size");
  require(!c.hidden_layers.empty(), "hidden_layers", "must list at least one layer");
  for (int w : c.hidden_layers) require(w >= 1, "hidden_layers", "widths must be >= 1");
  require(c.epsilon >= 0 && c.epsilon <= 1, "epsilon", "must lie in [0, 1]");
  require(c.epsilon_min >= 0 && c.epsilon_min <= c.epsilon, "epsilon_min", "must lie in [0, epsilon]");
  require(c.epsilon_decay_steps >= 1, "epsilon_decay_steps", "must be >= 1");
}

/// Parses the line-based `key = value` scenario format. `#` starts a
/// comment; blank lines are ignored; unknown keys are errors. Missing keys
/// keep their defaults. The result is validated.
inline ScenarioConfig load_scenario(std::string_view text) {
  ScenarioConfig config;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));

    const auto& table = detail::key_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& s) { return s.key == key; });
    if (it == table.end()) throw ConfigError(line_no, "unknown key '" + std::string(key) + "'");
    if (!it->set(config, value)) {
      throw ConfigError(line_no, "malformed value '" + std::string(value) + "' for " + std::string(key));
    }
  }
  validate(config);
  return config;
}

/// Inverse of load_scenario: every key, one per line, shortest round-trip
/// decimal for reals.
inline std::string to_text(const ScenarioConfig& config) {
  std::string out;
  for (const auto& spec : detail::key_table()) {
    out += spec.key;
    out += " = ";
    out += spec.get(config);
    out += '\n';
  }
  return out;
}

struct Vec2 {
  double x = 0;
  double y = 0;
  bool operator==(const Vec2&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct ApNode {
  int id = 0;
  Vec2 position;
  int channel = 1;           // 1-based
  double tx_power_dbm = 20;  // within [0, p_max]
  int capacity = 0;          // max associated STAs, 0 = unlimited
};

struct StaNode {
  int id = 0;
  Vec2 position;
  Vec2 velocity;
  Vec2 waypoint;
  std::optional<int> ap;  // associated AP id
  int agent = 0;
};

/// Monotonic simulation time in seconds.
class SimClock {
 public:
  double now() const noexcept { return now_; }
  void advance_to(double t) {
    if (t < now_) throw std::logic_error("SimClock: time moved backwards");
    now_ = t;
  }

 private:
  double now_ = 0.0;
};

struct Placement {
  std::vector<ApNode> aps;
  std::vector<StaNode> stas;
};

inline bool in_coverage(Vec2 p, const std::vector<ApNode>& aps, double range) {
  return std::any_of(aps.begin(), aps.end(), [&](const ApNode& ap) { return distance(p, ap.position) <= range; });
}

/// Uniform point in the union of the APs' coverage disks (rejection sampling
/// over the bounding box).
inline Vec2 sample_in_coverage(const std::vector<ApNode>& aps, double range, Rng& rng) {
  double lo_x = aps.front().position.x, hi_x = lo_x, lo_y = aps.front().position.y, hi_y = lo_y;
  for (const auto& ap : aps) {
    lo_x = std::min(lo_x, ap.position.x);
    hi_x = std::max(hi_x, ap.position.x);
    lo_y = std::min(lo_y, ap.position.y);
    hi_y = std::max(hi_y, ap.position.y);
  }
  for (;;) {
    Vec2 p{rng.uniform(lo_x - range, hi_x + range), rng.uniform(lo_y - range, hi_y + range)};
    if (in_coverage(p, aps, range)) return p;
  }
}

inline std::vector<ApNode> place_aps(const ScenarioConfig& config) {
  std::vector<ApNode> aps;
  const int columns = config.layout == Layout::linear
                          ? config.num_aps
                          : (config.grid_columns > 0 ? config.grid_columns
                                                     : static_cast<int>(std::ceil(std::sqrt(config.num_aps))));
  for (int m = 0; m < config.num_aps; ++m) {
    ApNode ap;
    ap.id = m;
    ap.position = {(m % columns) * config.ap_spacing_m, (m / columns) * config.ap_spacing_m};
    ap.channel = config.channel_of_ap(m);
    ap.tx_power_dbm = config.tx_power_dbm;
    ap.capacity = config.ap_capacity;
    aps.push_back(ap);
  }
  return aps;
}

/// APs on a line (or grid) with the configured spacing; STAs uniformly at
/// random inside the coverage union. Pure in (config, config.seed).
inline Placement place_grid(const ScenarioConfig& config) {
  Placement out;
  out.aps = place_aps(config);
  Rng rng = Rng::derive(config.seed, "placement");
  for (int k = 0; k < config.num_stas; ++k) {
    StaNode sta;
    sta.id = k;
    sta.position = sample_in_coverage(out.aps, config.max_range_m, rng);
    sta.waypoint = sta.position;
    sta.agent = config.share_params ? 0 : k;
    out.stas.push_back(sta);
  }
  return out;
}

}  // namespace roamsim
