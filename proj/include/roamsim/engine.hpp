#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "roamsim/contention.hpp"
#include "roamsim/core.hpp"
#include "roamsim/dqn.hpp"
#include "roamsim/log.hpp"
#include "roamsim/policy.hpp"
#include "roamsim/radio.hpp"
#include "roamsim/roaming.hpp"
#include "roamsim/rng.hpp"
#include "roamsim/scanning.hpp"

namespace roamsim::engine {

enum class EventKind { MoveTick, ScanDue, HandoffCheck, AssocComplete, MetricsFlush };

struct Event {
  double time = 0;
  EventKind kind = EventKind::MoveTick;
  int sta = -1;
  std::uint64_t seq = 0;
};

/// Time-ordered queue; equal times pop in insertion order.
class EventQueue {
 public:
  void push(double time, EventKind kind, int sta = -1) { heap_.push(Event{time, kind, sta, next_seq_++}); }
  bool empty() const { return heap_.empty(); }
  const Event& top() const { return heap_.top(); }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time > b.time || (a.time == b.time && a.seq > b.seq);
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

/// Associated STAs per channel (index channel - 1) and the busy flag drawn
/// at the most recent access on each channel.
class ChannelLoad {
 public:
  explicit ChannelLoad(int channels = 1)
      : count_(static_cast<std::size_t>(channels), 0), busy_(static_cast<std::size_t>(channels), 0) {}

  int contenders(int channel) const { return count_.at(static_cast<std::size_t>(channel - 1)); }
  void join(int channel) { ++count_.at(static_cast<std::size_t>(channel - 1)); }
  void leave(int channel) {
    auto& c = count_.at(static_cast<std::size_t>(channel - 1));
    if (c == 0) throw std::logic_error("ChannelLoad: leave on an empty channel");
    --c;
  }
  void set_busy(int channel, bool busy) { busy_.at(static_cast<std::size_t>(channel - 1)) = busy ? 1 : 0; }
  bool busy(int channel) const { return busy_.at(static_cast<std::size_t>(channel - 1)) != 0; }
  int total() const {
    int t = 0;
    for (int c : count_) t += c;
    return t;
  }
  int channels() const { return static_cast<int>(count_.size()); }
  const std::vector<int>& counts() const { return count_; }

 private:
  std::vector<int> count_;
  std::vector<std::uint8_t> busy_;
};

/// K_sta on channel i.
inline int contenders(const ChannelLoad& load, int channel) { return load.contenders(channel); }

struct RateSample {
  double time_s = 0;
  int sta = 0;
  int ap = -1;
  int channel = 0;
  double rate_bps = 0;
};

struct LoadSample {
  double time_s = 0;
  int channel = 1;
  int contenders = 0;
};

/// Everything a run produces. Append-only while the run is in progress.
struct MetricsSink {
  std::vector<roaming::HandoffRecord> handoffs;
  std::vector<RateSample> rates;
  std::vector<LoadSample> load_trace;
  std::vector<int> max_contenders;  // per channel
  int roam_failures = 0;
  int scans = 0;
  int explore_decisions = 0;
  int exploit_decisions = 0;
  double mean_loss = 0;  // over MADAR updates made in this run
  int updates = 0;

  int peak_contenders() const {
    return max_contenders.empty() ? 0 : *std::max_element(max_contenders.begin(), max_contenders.end());
  }
  double mean_association_delay() const {
    if (handoffs.empty()) return 0;
    double s = 0;
    for (const auto& h : handoffs) s += h.association_delay();
    return s / static_cast<double>(handoffs.size());
  }
  double mean_rate_bps() const {
    if (rates.empty()) return 0;
    double s = 0;
    for (const auto& r : rates) s += r.rate_bps;
    return s / static_cast<double>(rates.size());
  }
};

using AgentPool = std::vector<policy::MadarAgent>;

/// One agent per STA, or a single shared agent when share_params is set.
inline AgentPool make_agents(const ScenarioConfig& c) {
  AgentPool pool;
  const int n = c.share_params ? 1 : c.num_stas;
  pool.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool.push_back(policy::make_agent(c, i));
  return pool;
}

struct RunOptions {
  policy::PolicyKind policy = policy::PolicyKind::rssi_greedy;
  std::optional<double> epsilon;  // overrides the configured / scheduled value
  bool learn = true;              // MADAR online training
  const Logger* logger = nullptr;
};

/// Discrete-event roaming simulation over one scenario.
class Simulation {
 public:
  Simulation(ScenarioConfig config, RunOptions options, AgentPool* agents = nullptr)
      : cfg_(std::move(config)), opt_(options), agents_(agents), load_(cfg_.num_channels) {
    validate(cfg_);
    if (opt_.policy == policy::PolicyKind::madar) {
      if (!agents_) throw std::invalid_argument("Simulation: MADAR needs an agent pool");
      const std::size_t needed = cfg_.share_params ? 1 : static_cast<std::size_t>(cfg_.num_stas);
      if (agents_->size() < needed) throw std::invalid_argument("Simulation: agent pool too small");
      const auto sizes = policy::layer_sizes(cfg_);
      for (const auto& a : *agents_) {
        if (a.q.sizes() != sizes) throw std::invalid_argument("Simulation: agent network does not match scenario");
      }
    }
    env_ = scanning::radio_env_from(cfg_);
    scan_timing_ = scanning::timing_from(cfg_);
    roam_timing_ = roaming::timing_from(cfg_);
    constraints_ = roaming::constraints_from(cfg_);
    auto placement = place_grid(cfg_);
    aps_ = std::move(placement.aps);
    stas_.resize(placement.stas.size());
    for (std::size_t i = 0; i < stas_.size(); ++i) stas_[i].node = placement.stas[i];
    metrics_.max_contenders.assign(static_cast<std::size_t>(cfg_.num_channels), 0);
    reserved_.assign(aps_.size(), 0);
    ap_count_.assign(aps_.size(), 0);
    mobility_rng_ = Rng::derive(cfg_.seed, "mobility");
    assoc_rng_ = Rng::derive(cfg_.seed, "association");
    policy_rng_ = Rng::derive(cfg_.seed, "policy");
    phase_rng_ = Rng::derive(cfg_.seed, "scan-phase");
  }

  MetricsSink run() { return run(cfg_.duration_s); }

  MetricsSink run(double duration) {
    duration_ = duration;
    if (cfg_.mobility == Mobility::waypoint && cfg_.speed_mps > 0) {
      for (auto& s : stas_) pick_waypoint(s);
      queue_.push(cfg_.move_tick_s, EventKind::MoveTick);
    }
    for (std::size_t k = 0; k < stas_.size(); ++k) {
      queue_.push(phase_rng_.uniform(0.0, cfg_.scan_interval_s), EventKind::ScanDue, static_cast<int>(k));
    }
    queue_.push(cfg_.rate_sample_s, EventKind::MetricsFlush);

    // The sample falling exactly on the horizon still counts, so a 1 s run
    // reports one rate sample per station.
    const auto due = [this](const Event& e) {
      return e.time < duration_ || (e.time == duration_ && e.kind == EventKind::MetricsFlush);
    };
    while (!queue_.empty() && due(queue_.top())) {
      const Event e = queue_.pop();
      clock_.advance_to(e.time);
      switch (e.kind) {
        case EventKind::MoveTick: on_move_tick(); break;
        case EventKind::ScanDue: on_scan_due(stas_[static_cast<std::size_t>(e.sta)]); break;
        case EventKind::HandoffCheck: on_handoff_check(stas_[static_cast<std::size_t>(e.sta)]); break;
        case EventKind::AssocComplete: on_assoc_complete(stas_[static_cast<std::size_t>(e.sta)]); break;
        case EventKind::MetricsFlush: on_metrics_flush(); break;
      }
    }
    if (metrics_.updates > 0) metrics_.mean_loss = loss_sum_ / metrics_.updates;
    return std::move(metrics_);
  }

  const ChannelLoad& channel_load() const { return load_; }
  const std::vector<ApNode>& aps() const { return aps_; }
  int associated_count() const {
    int n = 0;
    for (const auto& s : stas_) n += s.node.ap.has_value();
    return n;
  }

 private:
  enum class ScanMode { background, handoff };

  struct PendingAssoc {
    int ap = 0;
    int channel = 1;
    roaming::HandoffRecord record;
  };

  struct PendingTransition {
    scanning::StateTable state;
    int action = 0;
    double reward = 0;
  };

  struct StaState {
    StaNode node;
    double tick_time = 0;
    ScanMode mode = ScanMode::background;
    double scan_start = 0;
    double scan_tcs = 0;
    double trigger_time = 0;
    scanning::StateTable scan_table;
    std::vector<std::pair<double, double>> scan_windows;  // for rate accrual
    std::optional<PendingAssoc> pending_assoc;
    std::optional<PendingTransition> pending_transition;
  };

  Vec2 position_at(const StaState& s, double t) const {
    const double dt = t - s.tick_time;
    return {s.node.position.x + s.node.velocity.x * dt, s.node.position.y + s.node.velocity.y * dt};
  }

  /// STAs associated with an AP plus those whose association to it is in flight.
  int occupancy(int ap) const {
    return ap_count_[static_cast<std::size_t>(ap)] + reserved_[static_cast<std::size_t>(ap)];
  }

  scanning::TopologyView topology() const {
    return {aps_, load_.counts(), cfg_.num_channels};
  }

  void pick_waypoint(StaState& s) {
    s.node.waypoint = sample_in_coverage(aps_, cfg_.max_range_m, mobility_rng_);
    const double d = distance(s.node.position, s.node.waypoint);
    if (d <= 0) {
      s.node.velocity = {};
      return;
    }
    s.node.velocity = {(s.node.waypoint.x - s.node.position.x) / d * cfg_.speed_mps,
                       (s.node.waypoint.y - s.node.position.y) / d * cfg_.speed_mps};
  }

  void on_move_tick() {
    const double now = clock_.now();
    for (auto& s : stas_) {
      const double step = cfg_.speed_mps * (now - s.tick_time);
      const double remaining = distance(s.node.position, s.node.waypoint);
      if (remaining <= step) {
        s.node.position = s.node.waypoint;
        s.tick_time = now;
        pick_waypoint(s);
      } else {
        s.node.position = position_at(s, now);
        s.tick_time = now;
      }
    }
    queue_.push(now + cfg_.move_tick_s, EventKind::MoveTick);
  }

  void on_scan_due(StaState& s) {
    const double now = clock_.now();
    const int start = s.node.ap ? aps_[static_cast<std::size_t>(*s.node.ap)].channel : 1;
    auto fs = scanning::full_scan(start, topology(), position_at(s, now), env_, scan_timing_, cfg_.scan_accounting,
                                  s.node.ap);
    ++metrics_.scans;
    s.scan_start = now;
    s.scan_tcs = fs.t_cs;
    s.scan_table = std::move(fs.table);
    s.scan_windows.emplace_back(now, now + fs.t_cs);
    queue_.push(now + fs.t_cs, EventKind::HandoffCheck, s.node.id);
  }

  void on_handoff_check(StaState& s) {
    if (s.mode == ScanMode::handoff) {
      decide(s);
      return;
    }
    const double now = clock_.now();
    finish_transition(s, s.scan_table);
    std::optional<double> rssi;
    if (s.node.ap) rssi = radio::rssi_at(aps_[static_cast<std::size_t>(*s.node.ap)], position_at(s, now), env_.path_loss);
    if (!roaming::handoff_needed(rssi, cfg_.handoff_threshold_dbm)) {
      queue_.push(now + cfg_.scan_interval_s, EventKind::ScanDue, s.node.id);
      return;
    }
    if (s.node.ap) leave(s);
    s.mode = ScanMode::handoff;
    s.trigger_time = s.scan_start;
    queue_.push(now, EventKind::ScanDue, s.node.id);
  }

  /// Rebuilds the handoff scan's rows with the load advertised now.
  scanning::StateTable current_table(const StaState& s, double now) const {
    scanning::StateTable table;
    const auto topo = topology();
    const auto pos = position_at(s, now);
    for (const auto& row : s.scan_table.rows) {
      const auto& ap = aps_[static_cast<std::size_t>(row.ap)];
      if (ap.capacity > 0 && occupancy(ap.id) >= ap.capacity) continue;
      table.rows.push_back(scanning::measure(ap, pos, topo, env_, std::nullopt));
    }
    return table;
  }

  policy::Action choose(const StaState& s, const scanning::StateTable& table) {
    using policy::PolicyKind;
    if (opt_.policy == PolicyKind::madar) {
      auto& agent = (*agents_)[static_cast<std::size_t>(s.node.agent)];
      const double eps = opt_.epsilon.value_or(agent.epsilon_now());
      return policy::madar_select(table, eps, agent, policy_rng_, constraints_);
    }
    const auto feasible = roaming::feasible_candidates(table, constraints_);
    if (!feasible) {
      auto a = policy::select_rssi_greedy(table);
      a.infeasible = true;
      return a;
    }
    if (opt_.policy == PolicyKind::epsilon_greedy) {
      return policy::select_epsilon_greedy(*feasible, opt_.epsilon.value_or(cfg_.epsilon), policy_rng_);
    }
    return policy::select_rssi_greedy(*feasible);
  }

  void decide(StaState& s) {
    const double now = clock_.now();
    auto table = current_table(s, now);
    finish_transition(s, table);
    if (table.empty()) {
      // Nothing audible: stay in handoff mode and rescan later.
      ++metrics_.roam_failures;
      queue_.push(now + cfg_.scan_interval_s, EventKind::ScanDue, s.node.id);
      return;
    }
    const auto action = choose(s, table);
    if (action.branch == roaming::Branch::explore) ++metrics_.explore_decisions;
    else ++metrics_.exploit_decisions;

    const auto* row = table.find(action.ap);
    const int others = load_.contenders(row->channel);
    roaming::AssociationContext ctx;
    ctx.snr_db = row->snr_db;
    ctx.per_curve = constraints_.per_curve;
    ctx.uora = contention::params_for(cfg_, others);
    ctx.busy_prob = contention::busy_probability(cfg_.tau, others);
    const auto outcome = roaming::associate(ctx, roam_timing_, assoc_rng_);
    load_.set_busy(row->channel, others > 0);

    roaming::HandoffRecord rec;
    rec.sta = s.node.id;
    rec.ap = action.ap;
    rec.channel = row->channel;
    rec.t_cs = s.scan_tcs;
    rec.t_ro = outcome.t_ro;
    rec.t_cont = outcome.t_cont;
    rec.total = rec.t_cs + rec.t_ro + rec.t_cont;
    rec.retries = outcome.retries;
    rec.started_s = s.trigger_time;
    rec.time_s = now + outcome.t_ro + outcome.t_cont;
    rec.policy = std::string(policy::to_string(opt_.policy));
    rec.branch = action.branch;
    rec.infeasible = action.infeasible;
    rec.ap_load = others;
    rec.rssi_dbm = row->rssi_dbm;
    rec.snr_db = row->snr_db;
    rec.throughput_bps = row->throughput_bps;

    if (opt_.policy == policy::PolicyKind::madar) {
      s.pending_transition = PendingTransition{table, action.ap, roaming::reward(rec.total, cfg_.t_norm_s)};
    }
    if (opt_.logger && opt_.logger->enabled(LogLevel::debug)) {
      std::ostringstream msg;
      msg << "decision t=" << now << " sta=" << s.node.id << " policy=" << rec.policy
          << " branch=" << roaming::to_string(action.branch) << " ap=" << action.ap << " channel=" << rec.channel
          << " load=" << others << " reward=" << roaming::reward(rec.total, cfg_.t_norm_s)
          << (outcome.success ? "" : " failed");
      opt_.logger->debug(msg.str());
    }

    if (!outcome.success) {
      ++metrics_.roam_failures;
      queue_.push(rec.time_s, EventKind::ScanDue, s.node.id);
      return;
    }
    ++reserved_[static_cast<std::size_t>(action.ap)];
    s.pending_assoc = PendingAssoc{action.ap, row->channel, std::move(rec)};
    queue_.push(now + outcome.t_ro + outcome.t_cont, EventKind::AssocComplete, s.node.id);
  }

  void on_assoc_complete(StaState& s) {
    const double now = clock_.now();
    auto pending = std::move(*s.pending_assoc);
    s.pending_assoc.reset();
    --reserved_[static_cast<std::size_t>(pending.ap)];
    ++ap_count_[static_cast<std::size_t>(pending.ap)];
    s.node.ap = pending.ap;
    load_.join(pending.channel);
    auto& peak = metrics_.max_contenders[static_cast<std::size_t>(pending.channel - 1)];
    peak = std::max(peak, load_.contenders(pending.channel));
    metrics_.load_trace.push_back({now, pending.channel, load_.contenders(pending.channel)});
    metrics_.handoffs.push_back(std::move(pending.record));
    s.mode = ScanMode::background;
    queue_.push(now + cfg_.scan_interval_s, EventKind::ScanDue, s.node.id);
  }

  void leave(StaState& s) {
    const int channel = aps_[static_cast<std::size_t>(*s.node.ap)].channel;
    load_.leave(channel);
    --ap_count_[static_cast<std::size_t>(*s.node.ap)];
    s.node.ap.reset();
    metrics_.load_trace.push_back({clock_.now(), channel, load_.contenders(channel)});
  }

  void finish_transition(StaState& s, const scanning::StateTable& next) {
    if (!s.pending_transition) return;
    auto p = std::move(*s.pending_transition);
    s.pending_transition.reset();
    if (!opt_.learn || opt_.policy != policy::PolicyKind::madar) return;
    auto& agent = (*agents_)[static_cast<std::size_t>(s.node.agent)];
    const auto before = agent.updates;
    policy::madar_step(agent, policy::make_transition(p.state, p.action, p.reward, next, agent.max_aps));
    if (agent.updates != before) {
      loss_sum_ += agent.last_loss;
      ++metrics_.updates;
    }
  }

  void on_metrics_flush() {
    const double now = clock_.now();
    const double window_start = now - cfg_.rate_sample_s;
    for (auto& s : stas_) {
      RateSample sample{now, s.node.id, -1, 0, 0.0};
      if (s.node.ap) {
        const auto& ap = aps_[static_cast<std::size_t>(*s.node.ap)];
        const auto row = scanning::measure(ap, position_at(s, now), topology(), env_, s.node.ap);
        double scanning_time = 0;
        for (const auto& [a, b] : s.scan_windows) {
          scanning_time += std::max(0.0, std::min(b, now) - std::max(a, window_start));
        }
        const double active = std::clamp(1.0 - scanning_time / cfg_.rate_sample_s, 0.0, 1.0);
        sample.ap = ap.id;
        sample.channel = ap.channel;
        sample.rate_bps = row.throughput_bps * active;
      }
      std::erase_if(s.scan_windows, [now](const auto& w) { return w.second <= now; });
      metrics_.rates.push_back(sample);
    }
    queue_.push(now + cfg_.rate_sample_s, EventKind::MetricsFlush);
  }

  ScenarioConfig cfg_;
  RunOptions opt_;
  AgentPool* agents_;
  ChannelLoad load_;
  scanning::RadioEnv env_;
  scanning::ScanTiming scan_timing_;
  roaming::RoamTiming roam_timing_;
  roaming::ConstraintSet constraints_;
  std::vector<ApNode> aps_;
  std::vector<StaState> stas_;
  std::vector<int> reserved_;  // per AP
  std::vector<int> ap_count_;  // per AP
  EventQueue queue_;
  SimClock clock_;
  MetricsSink metrics_;
  Rng mobility_rng_, assoc_rng_, policy_rng_, phase_rng_;
  double duration_ = 0;
  double loss_sum_ = 0;
};

/// Runs one scenario with the given policy for `duration` seconds; the seed
/// replaces the scenario's root seed.
inline MetricsSink run(ScenarioConfig scenario, policy::PolicyKind kind, double duration, std::uint64_t seed,
                       AgentPool* agents = nullptr, RunOptions options = {}) {
  scenario.seed = seed;
  options.policy = kind;
  Simulation sim(std::move(scenario), options, agents);
  return sim.run(duration);
}

inline std::uint64_t episode_seed(std::uint64_t base, int episode) {
  return mix64(base ^ mix64(0x7e57ULL + static_cast<std::uint64_t>(episode)));
}

struct EpisodeStats {
  int episode = 0;
  double mean_association_delay = 0;
  double mean_loss = 0;
  int handoffs = 0;
};

/// Online MADAR training over `episodes` independent runs; agents carry
/// their networks and replay memory from one episode to the next.
inline std::vector<EpisodeStats> train(const ScenarioConfig& scenario, AgentPool& agents, int episodes,
                                       double duration, std::uint64_t base_seed, const Logger* logger = nullptr) {
  std::vector<EpisodeStats> stats;
  for (int e = 0; e < episodes; ++e) {
    RunOptions opt;
    opt.logger = logger;
    auto m = run(scenario, policy::PolicyKind::madar, duration, episode_seed(base_seed, e), &agents, opt);
    stats.push_back({e, m.mean_association_delay(), m.mean_loss, static_cast<int>(m.handoffs.size())});
    if (logger && logger->enabled(LogLevel::info)) {
      std::ostringstream msg;
      msg << "episode " << e << " handoffs=" << m.handoffs.size() << " assoc_delay=" << m.mean_association_delay()
          << " loss=" << m.mean_loss;
      logger->info(msg.str());
    }
  }
  return stats;
}

}  // namespace roamsim::engine
