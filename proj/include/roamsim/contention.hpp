#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "roamsim/core.hpp"
#include "roamsim/rng.hpp"

namespace roamsim::contention {

class ContentionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// UORA random-access inputs.
struct UoraParams {
  double tau = 0.25;             // per-stage transmit probability
  double collision_prob = 0.0;   // p_c
  int contenders = 1;            // K_sta
  int w0 = 16;                   // minimum contention window, slots
  int max_stage = 6;             // U
  double t_ifs_s = 16e-6;
  double slot_s = 9e-6;
};

struct ContentionResult {
  double success_prob = 1;     // P_s
  double expected_stages = 1;  // E[D_s]
  double expected_backoff = 0; // E[T_BO], slots
  double delay_s = 0;          // T_cont
};

/// p_c: probability that at least one of the other K_sta - 1 stations
/// transmits in the same RU.
inline double collision_prob(double tau, int contenders) {
  return 1.0 - std::pow(1.0 - tau, std::max(contenders - 1, 0));
}

/// P(channel busy) as seen by a station joining `others` associated stations.
inline double busy_probability(double tau, int others) { return 1.0 - std::pow(1.0 - tau, std::max(others, 0)); }

/// P_s = 1 - [1 - tau (1 - p_c)]^K_sta.
inline double success_prob(double tau, double pc, int contenders) {
  const double ps = 1.0 - std::pow(1.0 - tau * (1.0 - pc), contenders);
  if (!(ps > 0.0)) throw ContentionError("contention never succeeds (P_s = 0)");
  return ps;
}

/// E[D_s] = 1 / P_s.
inline double expected_stages(double ps) {
  if (!(ps > 0.0 && ps <= 1.0)) throw ContentionError("P_s must lie in (0, 1]");
  return 1.0 / ps;
}

/// E[T_BO] in slots: (W0 - 1)/2 + sum_{i=1..U} (1 - P_s)^i (W0 2^i - 1)/2.
inline double expected_backoff(int w0, int max_stage, double ps) {
  double total = (w0 - 1) / 2.0;
  double reach = 1.0;
  for (int i = 1; i <= max_stage; ++i) {
    reach *= (1.0 - ps);
    total += reach * (std::ldexp(static_cast<double>(w0), i) - 1.0) / 2.0;
  }
  return total;
}

inline ContentionResult analyze(const UoraParams& p) {
  ContentionResult r;
  r.success_prob = success_prob(p.tau, p.collision_prob, p.contenders);
  r.expected_stages = expected_stages(r.success_prob);
  r.expected_backoff = expected_backoff(p.w0, p.max_stage, r.success_prob);
  r.delay_s = r.expected_stages * p.t_ifs_s + r.expected_backoff * p.slot_s;
  return r;
}

/// T_cont: T_IFS on an idle channel, otherwise E[D_s] T_IFS + E[T_BO] slot.
/// Backoff is counted in slots and converted with the slot time.
inline double contention_delay(bool channel_idle, const UoraParams& p) {
  if (channel_idle) return p.t_ifs_s;
  return analyze(p).delay_s;
}

/// Parameters for a station joining a channel that already carries `others`
/// associated stations; p_c follows from tau and K_sta.
inline UoraParams params_for(const ScenarioConfig& c, int others) {
  UoraParams p;
  p.tau = c.tau;
  p.contenders = others + 1;
  p.collision_prob = collision_prob(c.tau, p.contenders);
  p.w0 = c.w0;
  p.max_stage = c.max_stage;
  p.t_ifs_s = c.t_ifs_us * 1e-6;
  p.slot_s = c.slot_us * 1e-6;
  return p;
}

/// One realisation of the busy-channel contention process: a geometric
/// number of stages with per-stage success P_s, a uniform backoff in
/// [0, W0 2^i - 1] slots drawn at each stage i <= U that is entered.
struct ContentionSample {
  std::uint64_t stages = 1;
  std::uint64_t backoff_slots = 0;
};

inline ContentionSample sample_contention(const UoraParams& p, double ps, Rng& rng) {
  ContentionSample s;
  s.stages = rng.geometric(ps);
  const std::uint64_t drawn = std::min<std::uint64_t>(s.stages, static_cast<std::uint64_t>(p.max_stage) + 1);
  for (std::uint64_t i = 0; i < drawn; ++i) {
    const std::uint64_t window = static_cast<std::uint64_t>(p.w0) << i;
    s.backoff_slots += rng.below(window);
  }
  return s;
}

/// Contention attempt as the engine sees it: the frame is dropped once it
/// needs more than U + 1 stages (the retry limit).
struct ContentionDraw {
  double seconds = 0;
  std::uint64_t stages = 1;
  bool dropped = false;
};

inline ContentionDraw draw_contention(bool channel_idle, const UoraParams& p, Rng& rng) {
  if (channel_idle) return {p.t_ifs_s, 1, false};
  const double ps = success_prob(p.tau, p.collision_prob, p.contenders);
  const auto s = sample_contention(p, ps, rng);
  const auto limit = static_cast<std::uint64_t>(p.max_stage) + 1;
  ContentionDraw d;
  d.dropped = s.stages > limit;
  d.stages = std::min(s.stages, limit);
  d.seconds = static_cast<double>(d.stages) * p.t_ifs_s + static_cast<double>(s.backoff_slots) * p.slot_s;
  return d;
}

struct OracleResult {
  double mean_stages = 0;
  double mean_backoff = 0;  // slots
  double se_stages = 0;     // standard error of the mean
  double se_backoff = 0;
};

/// Monte-Carlo estimate of E[D_s] and E[T_BO]. Independent of analyze():
/// it only shares the per-stage success probability.
inline OracleResult mc_contention_oracle(const UoraParams& p, std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw std::invalid_argument("mc_contention_oracle: trials must be >= 1");
  const double ps = success_prob(p.tau, p.collision_prob, p.contenders);
  Rng rng = Rng::derive(seed, "contention-oracle");
  // Welford accumulators.
  double mean_d = 0, m2_d = 0, mean_b = 0, m2_b = 0;
  for (std::uint64_t n = 1; n <= trials; ++n) {
    const auto s = sample_contention(p, ps, rng);
    const double d = static_cast<double>(s.stages);
    const double b = static_cast<double>(s.backoff_slots);
    const double dd = d - mean_d;
    mean_d += dd / static_cast<double>(n);
    m2_d += dd * (d - mean_d);
    const double db = b - mean_b;
    mean_b += db / static_cast<double>(n);
    m2_b += db * (b - mean_b);
  }
  OracleResult r;
  r.mean_stages = mean_d;
  r.mean_backoff = mean_b;
  const double n = static_cast<double>(trials);
  if (trials > 1) {
    r.se_stages = std::sqrt(m2_d / (n - 1) / n);
    r.se_backoff = std::sqrt(m2_b / (n - 1) / n);
  }
  return r;
}

}  // namespace roamsim::contention
