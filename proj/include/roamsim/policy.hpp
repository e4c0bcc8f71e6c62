#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "roamsim/core.hpp"
#include "roamsim/dqn.hpp"
#include "roamsim/roaming.hpp"
#include "roamsim/scanning.hpp"

namespace roamsim::policy {

using roaming::Branch;
using scanning::StateTable;

class NoCandidateError : public std::runtime_error {
 public:
  NoCandidateError() : std::runtime_error("no candidate AP in state table") {}
};

enum class PolicyKind { rssi_greedy, epsilon_greedy, madar };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::epsilon_greedy: return "eps";
    case PolicyKind::madar: return "madar";
    default: return "rssi";
  }
}

inline std::optional<PolicyKind> parse_policy(std::string_view name) {
  if (name == "rssi") return PolicyKind::rssi_greedy;
  if (name == "eps") return PolicyKind::epsilon_greedy;
  if (name == "madar") return PolicyKind::madar;
  return std::nullopt;
}

/// Target AP and its operating channel b_t.
struct Action {
  int row = 0;
  int ap = 0;
  int channel = 1;
  Branch branch = Branch::greedy;
  bool infeasible = false;
};

inline Action action_for(const StateTable& table, std::size_t row, Branch branch) {
  const auto& r = table.rows.at(row);
  return {static_cast<int>(row), r.ap, r.channel, branch, false};
}

/// Strongest RSSI; ties go to the lowest AP id.
inline Action select_rssi_greedy(const StateTable& table) {
  if (table.empty()) throw NoCandidateError();
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& a = table.rows[i];
    const auto& b = table.rows[best];
    if (a.rssi_dbm > b.rssi_dbm || (a.rssi_dbm == b.rssi_dbm && a.ap < b.ap)) best = i;
  }
  return action_for(table, best, Branch::greedy);
}

/// With probability epsilon a uniformly random row, otherwise the
/// strongest-RSSI row. One Bernoulli draw is consumed per call.
inline Action select_epsilon_greedy(const StateTable& table, double epsilon, Rng& rng) {
  if (table.empty()) throw NoCandidateError();
  if (rng.bernoulli(epsilon)) {
    return action_for(table, static_cast<std::size_t>(rng.below(table.size())), Branch::explore);
  }
  auto a = select_rssi_greedy(table);
  a.branch = Branch::exploit;
  return a;
}

/// Min-max ranges used to scale the state features.
struct StateScaling {
  double rssi_lo_dbm = -95.0;
  double rssi_hi_dbm = -20.0;
  double snr_lo_db = 0.0;
  double snr_hi_db = 80.0;
};

inline constexpr int kFeatures = 3;
inline constexpr double kAbsent = -1.0;

inline double scale(double v, double lo, double hi) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); }

/// Flattens a state table into `max_aps` slots of (throughput, RSSI, SNR),
/// slot = AP id. Throughput is expressed as a fraction of the link's own
/// Shannon cap. Undiscovered APs are filled with -1.
inline std::vector<double> encode_state(const StateTable& table, int max_aps, const StateScaling& s = {}) {
  std::vector<double> out(static_cast<std::size_t>(max_aps * kFeatures), kAbsent);
  for (const auto& row : table.rows) {
    if (row.ap < 0 || row.ap >= max_aps) continue;
    auto* slot = out.data() + row.ap * kFeatures;
    slot[0] = row.shannon_bps > 0 ? std::clamp(row.throughput_bps / row.shannon_bps, 0.0, 1.0) : 0.0;
    slot[1] = scale(row.rssi_dbm, s.rssi_lo_dbm, s.rssi_hi_dbm);
    slot[2] = scale(row.snr_db, s.snr_lo_db, s.snr_hi_db);
  }
  return out;
}

inline std::vector<std::uint8_t> action_mask(const StateTable& table, int max_aps) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(max_aps), 0);
  for (const auto& row : table.rows) {
    if (row.ap >= 0 && row.ap < max_aps) mask[static_cast<std::size_t>(row.ap)] = 1;
  }
  return mask;
}

struct EpsilonParams {
  double start = 0.3;
  double min = 0.0;
  EpsilonSchedule schedule = EpsilonSchedule::constant;
  int decay_steps = 1000;
};

inline double current_epsilon(const EpsilonParams& p, std::uint64_t step) {
  if (p.schedule == EpsilonSchedule::constant) return p.start;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(p.decay_steps));
  return p.start + (p.min - p.start) * frac;
}

/// One macro-agent: Q-network, target network and replay memory.
struct MadarAgent {
  dqn::Mlp q;
  dqn::Mlp target;
  dqn::ReplayBuffer buffer;
  dqn::DqnHyper hyper;
  EpsilonParams epsilon;
  ExploreRule explore = ExploreRule::rssi;
  int max_aps = 1;
  Rng replay_rng;
  std::uint64_t steps = 0;
  std::uint64_t updates = 0;
  double last_loss = 0;

  MadarAgent(dqn::Mlp net, const dqn::DqnHyper& h, int aps, Rng replay)
      : q(std::move(net)), target(q), buffer(static_cast<std::size_t>(h.capacity)), hyper(h), max_aps(aps),
        replay_rng(replay) {}

  double epsilon_now() const { return current_epsilon(epsilon, steps); }
};

inline std::vector<int> layer_sizes(const ScenarioConfig& c) {
  std::vector<int> sizes{c.num_aps * kFeatures};
  sizes.insert(sizes.end(), c.hidden_layers.begin(), c.hidden_layers.end());
  sizes.push_back(c.num_aps);
  return sizes;
}

inline dqn::DqnHyper hyper_from(const ScenarioConfig& c) {
  return {c.learning_rate, c.discount, c.batch_size, c.target_sync, c.buffer_capacity};
}

/// Fresh agent seeded from the root seed and its index.
inline MadarAgent make_agent(const ScenarioConfig& c, int index) {
  Rng init = Rng::derive(c.seed, "dqn-init", static_cast<std::uint64_t>(index));
  MadarAgent agent(dqn::Mlp(layer_sizes(c), init), hyper_from(c), c.num_aps,
                   Rng::derive(c.seed, "replay", static_cast<std::uint64_t>(index)));
  agent.epsilon = {c.epsilon, c.epsilon_min, c.epsilon_schedule, c.epsilon_decay_steps};
  agent.explore = c.explore;
  return agent;
}

/// Exploration/exploitation step of the agent. Candidates are first
/// filtered by the constraint set; with probability epsilon the exploration
/// rule picks among them (best RSSI by default), otherwise the target
/// network's argmax over the feasible APs. An empty feasible set falls back
/// to the unconstrained best-RSSI row, flagged infeasible.
inline Action madar_select(const StateTable& table, double epsilon, const MadarAgent& agent, Rng& rng,
                           const roaming::ConstraintSet& constraints) {
  if (table.empty()) throw NoCandidateError();
  const auto feasible = roaming::feasible_candidates(table, constraints);
  if (!feasible) {
    auto a = select_rssi_greedy(table);
    a.infeasible = true;
    return a;
  }
  if (rng.bernoulli(epsilon)) {
    Action a = agent.explore == ExploreRule::uniform
                   ? action_for(*feasible, static_cast<std::size_t>(rng.below(feasible->size())), Branch::explore)
                   : select_rssi_greedy(*feasible);
    a.branch = Branch::explore;
    return a;
  }
  const auto q = agent.target.forward(encode_state(table, agent.max_aps));
  const auto mask = action_mask(*feasible, agent.max_aps);
  const int best = dqn::masked_argmax(q, mask);
  const auto* row = feasible->find(best);
  Action a{0, row->ap, row->channel, Branch::exploit, false};
  for (std::size_t i = 0; i < feasible->size(); ++i) {
    if (feasible->rows[i].ap == best) a.row = static_cast<int>(i);
  }
  return a;
}

/// Stores the transition, trains once the buffer holds a batch, and copies
/// the Q-network into the target every `target_sync` steps.
inline void madar_step(MadarAgent& agent, dqn::Transition transition) {
  agent.buffer.push(std::move(transition));
  ++agent.steps;
  if (agent.buffer.size() >= static_cast<std::size_t>(agent.hyper.batch_size)) {
    agent.last_loss = dqn::train_step(agent.q, agent.target, agent.buffer, agent.hyper, agent.replay_rng);
    ++agent.updates;
  }
  if (agent.steps % static_cast<std::uint64_t>(agent.hyper.target_sync) == 0) dqn::sync_target(agent.q, agent.target);
}

inline dqn::Transition make_transition(const StateTable& state, int action, double reward, const StateTable& next,
                                       int max_aps, bool terminal = false) {
  dqn::Transition t;
  t.state = encode_state(state, max_aps);
  t.next_state = encode_state(next, max_aps);
  t.action = action;
  t.reward = reward;
  t.terminal = terminal;
  t.next_mask = action_mask(next, max_aps);
  return t;
}

}  // namespace roamsim::policy
