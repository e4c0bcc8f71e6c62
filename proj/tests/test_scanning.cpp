#include <gtest/gtest.h>

#include <set>

#include "roamsim/scanning.hpp"

using namespace roamsim;
using namespace roamsim::scanning;

namespace {

ApNode make_ap(int id, Vec2 pos, int channel) {
  ApNode ap;
  ap.id = id;
  ap.position = pos;
  ap.channel = channel;
  return ap;
}

const RadioEnv kEnv = radio_env_from(ScenarioConfig{});
const ScanTiming kTiming{};

}  // namespace

TEST(ScanChannel, EmptyChannelDwellsSixteenMs) {
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 1)};
  const TopologyView topo{aps, {}, 5};
  const auto r = scan_channel(2, topo, {0, 0}, kEnv, kTiming);
  EXPECT_TRUE(r.rows.empty());
  EXPECT_NEAR(r.dwell_s, 0.016, 1e-15);
}

TEST(ScanChannel, TwoRespondingApsDwellHundredSixteenMs) {
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 3), make_ap(1, {10, 0}, 3)};
  const TopologyView topo{aps, {}, 5};
  const auto r = scan_channel(3, topo, {5, 0}, kEnv, kTiming);
  EXPECT_EQ(r.rows.size(), 2u);
  EXPECT_NEAR(r.dwell_s, 0.116, 1e-15);
}

TEST(ScanChannel, OutOfRangeApCountsAsEmpty) {
  // -94 dBm sensitivity is crossed at 10^((20-46.67+94)/40) ~ 48 m
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 1)};
  const TopologyView topo{aps, {}, 5};
  const auto far = scan_channel(1, topo, {60, 0}, kEnv, kTiming);
  EXPECT_TRUE(far.rows.empty());
  EXPECT_NEAR(far.dwell_s, 0.016, 1e-15);
  EXPECT_EQ(scan_channel(1, topo, {40, 0}, kEnv, kTiming).rows.size(), 1u);
}

TEST(FullScan, AllChannelsEmpty) {
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 1)};
  const TopologyView topo{aps, {}, 5};
  const auto fs = full_scan(1, topo, {500, 0}, kEnv, kTiming);
  EXPECT_NEAR(fs.t_cs, 0.080, 1e-12);
  EXPECT_TRUE(fs.table.empty());
}

TEST(FullScan, LiteralAccountingChargesEveryChannelFully) {
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 1)};
  const TopologyView topo{aps, {}, 5};
  EXPECT_NEAR(full_scan(1, topo, {500, 0}, kEnv, kTiming, ScanAccounting::eq3_literal).t_cs, 0.580, 1e-12);
  EXPECT_NEAR(full_scan(1, topo, {0, 0}, kEnv, kTiming, ScanAccounting::eq3_literal).t_cs, 0.580, 1e-12);
  EXPECT_NEAR(scan_time(5, 0, kTiming, ScanAccounting::eq3_literal), 0.580, 1e-12);
}

TEST(FullScan, SingleChannelSingleAp) {
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 1)};
  const TopologyView topo{aps, {}, 1};
  const auto fs = full_scan(1, topo, {3, 4}, kEnv, kTiming);
  EXPECT_NEAR(fs.t_cs, 0.116, 1e-15);
  ASSERT_EQ(fs.table.size(), 1u);
  EXPECT_EQ(fs.table.rows[0].ap, 0);
}

TEST(FullScan, StartsAtCurrentChannelAndWraps) {
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 1)};
  const TopologyView topo{aps, {}, 5};
  const auto fs = full_scan(4, topo, {0, 0}, kEnv, kTiming);
  ASSERT_EQ(fs.channels.size(), 5u);
  const int expected[] = {4, 5, 1, 2, 3};
  for (int i = 0; i < 5; ++i) EXPECT_EQ(fs.channels[static_cast<std::size_t>(i)].channel, expected[i]);
}

// Property: over random timers, topologies and positions, T_CS is exactly the
// in-order sum of independently recomputed per-channel dwells, the table has
// one row per audible AP, and the topology is left untouched.
TEST(FullScan, ScanSumAndRowCountProperty) {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const ScanTiming t{rng.uniform(0, 0.005), rng.uniform(0, 0.05), rng.uniform(0.05, 0.2), rng.uniform(0, 0.01)};
    const int n = 1 + static_cast<int>(rng.below(11));
    const int m = 1 + static_cast<int>(rng.below(6));
    std::vector<ApNode> aps;
    for (int i = 0; i < m; ++i) {
      aps.push_back(make_ap(i, {rng.uniform(-50, 50), rng.uniform(-50, 50)}, 1 + static_cast<int>(rng.below(n))));
    }
    const auto before = aps;
    const TopologyView topo{aps, {}, n};
    const Vec2 pos{rng.uniform(-60, 60), rng.uniform(-60, 60)};
    const int start = 1 + static_cast<int>(rng.below(n));
    for (auto mode : {ScanAccounting::fsm, ScanAccounting::eq3_literal}) {
      const auto fs = full_scan(start, topo, pos, kEnv, t, mode);
      double expected = 0;
      std::set<int> audible;
      for (int step = 0; step < n; ++step) {
        const int ch = (start - 1 + step) % n + 1;
        bool responded = false;
        for (const auto& ap : aps) {
          if (ap.channel == ch && radio::rssi_at(ap, pos, kEnv.path_loss) >= kEnv.sensitivity_dbm) {
            responded = true;
            audible.insert(ap.id);
          }
        }
        expected += channel_dwell(responded, t, mode);
      }
      EXPECT_EQ(fs.t_cs, expected);
      EXPECT_EQ(fs.table.size(), audible.size());
    }
    for (std::size_t i = 0; i < aps.size(); ++i) {
      EXPECT_EQ(aps[i].position, before[i].position);
      EXPECT_EQ(aps[i].channel, before[i].channel);
    }
  }
}

TEST(Measure, ThroughputAccountsForChannelLoad) {
  std::vector<ApNode> aps{make_ap(0, {0, 0}, 1)};
  std::vector<int> idle{0, 0}, busy{4, 0};
  const auto alone = measure(aps[0], {10, 0}, {aps, idle, 2}, kEnv, std::nullopt);
  const auto crowded = measure(aps[0], {10, 0}, {aps, busy, 2}, kEnv, std::nullopt);
  EXPECT_EQ(crowded.load, 4);
  EXPECT_NEAR(alone.throughput_bps / crowded.throughput_bps, 5.0, 1e-9);
  // Already associated: the STA is one of the four, not a fifth.
  const auto own = measure(aps[0], {10, 0}, {aps, busy, 2}, kEnv, 0);
  EXPECT_NEAR(alone.throughput_bps / own.throughput_bps, 4.0, 1e-9);
  EXPECT_LE(alone.throughput_bps, alone.shannon_bps);
}

TEST(ScanTime, ClosedFormValidation) {
  EXPECT_NEAR(scan_time(5, 0, kTiming, ScanAccounting::fsm), 0.080, 1e-12);
  EXPECT_NEAR(scan_time(5, 3, kTiming, ScanAccounting::fsm), 3 * 0.116 + 2 * 0.016, 1e-12);
  EXPECT_THROW(scan_time(2, 3, kTiming, ScanAccounting::fsm), std::invalid_argument);
}
