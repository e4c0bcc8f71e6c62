#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "roamsim/roaming.hpp"

using namespace roamsim;
using namespace roamsim::roaming;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

scanning::ScanRow row(int ap, double rssi, double snr, double thr, double power = 20) {
  scanning::ScanRow r;
  r.ap = ap;
  r.channel = ap + 1;
  r.rssi_dbm = rssi;
  r.snr_db = snr;
  r.throughput_bps = thr;
  r.tx_power_dbm = power;
  return r;
}

AssociationContext lossless_idle() {
  AssociationContext ctx;
  ctx.snr_db = kInf;
  ctx.uora = contention::params_for(ScenarioConfig{}, 0);
  ctx.busy_prob = 0;
  return ctx;
}

}  // namespace

TEST(HandoffNeeded, ThresholdIsStrict) {
  EXPECT_TRUE(handoff_needed(-86.0, -85.0));
  EXPECT_FALSE(handoff_needed(-85.0, -85.0));
  EXPECT_FALSE(handoff_needed(-60.0, -85.0));
  EXPECT_TRUE(handoff_needed(std::nullopt, -85.0));
}

TEST(Feasibility, AllRowsPass) {
  scanning::StateTable t{{row(0, -60, 41, 5e6), row(1, -70, 31, 3e6)}};
  const auto f = feasible_candidates(t, ConstraintSet{});
  ASSERT_TRUE(f);
  EXPECT_EQ(*f, t);
}

TEST(Feasibility, WeakRowRemoved) {
  scanning::StateTable t{{row(0, -60, 41, 5e6), row(1, -90, 11, 3e6)}};
  const auto f = feasible_candidates(t, ConstraintSet{});
  ASSERT_TRUE(f);
  ASSERT_EQ(f->size(), 1u);
  EXPECT_EQ(f->rows[0].ap, 0);
}

TEST(Feasibility, AllFailSignalsEmpty) {
  scanning::StateTable t{{row(0, -90, 11, 5e6), row(1, -60, 41, 1e3)}};
  EXPECT_FALSE(feasible_candidates(t, ConstraintSet{}));
}

TEST(Feasibility, EachConstraintBites) {
  const ConstraintSet c;
  EXPECT_TRUE(satisfies(row(0, -70, 31, 2e6), c));
  EXPECT_FALSE(satisfies(row(0, -70, 31, 0.5e6), c));        // throughput floor
  EXPECT_FALSE(satisfies(row(0, -86, 31, 2e6), c));          // RSSI floor
  EXPECT_FALSE(satisfies(row(0, -70, 10, 2e6), c));          // PER ceiling: PER(10 dB) ~ 6.7e-3
  EXPECT_FALSE(satisfies(row(0, -70, 31, 2e6, 25), c));      // power above p_max
  EXPECT_FALSE(satisfies(row(0, -70, 31, 2e6, -1), c));      // negative power
}

// Property: filtering never adds rows and is idempotent.
TEST(Feasibility, ShrinkingAndIdempotent) {
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    scanning::StateTable t;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int k = 0; k < n; ++k) {
      t.rows.push_back(row(k, rng.uniform(-95, -40), rng.uniform(0, 60), rng.uniform(0, 4e6), rng.uniform(-2, 25)));
    }
    const auto once = feasible_candidates(t, ConstraintSet{});
    if (!once) continue;
    EXPECT_LE(once->size(), t.size());
    const auto twice = feasible_candidates(*once, ConstraintSet{});
    ASSERT_TRUE(twice);
    EXPECT_EQ(*twice, *once);
  }
}

TEST(Associate, LosslessIdleChannel) {
  Rng rng(1);
  const auto out = associate(lossless_idle(), RoamTiming{}, rng);
  EXPECT_TRUE(out.success);
  EXPECT_EQ(out.retries, 0);
  EXPECT_NEAR(out.t_ro, 0.010, 1e-15);
  EXPECT_DOUBLE_EQ(out.t_cont, 16e-6);
}

TEST(Associate, RetryArithmetic) {
  auto ctx = lossless_idle();
  ctx.snr_db = 5.0;  // PER = 0.5
  bool saw_single_retry = false;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const auto out = associate(ctx, RoamTiming{}, rng);
    const double expected = out.retries * 0.100 + (out.success ? 0.010 : 0.100);
    EXPECT_NEAR(out.t_ro, expected, 1e-12);
    // every attempt on an idle channel contends for exactly one IFS
    EXPECT_NEAR(out.t_cont, (out.retries + 1) * 16e-6, 1e-15);
    if (out.success && out.retries == 1) {
      saw_single_retry = true;
      EXPECT_NEAR(out.t_ro, 0.110, 1e-12);
    }
  }
  EXPECT_TRUE(saw_single_retry);
}

TEST(Associate, CertainLossExhaustsRetries) {
  auto ctx = lossless_idle();
  ctx.snr_db = -kInf;  // PER = 1
  Rng rng(5);
  const auto out = associate(ctx, RoamTiming{}, rng);
  EXPECT_FALSE(out.success);
  EXPECT_EQ(out.retries, 3);
  EXPECT_NEAR(out.t_ro, 4 * 0.100, 1e-12);
}

TEST(Associate, DeterministicForFixedSeed) {
  auto ctx = lossless_idle();
  ctx.uora = contention::params_for(ScenarioConfig{}, 6);
  ctx.busy_prob = contention::busy_probability(0.25, 6);
  Rng a(77), b(77);
  for (int i = 0; i < 50; ++i) {
    const auto x = associate(ctx, RoamTiming{}, a);
    const auto y = associate(ctx, RoamTiming{}, b);
    EXPECT_EQ(x.t_ro, y.t_ro);
    EXPECT_EQ(x.t_cont, y.t_cont);
  }
}

TEST(Latency, SumOfParts) {
  HandoffRecord r;
  r.t_cs = 0.080;
  r.t_ro = 0.010;
  r.t_cont = 0.0000835;
  EXPECT_NEAR(total_latency(r), 0.0900835, 1e-15);
  EXPECT_EQ(total_latency(HandoffRecord{}), 0.0);
  EXPECT_NEAR(r.association_delay(), 0.0100835, 1e-15);
}

TEST(Reward, NegativeNormalisedLatency) {
  EXPECT_DOUBLE_EQ(reward(0.09, 1.0), -0.09);
  EXPECT_DOUBLE_EQ(reward(0.09, 0.1), -0.9);
}

TEST(Timing, FromScenarioMilliseconds) {
  ScenarioConfig c;
  c.t_au_ms = 3;
  c.assoc_timeout_ms = 50;
  const auto t = timing_from(c);
  EXPECT_DOUBLE_EQ(t.auth_s, 0.003);
  EXPECT_DOUBLE_EQ(t.timeout_s, 0.05);
  EXPECT_EQ(t.max_retries, 3);
}
