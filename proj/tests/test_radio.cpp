#include <gtest/gtest.h>

#include <cmath>

#include "roamsim/radio.hpp"
#include "roamsim/rng.hpp"

using namespace roamsim;
using namespace roamsim::radio;

namespace {
const PathLossModel kModel{46.67, 4.0, -101.0};
}

TEST(PathLoss, ThirtyMetresLandsJustBelowThreshold) {
  // 20 - 46.67 - 40 log10(30); log10(30) = 1.4771212547
  EXPECT_NEAR(rssi_at(20.0, 30.0, kModel), -85.7548, 1e-4);
  EXPECT_NEAR(rssi_at(20.0, 30.0, kModel), 20.0 - 46.67 - 40.0 * 1.4771212547196624, 1e-12);
}

TEST(PathLoss, ReferenceDistance) { EXPECT_NEAR(rssi_at(20.0, 1.0, kModel), -26.67, 1e-12); }

TEST(PathLoss, DoublingDistanceCostsTwelveDb) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const double d = rng.uniform(0.5, 200);
    EXPECT_NEAR(rssi_at(20, d, kModel) - rssi_at(20, 2 * d, kModel), 40 * std::log10(2.0), 1e-9);
  }
  EXPECT_NEAR(40 * std::log10(2.0), 12.04, 0.005);
}

TEST(PathLoss, TinyDistancesAreClamped) {
  EXPECT_DOUBLE_EQ(rssi_at(20, 0.0, kModel), rssi_at(20, kMinDistanceM, kModel));
  EXPECT_TRUE(std::isfinite(rssi_at(20, 0.0, kModel)));
}

TEST(Snr, Examples) {
  EXPECT_DOUBLE_EQ(snr_at(-85, -101), 16);
  EXPECT_DOUBLE_EQ(snr_at(-101, -101), 0);
  EXPECT_NEAR(snr_at(-26.67, -101), 74.33, 1e-9);
}

TEST(Snr, NoiseFloorFromThermalDensity) {
  // -174 dBm/Hz over 20 MHz
  EXPECT_NEAR(-174 + 10 * std::log10(20e6), -101, 0.0103);
}

TEST(Snr, RoundTripProperty) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double d = rng.uniform(0.2, 300);
    const double noise = rng.uniform(-110, -80);
    const double rssi = rssi_at(rng.uniform(0, 23), d, kModel);
    EXPECT_NEAR(snr_at(rssi, noise) + noise, rssi, 1e-9);
  }
}

TEST(Shannon, UnselectedChannelCarriesNothing) { EXPECT_EQ(shannon_cap(false, 1, 1, 1, 20e6), 0.0); }

TEST(Shannon, LinearSnrTen) {
  // 20e6 * log2(11) = 69.188632372745946... (ln 11 / ln 2 = 3.4594316186372973)
  EXPECT_NEAR(shannon_cap(true, 10, 1, 1, 20e6), 69.188632372745946e6, 1e-3);
  EXPECT_NEAR(shannon_cap_from_snr(10.0, 20e6), 69.188632372745946e6, 1e-3);
}

TEST(Shannon, VanishesAsSnrGoesToZero) {
  EXPECT_NEAR(shannon_cap(true, 1e-12, 1, 1, 20e6), 0.0, 1e-3);
  EXPECT_EQ(shannon_cap(true, 0, 1, 1, 20e6), 0.0);
}

TEST(Shannon, MonotoneInPowerAndGain) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const double p = rng.uniform(0, 5), h = rng.uniform(0, 5), dp = rng.uniform(0, 1), dh = rng.uniform(0, 1);
    EXPECT_LE(shannon_cap(true, p, h, 1, 20e6), shannon_cap(true, p + dp, h, 1, 20e6));
    EXPECT_LE(shannon_cap(true, p, h, 1, 20e6), shannon_cap(true, p, h + dh, 1, 20e6));
  }
}

TEST(Gain, GainTimesPowerIsReceivedPower) {
  const double h = channel_gain(-60, 20);
  EXPECT_NEAR(dbm_to_mw(20) * h, dbm_to_mw(-60), 1e-18);
  ApNode ap;
  ap.tx_power_dbm = 20;
  const auto q = link_quality(ap, {10, 0}, kModel, 3.0);
  EXPECT_DOUBLE_EQ(q.noise_dbm, -98.0);
  EXPECT_NEAR(q.snr_db, q.rssi_dbm + 98.0, 1e-12);
  EXPECT_NEAR(shannon_cap(true, dbm_to_mw(20), q.gain, dbm_to_mw(q.noise_dbm), 20e6),
              shannon_cap_from_snr(q.snr_db, 20e6), 1e-3);
}

TEST(Throughput, Examples) {
  EXPECT_NEAR(throughput_estimate(1500 * 8, 1e-3, 69.19e6), 12e6, 1e-6);
  EXPECT_DOUBLE_EQ(throughput_estimate(1500 * 8, 1e-6, 69.19e6), 69.19e6);
  EXPECT_EQ(throughput_estimate(0, 1e-3, 69.19e6), 0.0);
  EXPECT_THROW(throughput_estimate(1, 0, 1), std::invalid_argument);
}

TEST(Throughput, SharedSlotScalesWithContenders) {
  const double one = shared_slot_seconds(12000, 60e6, 1, 16e-6);
  EXPECT_NEAR(one, 16e-6 + 12000 / 60e6, 1e-15);
  EXPECT_NEAR(shared_slot_seconds(12000, 60e6, 4, 16e-6), 4 * one, 1e-15);
  EXPECT_EQ(shared_slot_seconds(12000, 60e6, 0, 16e-6), one);
}

TEST(Per, Examples) {
  EXPECT_DOUBLE_EQ(per_from_snr(5.0), 0.5);
  EXPECT_EQ(per_from_snr(std::numeric_limits<double>::infinity()), 0.0);
  EXPECT_NEAR(per_from_snr(16.0), 1.0 / (1.0 + std::exp(11.0)), 1e-18);
  EXPECT_NEAR(per_from_snr(16.0), 1.67e-5, 0.01e-5);
  EXPECT_LE(per_from_snr(16.0), 0.001);
}

TEST(Per, MonotoneNonIncreasing) {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    double a = rng.uniform(-50, 100), b = rng.uniform(-50, 100);
    if (a > b) std::swap(a, b);
    EXPECT_GE(per_from_snr(a), per_from_snr(b));
  }
}

TEST(Units, DbConversionsInvert) {
  for (double v : {-120.0, -50.0, 0.0, 3.0, 23.0}) EXPECT_NEAR(mw_to_dbm(dbm_to_mw(v)), v, 1e-12);
  EXPECT_NEAR(db_to_linear(3.0103), 2.0, 1e-4);
}
