#include <gtest/gtest.h>

#include <set>

#include "roamsim/core.hpp"

using namespace roamsim;

TEST(Scenario, EmptyDocumentGivesDefaults) {
  const auto c = load_scenario("");
  EXPECT_EQ(c.num_channels, 5);
  EXPECT_EQ(c.num_aps, 3);
  EXPECT_DOUBLE_EQ(c.bandwidth_hz, 20e6);
  EXPECT_DOUBLE_EQ(c.scan_interval_s, 0.2);
  EXPECT_DOUBLE_EQ(c.ap_spacing_m, 25);
  EXPECT_DOUBLE_EQ(c.max_range_m, 30);
  EXPECT_EQ(c, ScenarioConfig{});
}

TEST(Scenario, ZeroStationsIsARangeError) {
  try {
    load_scenario("num_stas = 0\n");
    FAIL() << "expected RangeError";
  } catch (const RangeError& e) {
    EXPECT_EQ(e.key(), "num_stas");
  }
}

TEST(Scenario, OverridesKeepRemainingDefaults) {
  const auto c = load_scenario("num_channels = 2\nnum_aps = 2\nseed = 42\n");
  ScenarioConfig expected;
  expected.num_channels = 2;
  expected.num_aps = 2;
  expected.seed = 42;
  EXPECT_EQ(c, expected);
}

TEST(Scenario, CommentsBlankLinesAndWhitespace) {
  const auto c = load_scenario("# header\n\n   num_stas=7   # trailing\n\tlayout = grid\r\n");
  EXPECT_EQ(c.num_stas, 7);
  EXPECT_EQ(c.layout, Layout::grid);
}

TEST(Scenario, UnknownKeyReportsLine) {
  try {
    load_scenario("num_aps = 3\n\nbogus = 1\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST(Scenario, MalformedValues) {
  EXPECT_THROW(load_scenario("num_aps = three\n"), ConfigError);
  EXPECT_THROW(load_scenario("tau = 0.2x\n"), ConfigError);
  EXPECT_THROW(load_scenario("layout = hexagonal\n"), ConfigError);
  EXPECT_THROW(load_scenario("share_params = maybe\n"), ConfigError);
  EXPECT_THROW(load_scenario("bands = 2.4,6\n"), ConfigError);
  EXPECT_THROW(load_scenario("num_aps\n"), ConfigError);
}

TEST(Scenario, RangeChecksNameTheKey) {
  const std::pair<const char*, const char*> cases[] = {
      {"ap_channels = 1,9,1\n", "ap_channels"}, {"bands = 5,5\n", "bands"},  {"tau = 1.5\n", "tau"},
      {"t_max_ms = 5\n", "t_max_ms"},           {"discount = 1\n", "discount"}, {"tx_power_dbm = 30\n", "tx_power_dbm"},
  };
  for (const auto& [text, key] : cases) {
    try {
      load_scenario(text);
      ADD_FAILURE() << "no error for " << text;
    } catch (const RangeError& e) {
      EXPECT_EQ(e.key(), key) << text;
    }
  }
}

// Property: serialize -> parse reproduces every field bit-exactly, including
// doubles that have no short decimal form.
TEST(Scenario, RoundTripIsBitExact) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    ScenarioConfig c;
    c.num_stas = 1 + static_cast<int>(rng.below(40));
    c.ap_spacing_m = rng.uniform(1, 100);
    c.tau = rng.uniform();
    c.pl0_db = rng.uniform(30, 60);
    c.noise_floor_dbm = -rng.uniform(80, 110);
    c.learning_rate = rng.uniform(1e-4, 1);
    c.epsilon = rng.uniform();
    c.epsilon_min = c.epsilon * rng.uniform();
    c.hidden_layers = {1 + static_cast<int>(rng.below(9)), 1 + static_cast<int>(rng.below(9))};
    c.share_params = rng.bernoulli(0.5);
    c.scan_accounting = rng.bernoulli(0.5) ? ScanAccounting::fsm : ScanAccounting::eq3_literal;
    c.bands = {Band::ghz2_4, Band::ghz5, Band::ghz5, Band::ghz2_4, Band::ghz5};
    c.ap_channels = {1, 3, 5};
    const auto back = load_scenario(to_text(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(to_text(back), to_text(c));
  }
}

TEST(Scenario, EveryKeyIsSerialized) {
  const auto text = to_text(ScenarioConfig{});
  for (auto key : scenario_keys()) EXPECT_NE(text.find(std::string(key) + " = "), std::string::npos) << key;
}

TEST(Placement, LinearApPositions) {
  ScenarioConfig c;
  c.num_aps = 3;
  c.ap_spacing_m = 25;
  const auto p = place_grid(c);
  ASSERT_EQ(p.aps.size(), 3u);
  EXPECT_EQ(p.aps[0].position, (Vec2{0, 0}));
  EXPECT_EQ(p.aps[1].position, (Vec2{25, 0}));
  EXPECT_EQ(p.aps[2].position, (Vec2{50, 0}));
}

TEST(Placement, SingleApAtOrigin) {
  ScenarioConfig c;
  c.num_aps = 1;
  const auto p = place_grid(c);
  ASSERT_EQ(p.aps.size(), 1u);
  EXPECT_EQ(p.aps[0].position, (Vec2{0, 0}));
}

TEST(Placement, GridLayoutWrapsColumns) {
  ScenarioConfig c;
  c.num_aps = 4;
  c.layout = Layout::grid;
  c.grid_columns = 2;
  c.ap_spacing_m = 10;
  const auto aps = place_aps(c);
  EXPECT_EQ(aps[2].position, (Vec2{0, 10}));
  EXPECT_EQ(aps[3].position, (Vec2{10, 10}));
}

TEST(Placement, ChannelsFollowConfiguration) {
  ScenarioConfig c;
  c.num_aps = 7;
  const auto aps = place_aps(c);
  for (int m = 0; m < 7; ++m) EXPECT_EQ(aps[static_cast<std::size_t>(m)].channel, m % 5 + 1);
  c.num_aps = 3;
  c.ap_channels = {2, 2, 4};
  const auto pinned = place_aps(c);
  EXPECT_EQ(pinned[0].channel, 2);
  EXPECT_EQ(pinned[2].channel, 4);
}

TEST(Placement, DeterministicAndSeedSensitive) {
  ScenarioConfig c;
  c.num_stas = 20;
  const auto a = place_grid(c);
  const auto b = place_grid(c);
  for (std::size_t k = 0; k < a.stas.size(); ++k) EXPECT_EQ(a.stas[k].position, b.stas[k].position);
  c.seed = 2;
  const auto d = place_grid(c);
  EXPECT_NE(a.stas[0].position, d.stas[0].position);
}

TEST(Placement, StationsInsideCoverageUnion) {
  ScenarioConfig c;
  c.num_stas = 500;
  const auto p = place_grid(c);
  for (const auto& s : p.stas) EXPECT_TRUE(in_coverage(s.position, p.aps, c.max_range_m));
}

TEST(Placement, AgentIndexFollowsSharing) {
  ScenarioConfig c;
  c.num_stas = 4;
  auto p = place_grid(c);
  EXPECT_EQ(p.stas[3].agent, 3);
  c.share_params = true;
  p = place_grid(c);
  EXPECT_EQ(p.stas[3].agent, 0);
}

TEST(Clock, RejectsTimeTravel) {
  SimClock clock;
  clock.advance_to(1.0);
  clock.advance_to(1.0);
  EXPECT_THROW(clock.advance_to(0.5), std::logic_error);
  EXPECT_DOUBLE_EQ(clock.now(), 1.0);
}

TEST(Rng, SubsystemStreamsAreIndependentAndStable) {
  auto a = Rng::derive(7, "mobility");
  auto b = Rng::derive(7, "mobility");
  auto c = Rng::derive(7, "placement");
  auto d = Rng::derive(7, "mobility", 1);
  const auto x = a.bits();
  EXPECT_EQ(x, b.bits());
  EXPECT_NE(x, c.bits());
  EXPECT_NE(x, d.bits());
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 0.05 * n / 7.0);
}

TEST(Rng, GeometricMeanMatchesReciprocal) {
  Rng rng(5);
  const double p = 0.3;
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.geometric(p));
  // sd of geometric = sqrt(1-p)/p ~ 2.79; 5 standard errors
  EXPECT_NEAR(sum / n, 1 / p, 5 * 2.79 / std::sqrt(n));
  EXPECT_EQ(rng.geometric(1.0), 1u);
}
