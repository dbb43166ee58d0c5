#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mpo/error.hpp"
#include "mpo/market_data.hpp"
#include "mpo/regime_signals.hpp"
#include "scratch.hpp"

using mpo::RegimeClass;
using mpo::SynthConfig;

namespace {

mpo::AlignedPanel small_panel() {
  std::vector<mpo::PriceSeries> s(2);
  s[0].asset = "a";
  s[1].asset = "b";
  for (auto& p : s) {
    for (const char* d : {"2020-01-01", "2020-01-02", "2020-01-03"}) p.dates.push_back(mpo::parse_date(d));
    p.close = {1, 2, 3};
    p.volume = {1, 1, 1};
  }
  return mpo::align(s, mpo::constant_rate(s[0].dates, 0.0), 5);
}

}  // namespace

TEST_CASE("regime class parsing is case-insensitive") {
  CHECK(mpo::parse_regime("bullish") == RegimeClass::Bullish);
  CHECK(mpo::parse_regime("BEARISH") == RegimeClass::Bearish);
  CHECK(mpo::parse_regime("Other") == RegimeClass::Other);
  CHECK_THROWS_AS(mpo::parse_regime("up"), mpo::ParseError);
}

TEST_CASE("full signal file loads without fills") {
  gen::ScratchDir dir("sig");
  std::string text = "date,asset,predicted,p_bull,p_bear\n";
  for (const char* d : {"2020-01-01", "2020-01-02", "2020-01-03"}) {
    text += std::string(d) + ",a,BULLISH,0.9,0.05\n";
    text += std::string(d) + ",b,bearish,0.1,0.8\n";
  }
  const auto sig = mpo::load_signals(dir.write("s.csv", text), small_panel());
  CHECK(sig.filled_cells() == 0);
  CHECK(sig.at(1, 0).predicted == RegimeClass::Bullish);
  CHECK(sig.at(1, 0).p_bull == 0.9);
  CHECK(sig.at(2, 1).predicted == RegimeClass::Bearish);
  CHECK(sig.at(2, 1).p_bear == 0.8);
}

TEST_CASE("missing asset is filled with Other") {
  gen::ScratchDir dir("sig");
  const auto sig = mpo::load_signals(
      dir.write("s.csv", "date,asset,predicted,p_bull,p_bear\n2020-01-02,a,BULLISH,0.9,0.05\n"), small_panel());
  CHECK(sig.filled_cells() == 5);
  for (std::size_t t = 0; t < 3; ++t) CHECK(sig.at(t, 1) == mpo::RegimeSignal{});
}

TEST_CASE("bad probabilities and unknown assets are rejected by row") {
  gen::ScratchDir dir("sig");
  const auto bad = dir.write("p.csv", "date,asset,predicted,p_bull,p_bear\n2020-01-01,a,OTHER,0.1,0\n2020-01-02,a,BULLISH,1.3,0\n");
  CHECK_THROWS_AS(mpo::load_signals(bad, small_panel()), mpo::ValidationError);
  try {
    mpo::load_signals(bad, small_panel());
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("p.csv:3") != std::string::npos);
  }
  const auto unknown = dir.write("u.csv", "date,asset,predicted,p_bull,p_bear\n2020-01-01,zz,OTHER,0,0\n");
  CHECK_THROWS_AS(mpo::load_signals(unknown, small_panel()), mpo::ValidationError);
}

TEST_CASE("signal csv round-trips") {
  gen::ScratchDir dir("sig");
  SynthConfig cfg;
  cfg.n_assets = 3;
  cfg.n_days = 40;
  cfg.epsilon = 0.3;
  const auto m = mpo::generate_synthetic(cfg, 5);
  mpo::write_signals_csv(dir / "s.csv", m.signals);
  const auto back = mpo::load_signals(dir / "s.csv", m.panel);
  CHECK(back.filled_cells() == 0);
  for (std::size_t t = 0; t < m.signals.num_dates(); ++t) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.at(t, i).predicted == m.signals.at(t, i).predicted);
      CHECK(back.at(t, i).p_bull == doctest::Approx(m.signals.at(t, i).p_bull).epsilon(1e-12));
    }
  }
}

TEST_CASE("degenerate market returns the drift exactly") {
  SynthConfig cfg;
  cfg.n_assets = 2;
  cfg.n_days = 50;
  cfg.drift = {0.001, 0.001};
  cfg.volatility = {0.0, 0.0};
  cfg.transition = {{{1.0, 0.0}, {1.0, 0.0}}};
  const auto m = mpo::generate_synthetic(cfg, 3);
  for (Eigen::Index t = 1; t < 50; ++t) {
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(m.panel.returns()(t, i) == doctest::Approx(0.001).epsilon(1e-12));
  }
}

TEST_CASE("generation is a pure function of config and seed") {
  SynthConfig cfg;
  cfg.n_days = 200;
  cfg.epsilon = 0.2;
  const auto a = mpo::generate_synthetic(cfg, 77);
  const auto b = mpo::generate_synthetic(cfg, 77);
  const auto c = mpo::generate_synthetic(cfg, 78);
  CHECK(a.panel.prices() == b.panel.prices());
  CHECK(a.panel.dollar_volume() == b.panel.dollar_volume());
  CHECK(a.signals == b.signals);
  CHECK(a.regimes == b.regimes);
  CHECK(a.panel.prices() != c.panel.prices());
}

TEST_CASE("noise-free signals predict the next regime contrarily") {
  SynthConfig cfg;
  cfg.n_days = 300;
  const auto m = mpo::generate_synthetic(cfg, 9);
  CHECK(m.signals == m.oracle_signals);
  for (std::size_t t = 0; t + 1 < m.regimes.size(); ++t) {
    for (std::size_t i = 0; i < m.panel.num_assets(); ++i) {
      const auto& s = m.signals.at(t, i);
      CHECK(s.predicted == mpo::contrarian_label(cfg.drift[m.regimes[t + 1][i]]));
      const double active = s.predicted == RegimeClass::Bullish ? s.p_bull : s.p_bear;
      CHECK(active >= 0.7);
      CHECK(active <= 1.0);
    }
  }
}

TEST_CASE("fully noisy signals agree with the oracle a third of the time") {
  SynthConfig cfg;
  cfg.n_assets = 10;
  cfg.n_days = 1000;
  cfg.epsilon = 1.0;
  const auto m = mpo::generate_synthetic(cfg, 2024);
  int agree = 0;
  for (std::size_t t = 0; t < 1000; ++t) {
    for (std::size_t i = 0; i < 10; ++i) agree += m.signals.at(t, i).predicted == m.oracle_signals.at(t, i).predicted;
  }
  CHECK(std::abs(agree / 10000.0 - 1.0 / 3.0) <= 0.02);
}

TEST_CASE("noise does not move prices") {
  SynthConfig a;
  a.n_days = 100;
  SynthConfig b = a;
  b.epsilon = 0.5;
  CHECK(mpo::generate_synthetic(a, 1).panel.prices() == mpo::generate_synthetic(b, 1).panel.prices());
}

TEST_CASE("invalid synthetic settings are config errors") {
  SynthConfig cfg;
  cfg.transition = {{{0.9, 0.2}, {0.5, 0.5}}};
  CHECK_THROWS_AS(mpo::generate_synthetic(cfg, 1), mpo::ConfigError);
  cfg = {};
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(mpo::generate_synthetic(cfg, 1), mpo::ConfigError);
}
