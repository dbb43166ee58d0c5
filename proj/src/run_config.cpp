#include "mpo/run_config.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "mpo/error.hpp"

namespace mpo {

namespace fs = std::filesystem;

namespace {

template <class T>
void read(const YAML::Node& node, const char* key, T& into) {
  if (const auto v = node[key]) {
    try {
      into = v.as<T>();
    } catch (const YAML::Exception& e) {
      throw ConfigError(fmt::format("config: bad value for '{}' (line {})", key, e.mark.line + 1));
    }
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, std::optional<T>& into) {
  if (node[key]) {
    T v{};
    read(node, key, v);
    into = v;
  }
}

void check_keys(const YAML::Node& node, const std::string& section, std::set<std::string> allowed) {
  if (!node) return;
  if (!node.IsMap()) throw ConfigError("config: '" + section + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + section);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void read_range(const YAML::Node& node, const char* key, double& lo, double& hi) {
  if (const auto v = node[key]) {
    if (!v.IsSequence() || v.size() != 2) throw ConfigError(fmt::format("config: '{}' must be [low, high]", key));
    lo = v[0].as<double>();
    hi = v[1].as<double>();
  }
}

}  // namespace

void RunConfig::validate() const {
  if (data) {
    if (data->prices.empty()) throw ConfigError("config: data.prices lists no files");
    for (const auto& p : data->prices) {
      if (!fs::exists(p)) throw ConfigError("price file not found: " + p.string());
    }
    if (!fs::exists(data->cash)) throw ConfigError("cash-rate file not found: " + data->cash.string());
    if (!fs::exists(data->signals)) throw ConfigError("signal file not found: " + data->signals.string());
    if (data->max_ffill < 0) throw ConfigError("config: data.max_ffill must be nonnegative");
  } else {
    synthetic.validate();
  }
  backtest.mpc.validate();
  if (backtest.spread < 0.0) throw ConfigError("config: cost.spread must be nonnegative");
  if (!(backtest.initial_value > 0.0)) throw ConfigError("config: backtest.initial_value must be positive");
  if (backtest.rebalance_every < 1) throw ConfigError("config: backtest.rebalance_every must be >= 1");
  if (backtest.estimators.ema_window < 1 || backtest.estimators.cov_window < 2) {
    throw ConfigError("config: estimator windows too short");
  }
  search.validate();
  if (folds < 1) throw ConfigError("config: tuning.folds must be >= 1");
  if (gap < 0) throw ConfigError("config: tuning.gap must be nonnegative");
  if (sweep_grid.empty()) throw ConfigError("config: sweep.grid is empty");
  for (double g : sweep_grid) {
    if (!(g >= 0.0)) throw ConfigError("config: sweep.grid values must be nonnegative");
  }
  for (const auto* d : {&test_start, &test_end, &tune_start, &tune_end}) {
    if (*d) {
      try {
        parse_date(**d);
      } catch (const ParseError& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    }
  }
}

RunConfig parse_run_config(const std::string& yaml_text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config: {} (line {})", e.msg, e.mark.line + 1));
  }
  RunConfig c;
  if (!root || root.IsNull()) return c;
  check_keys(root, "config",
             {"seed", "data", "synthetic", "estimators", "mpc", "cost", "backtest", "tuning", "sweep", "exclude",
              "output"});
  read(root, "seed", c.seed);

  if (const auto d = root["data"]) {
    check_keys(d, "data", {"prices", "cash", "signals", "max_ffill"});
    DataFiles files;
    std::vector<std::string> prices;
    std::string cash, signals;
    read(d, "prices", prices);
    read(d, "cash", cash);
    read(d, "signals", signals);
    read(d, "max_ffill", files.max_ffill);
    if (cash.empty() || signals.empty()) throw ConfigError("config: data needs cash and signals paths");
    for (const auto& p : prices) files.prices.push_back(resolve(base_dir, p));
    files.cash = resolve(base_dir, cash);
    files.signals = resolve(base_dir, signals);
    c.data = files;
  }

  if (const auto s = root["synthetic"]) {
    check_keys(s, "synthetic",
               {"n_assets", "n_days", "start_date", "asset_prefix", "drift", "volatility", "transition", "epsilon",
                "initial_price", "mean_dollar_volume", "volume_log_sd", "annual_cash_yield"});
    auto& y = c.synthetic;
    read(s, "n_assets", y.n_assets);
    read(s, "n_days", y.n_days);
    read(s, "start_date", y.start_date);
    read(s, "asset_prefix", y.asset_prefix);
    read_range(s, "drift", y.drift[0], y.drift[1]);
    read_range(s, "volatility", y.volatility[0], y.volatility[1]);
    if (const auto t = s["transition"]) {
      if (!t.IsSequence() || t.size() != 2) throw ConfigError("config: synthetic.transition must be 2x2");
      for (std::size_t a = 0; a < 2; ++a) {
        if (!t[a].IsSequence() || t[a].size() != 2) throw ConfigError("config: synthetic.transition must be 2x2");
        y.transition[a] = {t[a][0].as<double>(), t[a][1].as<double>()};
      }
    }
    read(s, "epsilon", y.epsilon);
    read(s, "initial_price", y.initial_price);
    read(s, "mean_dollar_volume", y.mean_dollar_volume);
    read(s, "volume_log_sd", y.volume_log_sd);
    read(s, "annual_cash_yield", y.annual_cash_yield);
  }

  if (const auto e = root["estimators"]) {
    check_keys(e, "estimators", {"ema_window", "cov_window", "ridge", "kalman", "parallel"});
    auto& est = c.backtest.estimators;
    read(e, "ema_window", est.ema_window);
    read(e, "cov_window", est.cov_window);
    read(e, "ridge", est.ridge);
    bool parallel = true;
    read(e, "parallel", parallel);
    est.execution = parallel ? kernels::Execution::Parallel : kernels::Execution::Serial;
    if (const auto k = e["kalman"]) {
      check_keys(k, "estimators.kalman", {"q", "r", "initial_level", "initial_variance"});
      read(k, "q", est.kalman.q);
      read(k, "r", est.kalman.r);
      read(k, "initial_level", est.kalman.initial_level);
      read(k, "initial_variance", est.kalman.initial_variance);
    }
  }

  if (const auto m = root["mpc"]) {
    check_keys(m, "mpc", {"horizon", "gamma_sigma", "gamma_trade", "min_weight", "tolerance", "max_iterations"});
    auto& mpc = c.backtest.mpc;
    read(m, "horizon", mpc.horizon);
    read(m, "gamma_sigma", mpc.gamma_sigma);
    read(m, "gamma_trade", mpc.gamma_trade);
    read(m, "min_weight", mpc.min_weight);
    read(m, "tolerance", mpc.tolerance);
    read(m, "max_iterations", mpc.max_iterations);
  }

  if (const auto k = root["cost"]) {
    check_keys(k, "cost", {"spread"});
    read(k, "spread", c.backtest.spread);
  }

  if (const auto b = root["backtest"]) {
    check_keys(b, "backtest", {"initial_value", "start", "end", "rebalance_every"});
    read(b, "initial_value", c.backtest.initial_value);
    read(b, "start", c.test_start);
    read(b, "end", c.test_end);
    read(b, "rebalance_every", c.backtest.rebalance_every);
  }

  if (const auto t = root["tuning"]) {
    check_keys(t, "tuning", {"start", "end", "folds", "gap", "trials", "gamma_sigma", "gamma_trade"});
    read(t, "start", c.tune_start);
    read(t, "end", c.tune_end);
    read(t, "folds", c.folds);
    read(t, "gap", c.gap);
    read(t, "trials", c.search.trials);
    read_range(t, "gamma_sigma", c.search.gamma_sigma_lo, c.search.gamma_sigma_hi);
    read_range(t, "gamma_trade", c.search.gamma_trade_lo, c.search.gamma_trade_hi);
  }

  if (const auto s = root["sweep"]) {
    check_keys(s, "sweep", {"grid"});
    read(s, "grid", c.sweep_grid);
  }
  read(root, "exclude", c.exclude);
  std::string out;
  read(root, "output", out);
  if (!out.empty()) c.output = resolve(base_dir, out);
  c.search.seed = c.seed;
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::absolute(path).parent_path());
}

namespace {

// Shortest round-trip text, so the file reads back to the same doubles.
std::string num(double x) { return fmt::format("{}", x); }

}  // namespace

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "seed" << YAML::Value << c.seed;
  if (c.data) {
    y << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "prices" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : c.data->prices) y << p.string();
    y << YAML::EndSeq;
    y << YAML::Key << "cash" << YAML::Value << c.data->cash.string();
    y << YAML::Key << "signals" << YAML::Value << c.data->signals.string();
    y << YAML::Key << "max_ffill" << YAML::Value << c.data->max_ffill;
    y << YAML::EndMap;
  } else {
    const auto& s = c.synthetic;
    y << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "n_assets" << YAML::Value << s.n_assets;
    y << YAML::Key << "n_days" << YAML::Value << s.n_days;
    y << YAML::Key << "start_date" << YAML::Value << s.start_date;
    y << YAML::Key << "asset_prefix" << YAML::Value << s.asset_prefix;
    y << YAML::Key << "drift" << YAML::Value << YAML::Flow << YAML::BeginSeq << num(s.drift[0]) << num(s.drift[1]) << YAML::EndSeq;
    y << YAML::Key << "volatility" << YAML::Value << YAML::Flow << YAML::BeginSeq << num(s.volatility[0]) << num(s.volatility[1])
      << YAML::EndSeq;
    y << YAML::Key << "transition" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& row : s.transition) y << YAML::Flow << YAML::BeginSeq << num(row[0]) << num(row[1]) << YAML::EndSeq;
    y << YAML::EndSeq;
    y << YAML::Key << "epsilon" << YAML::Value << num(s.epsilon);
    y << YAML::Key << "initial_price" << YAML::Value << num(s.initial_price);
    y << YAML::Key << "mean_dollar_volume" << YAML::Value << num(s.mean_dollar_volume);
    y << YAML::Key << "volume_log_sd" << YAML::Value << num(s.volume_log_sd);
    y << YAML::Key << "annual_cash_yield" << YAML::Value << num(s.annual_cash_yield);
    y << YAML::EndMap;
  }
  const auto& e = c.backtest.estimators;
  y << YAML::Key << "estimators" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "ema_window" << YAML::Value << e.ema_window;
  y << YAML::Key << "cov_window" << YAML::Value << e.cov_window;
  y << YAML::Key << "ridge" << YAML::Value << num(e.ridge);
  y << YAML::Key << "parallel" << YAML::Value << (e.execution == kernels::Execution::Parallel);
  y << YAML::Key << "kalman" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "q" << YAML::Value << num(e.kalman.q);
  y << YAML::Key << "r" << YAML::Value << num(e.kalman.r);
  y << YAML::Key << "initial_level" << YAML::Value << num(e.kalman.initial_level);
  y << YAML::Key << "initial_variance" << YAML::Value << num(e.kalman.initial_variance);
  y << YAML::EndMap << YAML::EndMap;
  const auto& m = c.backtest.mpc;
  y << YAML::Key << "mpc" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "horizon" << YAML::Value << m.horizon;
  y << YAML::Key << "gamma_sigma" << YAML::Value << num(m.gamma_sigma);
  y << YAML::Key << "gamma_trade" << YAML::Value << num(m.gamma_trade);
  y << YAML::Key << "min_weight" << YAML::Value << num(m.min_weight);
  y << YAML::Key << "tolerance" << YAML::Value << num(m.tolerance);
  y << YAML::Key << "max_iterations" << YAML::Value << m.max_iterations;
  y << YAML::EndMap;
  y << YAML::Key << "cost" << YAML::Value << YAML::BeginMap << YAML::Key << "spread" << YAML::Value << num(c.backtest.spread)
    << YAML::EndMap;
  y << YAML::Key << "backtest" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "initial_value" << YAML::Value << num(c.backtest.initial_value);
  if (c.test_start) y << YAML::Key << "start" << YAML::Value << *c.test_start;
  if (c.test_end) y << YAML::Key << "end" << YAML::Value << *c.test_end;
  y << YAML::Key << "rebalance_every" << YAML::Value << c.backtest.rebalance_every;
  y << YAML::EndMap;
  y << YAML::Key << "tuning" << YAML::Value << YAML::BeginMap;
  if (c.tune_start) y << YAML::Key << "start" << YAML::Value << *c.tune_start;
  if (c.tune_end) y << YAML::Key << "end" << YAML::Value << *c.tune_end;
  y << YAML::Key << "folds" << YAML::Value << c.folds;
  y << YAML::Key << "gap" << YAML::Value << c.gap;
  y << YAML::Key << "trials" << YAML::Value << c.search.trials;
  y << YAML::Key << "gamma_sigma" << YAML::Value << YAML::Flow << YAML::BeginSeq << num(c.search.gamma_sigma_lo)
    << num(c.search.gamma_sigma_hi) << YAML::EndSeq;
  y << YAML::Key << "gamma_trade" << YAML::Value << YAML::Flow << YAML::BeginSeq << num(c.search.gamma_trade_lo)
    << num(c.search.gamma_trade_hi) << YAML::EndSeq;
  y << YAML::EndMap;
  y << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap << YAML::Key << "grid" << YAML::Value << YAML::Flow
    << YAML::BeginSeq;
  for (double g : c.sweep_grid) y << num(g);
  y << YAML::EndSeq << YAML::EndMap;
  y << YAML::Key << "exclude" << YAML::Value << YAML::Flow << c.exclude;
  y << YAML::Key << "output" << YAML::Value << c.output.string();
  y << YAML::EndMap;
  return std::string(y.c_str()) + "\n";
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  if (c.data) {
    nlohmann::json d;
    for (const auto& p : c.data->prices) d["prices"].push_back(p.string());
    d["cash"] = c.data->cash.string();
    d["signals"] = c.data->signals.string();
    d["max_ffill"] = c.data->max_ffill;
    j["data"] = d;
  } else {
    const auto& s = c.synthetic;
    j["synthetic"] = {{"n_assets", s.n_assets},
                      {"n_days", s.n_days},
                      {"start_date", s.start_date},
                      {"asset_prefix", s.asset_prefix},
                      {"drift", s.drift},
                      {"volatility", s.volatility},
                      {"transition", s.transition},
                      {"epsilon", s.epsilon},
                      {"initial_price", s.initial_price},
                      {"mean_dollar_volume", s.mean_dollar_volume},
                      {"volume_log_sd", s.volume_log_sd},
                      {"annual_cash_yield", s.annual_cash_yield}};
  }
  const auto& e = c.backtest.estimators;
  j["estimators"] = {{"ema_window", e.ema_window},
                     {"cov_window", e.cov_window},
                     {"ridge", e.ridge},
                     {"parallel", e.execution == kernels::Execution::Parallel},
                     {"kalman",
                      {{"q", e.kalman.q},
                       {"r", e.kalman.r},
                       {"initial_level", e.kalman.initial_level},
                       {"initial_variance", e.kalman.initial_variance}}}};
  const auto& m = c.backtest.mpc;
  j["mpc"] = {{"horizon", m.horizon},         {"gamma_sigma", m.gamma_sigma}, {"gamma_trade", m.gamma_trade},
              {"min_weight", m.min_weight},   {"tolerance", m.tolerance},     {"max_iterations", m.max_iterations}};
  j["cost"] = {{"spread", c.backtest.spread}};
  j["backtest"] = {{"initial_value", c.backtest.initial_value}, {"rebalance_every", c.backtest.rebalance_every}};
  if (c.test_start) j["backtest"]["start"] = *c.test_start;
  if (c.test_end) j["backtest"]["end"] = *c.test_end;
  j["tuning"] = {{"folds", c.folds},
                 {"gap", c.gap},
                 {"trials", c.search.trials},
                 {"gamma_sigma", {c.search.gamma_sigma_lo, c.search.gamma_sigma_hi}},
                 {"gamma_trade", {c.search.gamma_trade_lo, c.search.gamma_trade_hi}}};
  if (c.tune_start) j["tuning"]["start"] = *c.tune_start;
  if (c.tune_end) j["tuning"]["end"] = *c.tune_end;
  j["sweep"] = {{"grid", c.sweep_grid}};
  j["exclude"] = c.exclude;
  j["output"] = c.output.string();
  return j;
}

Market load_market(const RunConfig& config) {
  Market m;
  if (config.data) {
    std::vector<PriceSeries> series;
    for (const auto& p : config.data->prices) series.push_back(load_price_csv(p));
    m.panel = align(series, load_cash_csv(config.data->cash), config.data->max_ffill);
    m.signals = load_signals(config.data->signals, m.panel);
  } else {
    auto synth = generate_synthetic(config.synthetic, config.seed);
    m.panel = std::move(synth.panel);
    m.signals = std::move(synth.signals);
  }
  if (!config.exclude.empty()) {
    m.panel = m.panel.exclude(config.exclude);
    m.signals = m.signals.select(m.panel.assets());
  }
  return m;
}

namespace {

std::size_t first_on_or_after(const AlignedPanel& panel, const std::string& date) {
  const auto i = panel.index_at_or_after(parse_date(date));
  if (!i) throw ConfigError("date " + date + " is after the last panel date");
  return *i;
}

std::size_t last_on_or_before(const AlignedPanel& panel, const std::string& date) {
  const auto i = panel.index_at_or_before(parse_date(date));
  if (!i) throw ConfigError("date " + date + " is before the first panel date");
  return *i;
}

}  // namespace

DateWindow test_window(const RunConfig& config, const AlignedPanel& panel) {
  if (panel.num_dates() == 0) throw ConfigError("empty panel");
  DateWindow w;
  w.first = config.test_start ? first_on_or_after(panel, *config.test_start)
                              : EstimatorPipeline::required_history(config.backtest.mpc.horizon,
                                                                    config.backtest.estimators);
  w.last = config.test_end ? last_on_or_before(panel, *config.test_end) : panel.num_dates() - 1;
  if (w.first >= panel.num_dates() || w.first > w.last) throw ConfigError("test range is empty");
  return w;
}

DateWindow tune_window(const RunConfig& config, const AlignedPanel& panel) {
  if (!config.tune_start || !config.tune_end) throw ConfigError("config: tuning.start and tuning.end are required");
  DateWindow w{first_on_or_after(panel, *config.tune_start), last_on_or_before(panel, *config.tune_end)};
  if (w.first > w.last) throw ConfigError("tuning range is empty");
  return w;
}

}  // namespace mpo
