#include "lobkin/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "lobkin/analytic.hpp"
#include "lobkin/binned.hpp"
#include "lobkin/error.hpp"
#include "lobkin/simulator.hpp"
#include "lobkin/strategies.hpp"
#include "lobkin/version.hpp"

namespace lobkin::experiment {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      config_error("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("key '") + key + "' has the wrong type");
  }
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) config_error(std::string("missing key '") + key + "' in " + where);
  return get_or<T>(j, key, T{});
}

// ---------------------------------------------------------------- model parsing

PriceDistribution parse_distribution(const json& j, const std::string& where) {
  check_keys(j, {"kind", "knots", "coefficients"}, where);
  const auto kind = require<std::string>(j, "kind", where);
  if (kind == "uniform") return PriceDistribution::uniform();
  if (kind == "piecewise_linear") {
    return PriceDistribution::piecewise_linear(require<std::vector<std::pair<double, double>>>(j, "knots", where));
  }
  if (kind == "polynomial") return PriceDistribution::polynomial(require<std::vector<double>>(j, "coefficients", where));
  config_error("unknown distribution kind '" + kind + "' in " + where);
}

ArrivalModel parse_model(const json& root) {
  ArrivalModel m;
  if (!root.contains("model")) return m;
  const json& j = root.at("model");
  check_keys(j, {"rates", "distributions", "market_order_fraction"}, "model");

  if (j.contains("rates")) {
    const json& r = j.at("rates");
    check_keys(r, {"bid", "ask", "nu_b", "mu_b", "nu_a", "mu_a"}, "model.rates");
    const bool flow = r.contains("nu_b") || r.contains("mu_b") || r.contains("nu_a") || r.contains("mu_a");
    if (flow) {
      if (r.contains("bid") || r.contains("ask") || j.contains("market_order_fraction"))
        config_error("model.rates: limit/market rates exclude bid/ask rates and market_order_fraction");
      m = ArrivalModel::from_rates(get_or(r, "nu_b", 1.0), get_or(r, "mu_b", 0.0), get_or(r, "nu_a", 1.0),
                                   get_or(r, "mu_a", 0.0));
    } else {
      m.rate_bid = get_or(r, "bid", 1.0);
      m.rate_ask = get_or(r, "ask", 1.0);
    }
  }
  if (j.contains("market_order_fraction")) {
    const json& f = j.at("market_order_fraction");
    double fb = 0.0, fa = 0.0;
    if (f.is_number()) {
      fb = fa = f.get<double>();
    } else {
      check_keys(f, {"bid", "ask"}, "model.market_order_fraction");
      fb = get_or(f, "bid", 0.0);
      fa = get_or(f, "ask", 0.0);
    }
    if (!(fb >= 0 && fb <= 1 && fa >= 0 && fa <= 1)) config_error("market_order_fraction must lie in [0, 1]");
    m.limit_fraction_bid = 1.0 - fb;
    m.limit_fraction_ask = 1.0 - fa;
  }
  if (j.contains("distributions")) {
    const json& d = j.at("distributions");
    check_keys(d, {"bid", "ask"}, "model.distributions");
    if (d.contains("bid")) m.price_bid = parse_distribution(d.at("bid"), "model.distributions.bid");
    if (d.contains("ask")) m.price_ask = parse_distribution(d.at("ask"), "model.distributions.ask");
  }
  m.validate();
  return m;
}

PriceEquivalence parse_equivalence(const json& root) {
  if (!root.contains("equivalence")) return PriceEquivalence::identity();
  const json& e = root.at("equivalence");
  if (e.is_string() && e.get<std::string>() == "identity") return PriceEquivalence::identity();
  check_keys(e, {"binned"}, "equivalence");
  return PriceEquivalence::binned(require<int>(e, "binned", "equivalence"));
}

std::vector<std::unique_ptr<StrategyHook>> parse_strategies(const json& root) {
  std::vector<std::unique_ptr<StrategyHook>> hooks;
  if (!root.contains("strategies")) return hooks;
  const json& list = root.at("strategies");
  if (!list.is_array()) config_error("strategies must be an array");
  for (const json& s : list) {
    check_keys(s, {"kind", "name", "p", "q", "P", "n"}, "strategies[]");
    const auto kind = require<std::string>(s, "kind", "strategies[]");
    const auto name = get_or<std::string>(s, "name", kind);
    if (kind == "market_maker") {
      hooks.push_back(strategy::make_market_maker({require<double>(s, "p", "market_maker")}, name));
    } else if (kind == "sniper") {
      const double q = require<double>(s, "q", "sniper");
      hooks.push_back(strategy::make_sniper({q, get_or(s, "p", 1.0 - q)}, name));
    } else if (kind == "mixed") {
      hooks.push_back(strategy::make_mixed({require<double>(s, "P", "mixed"), require<double>(s, "p", "mixed")}, name));
    } else if (kind == "sniper_pool") {
      const double q = get_or(s, "q", 0.5);
      for (auto& h : strategy::make_sniper_pool(require<int>(s, "n", "sniper_pool"), {q, get_or(s, "p", 1.0 - q)}))
        hooks.push_back(std::move(h));
    } else if (kind == "lost_market_orders") {
      hooks.push_back(strategy::make_lost_market_orders());
    } else {
      config_error("unknown strategy kind '" + kind + "'");
    }
  }
  return hooks;
}

struct OutputSpec {
  bool csv = true;
  bool json = true;
  bool trades = false;
};

OutputSpec parse_outputs(const json& root) {
  OutputSpec o;
  if (!root.contains("outputs")) return o;
  const json& j = root.at("outputs");
  check_keys(j, {"dir", "formats", "trades"}, "outputs");
  if (j.contains("formats")) {
    const auto formats = get_or<std::vector<std::string>>(j, "formats", {});
    o.csv = o.json = false;
    for (const auto& f : formats) {
      if (f == "csv") {
        o.csv = true;
      } else if (f == "json") {
        o.json = true;
      } else {
        config_error("unknown output format '" + f + "'");
      }
    }
  }
  o.trades = get_or(j, "trades", false);
  return o;
}

// ---------------------------------------------------------------- writers

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir_ / name).string());
    f << body;
    if (!f) throw Error(ErrorCode::Io, "write failed for " + (dir_ / name).string());
    written_.push_back(name);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

  const std::vector<std::string>& written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ostringstream out_;
};

json residuals_json(const analytic::Residuals& r) {
  return {{"normalization_b", r.normalization_b}, {"normalization_a", r.normalization_a},
          {"consistency", r.consistency},         {"balance_b", r.balance_b},
          {"balance_a", r.balance_a},             {"boundary_b", r.boundary_b},
          {"boundary_a", r.boundary_a},           {"max", r.max()}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------- simulate

binned::BinnedModel binned_model_of(const ArrivalModel& m, int n) {
  binned::BinnedModel b;
  b.n_bins = n;
  b.p_b.resize(n);
  b.p_a.resize(n);
  auto mass = [&](const PriceDistribution& d, double lf, int k, bool bid) {
    // Market orders carry price 1 (bids) or 0 (asks).
    const double lo = k == 1 ? 0.0 : d.cdf(static_cast<double>(k - 1) / n);
    double v = lf * (d.cdf(static_cast<double>(k) / n) - lo);
    if (k == 1 && !bid) v += 1.0 - lf;
    if (k == n && bid) v += 1.0 - lf;
    return v;
  };
  for (int k = 1; k <= n; ++k) {
    b.p_b[k - 1] = mass(m.price_bid, m.limit_fraction_bid, k, true);
    b.p_a[k - 1] = mass(m.price_ask, m.limit_fraction_ask, k, false);
  }
  return b;
}

struct SimOutcome {
  SimReport report;
  json report_json;
  std::vector<double> bid_density, ask_density;
  int bins = 0;
};

SimOutcome simulate_once(const json& cfg, std::uint64_t seed) {
  const ArrivalModel model = parse_model(cfg);
  const PriceEquivalence eq = parse_equivalence(cfg);
  auto hooks = parse_strategies(cfg);
  const OutputSpec outputs = parse_outputs(cfg);

  SimConfig sc;
  sc.model = model;
  sc.eq = eq;
  if (cfg.contains("horizon_events") && cfg.contains("horizon_time"))
    config_error("give horizon_events or horizon_time, not both");
  if (cfg.contains("horizon_time")) {
    sc.horizon = Horizon::time(get_or(cfg, "horizon_time", 0.0));
  } else {
    sc.horizon = Horizon::events(get_or<std::uint64_t>(cfg, "horizon_events", 1000000));
  }
  if (!(sc.horizon.value > 0)) config_error("horizon must be positive");
  const double burn = get_or(cfg, "burn_in_fraction", 0.1);
  if (!(burn >= 0 && burn < 1)) config_error("burn_in_fraction must lie in [0, 1)");
  sc.burn_in = burn * sc.horizon.value;
  sc.seed = {seed, get_or<std::uint64_t>(cfg, "stream", 0)};
  const int default_bins = eq.kind() == PriceEquivalence::Kind::Binned ? eq.n_bins() : 50;
  sc.stats_bins = get_or(cfg, "stats_bins", default_bins);
  if (sc.stats_bins < 1) config_error("stats_bins must be positive");
  sc.keep_trade_log = outputs.trades;
  if (cfg.contains("empty_interval")) {
    const auto iv = get_or<std::vector<double>>(cfg, "empty_interval", {});
    if (iv.size() != 2 || !(iv[0] < iv[1])) config_error("empty_interval must be [lo, hi] with lo < hi");
    sc.empty_interval = std::make_pair(iv[0], iv[1]);
  }

  std::vector<StrategyHook*> raw;
  for (auto& h : hooks) raw.push_back(h.get());
  SimOutcome out;
  out.report = run(sc, raw);
  const SimReport& r = out.report;
  const auto& c = r.collector;
  out.bins = c.n_bins;
  out.bid_density = empirical_best_bid_density(r, c.n_bins);
  out.ask_density = empirical_best_ask_density(r, c.n_bins);

  json j;
  j["seed"] = seed;
  j["events"] = r.events_processed;
  j["elapsed"] = r.elapsed;
  j["burn_in_time"] = r.burn_in_time;
  j["measured_time"] = r.measured_time;
  j["kappa_b_hat"] = optional_json(r.kappa_b_hat);
  j["kappa_a_hat"] = optional_json(r.kappa_a_hat);
  j["trades"] = r.trades;
  j["natural_bids_matched"] = r.natural_bids_matched;
  j["natural_asks_matched"] = r.natural_asks_matched;
  const double T = r.measured_time > 0 ? r.measured_time : 1.0;
  j["bid_absent_fraction"] = c.bid_absent_time / T;
  j["ask_absent_fraction"] = c.ask_absent_time / T;
  j["empty_side_fraction"] = c.empty_side_time / T;
  j["mean_spread"] = c.mean_spread();
  j["max_spread"] = c.spread_max;
  if (sc.empty_interval) {
    j["empty_interval"] = {{"lo", sc.empty_interval->first},
                           {"hi", sc.empty_interval->second},
                           {"fraction", c.interval_empty_duration / T},
                           {"epochs", c.interval_empty_times.size()}};
  }
  json pnl = json::array();
  for (const auto& h : r.pnl) {
    const auto& l = h.ledger;
    pnl.push_back({{"name", h.name},
                   {"profit_rate", l.profit_rate(r.measured_time)},
                   {"cash", l.cash},
                   {"inventory", l.inventory},
                   {"buys", l.buys},
                   {"sells", l.sells},
                   {"matched_pairs", l.matched_pairs()},
                   {"fills", l.fills},
                   {"snipes", l.snipes},
                   {"snipe_attempts", l.snipe_attempts},
                   {"cancellations", l.cancellations}});
  }
  j["strategies"] = pnl;

  // Shoulder bin of a binned book: the lowest bin holding the best bid a positive
  // fraction of the time yet below its solver-predicted interior level.
  if (eq.kind() == PriceEquivalence::Kind::Binned && c.n_bins == eq.n_bins() && hooks.empty() &&
      model.rate_bid == model.rate_ask) {
    const auto bm = binned_model_of(model, eq.n_bins());
    const auto st = binned::solve_binned(bm);
    const int k = st.shoulder_bid;
    if (k >= 1 && k < eq.n_bins()) {
      const double width = 1.0 / eq.n_bins();
      const double emp = out.bid_density[k - 1];
      const double next = out.bid_density[k];
      j["shoulder"] = {{"bin", k},
                       {"lower", (k - 1) * width},
                       {"upper", k * width},
                       {"empirical_density", emp},
                       {"solver_density", st.pi_beta[k - 1] / width},
                       {"next_bin_empirical_density", next},
                       {"flagged", emp > 0.0 && emp < next}};
    }
  }
  out.report_json = std::move(j);
  return out;
}

std::string density_csv(const std::vector<double>& density, const std::vector<double>& time, int bins) {
  Csv csv({"bin_index", "bin_left", "bin_right", "occupancy_time", "density"});
  for (int k = 0; k < bins; ++k) {
    csv.row(k + 1, static_cast<double>(k) / bins, static_cast<double>(k + 1) / bins, time[k], density[k]);
  }
  return csv.str();
}

void write_sim_outputs(Writer& w, const SimOutcome& o, const OutputSpec& spec, const std::string& prefix = "") {
  const auto& c = o.report.collector;
  if (spec.json) {
    w.json_file(prefix + "report.json", o.report_json);
    w.json_file(prefix + "spread.json", {{"mean_spread", c.mean_spread()},
                                {"max_spread", c.spread_max},
                                {"both_present_fraction",
                                 o.report.measured_time > 0 ? c.both_present_time / o.report.measured_time : 0.0}});
  }
  if (spec.csv) {
    w.text(prefix + "density_bid.csv", density_csv(o.bid_density, c.best_bid_time, o.bins));
    w.text(prefix + "density_ask.csv", density_csv(o.ask_density, c.best_ask_time, o.bins));
    if (spec.trades) {
      Csv csv({"time", "bid_price", "ask_price", "aggressor", "bid_owner", "ask_owner", "snipe"});
      for (const auto& t : c.trade_log) {
        csv.row(t.time, t.bid_price, t.ask_price, t.aggressor == Side::Bid ? "bid" : "ask",
                static_cast<int>(t.bid_owner), static_cast<int>(t.ask_owner), t.snipe ? 1 : 0);
      }
      w.text(prefix + "trades.csv", csv.str());
    }
  }
}

// Merges per-seed runs by time weighting.
void write_sweep_merge(Writer& w, const std::vector<SimOutcome>& runs, const std::vector<std::uint64_t>& seeds,
                       const OutputSpec& spec) {
  const int bins = runs.front().bins;
  std::vector<double> bid(bins, 0.0), ask(bins, 0.0), bid_t(bins, 0.0), ask_t(bins, 0.0);
  double total_t = 0.0, spread_sum = 0.0, both = 0.0, spread_max = 0.0;
  std::optional<double> kb, ka;
  for (const auto& r : runs) {
    const auto& c = r.report.collector;
    total_t += r.report.measured_time;
    for (int k = 0; k < bins; ++k) {
      bid_t[k] += c.best_bid_time[k];
      ask_t[k] += c.best_ask_time[k];
    }
    spread_sum += c.spread_sum;
    both += c.both_present_time;
    spread_max = std::max(spread_max, c.spread_max);
    if (r.report.kappa_b_hat) kb = kb ? std::min(*kb, *r.report.kappa_b_hat) : *r.report.kappa_b_hat;
    if (r.report.kappa_a_hat) ka = ka ? std::max(*ka, *r.report.kappa_a_hat) : *r.report.kappa_a_hat;
  }
  const double width = 1.0 / bins;
  for (int k = 0; k < bins; ++k) {
    bid[k] = total_t > 0 ? bid_t[k] / (total_t * width) : 0.0;
    ask[k] = total_t > 0 ? ask_t[k] / (total_t * width) : 0.0;
  }
  json runs_json = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i)
    runs_json.push_back({{"seed", seeds[i]}, {"dir", "run_" + std::to_string(seeds[i])}});
  if (spec.json) {
    w.json_file("merged.json", {{"runs", runs_json},
                                {"measured_time", total_t},
                                {"mean_spread", both > 0 ? spread_sum / both : 0.0},
                                {"max_spread", spread_max},
                                {"kappa_b_hat", optional_json(kb)},
                                {"kappa_a_hat", optional_json(ka)}});
  }
  if (spec.csv) {
    w.text("merged_density_bid.csv", density_csv(bid, bid_t, bins));
    w.text("merged_density_ask.csv", density_csv(ask, ask_t, bins));
  }
}

void check_common(const json& cfg, std::initializer_list<const char*> extra, const std::string& command) {
  std::vector<const char*> keys{"command", "seed", "outputs"};
  keys.insert(keys.end(), extra.begin(), extra.end());
  for (const auto& [key, value] : cfg.items()) {
    (void)value;
    if (std::find_if(keys.begin(), keys.end(), [&](const char* a) { return key == a; }) == keys.end())
      config_error("unknown key '" + key + "' for command " + command);
  }
}

void cmd_simulate(const json& cfg, Writer& w, std::uint64_t seed, const fs::path& out_dir) {
  check_common(cfg, {"model", "equivalence", "horizon_events", "horizon_time", "burn_in_fraction", "stats_bins",
                     "strategies", "empty_interval", "stream", "sweep"},
               "simulate");
  const OutputSpec spec = parse_outputs(cfg);
  std::vector<std::uint64_t> seeds;
  if (cfg.contains("sweep")) {
    const json& s = cfg.at("sweep");
    check_keys(s, {"seeds"}, "sweep");
    seeds = require<std::vector<std::uint64_t>>(s, "seeds", "sweep");
    if (seeds.empty()) config_error("sweep.seeds is empty");
  }
  if (seeds.empty()) {
    write_sim_outputs(w, simulate_once(cfg, seed), spec);
    return;
  }

  // Validate once up front so schema errors surface before any work starts.
  parse_model(cfg);
  parse_equivalence(cfg);
  parse_strategies(cfg);

  std::vector<SimOutcome> runs(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  const unsigned n_threads = std::min<unsigned>(sweep_threads(), static_cast<unsigned>(seeds.size()));
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
        try {
          runs[i] = simulate_once(cfg, seeds[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string sub = "run_" + std::to_string(seeds[i]);
    fs::create_directories(out_dir / sub);
    write_sim_outputs(w, runs[i], spec, sub + "/");
  }
  write_sweep_merge(w, runs, seeds, spec);
}

// ---------------------------------------------------------------- solve

void cmd_solve(const json& cfg, Writer& w) {
  check_common(cfg, {"model", "method", "lambda", "nu_b", "nu_a", "mu_b", "mu_a", "theta", "grid_size",
                     "root_tolerance", "ode_tolerance"},
               "solve");
  const OutputSpec spec = parse_outputs(cfg);
  analytic::SolverSettings s;
  s.grid_size = get_or(cfg, "grid_size", s.grid_size);
  s.root_tolerance = get_or(cfg, "root_tolerance", s.root_tolerance);
  s.ode_tolerance = get_or(cfg, "ode_tolerance", s.ode_tolerance);
  if (s.grid_size < 3) config_error("grid_size must be at least 3");
  const auto method = get_or<std::string>(cfg, "method", "general");
  const ArrivalModel model = parse_model(cfg);

  json sol;
  sol["method"] = method;
  if (method == "one_sided") {
    const auto o = analytic::one_sided_solution(get_or(cfg, "nu_b", 1.0), get_or(cfg, "mu_a", 2.0),
                                                get_or(cfg, "theta", 0.0));
    sol["kappa_b"] = o.kappa_b;
    sol["empty_probability"] = o.empty_probability();
    sol["expected_bids_above_half"] = o.expected_bids_above(0.5);
    Csv csv({"x", "best_bid_density", "no_bid_above", "expected_bids_above"});
    for (int i = 0; i < s.grid_size; ++i) {
      const double x = static_cast<double>(i) / (s.grid_size - 1);
      csv.row(x, o.best_bid_density(x), o.no_bid_above(x), o.expected_bids_above(x));
    }
    if (spec.json) w.json_file("solution.json", sol);
    if (spec.csv) w.text("density.csv", csv.str());
    return;
  }

  analytic::LimitingDensity d;
  if (method == "uniform") {
    d = analytic::uniform_solution(s);
    sol["w"] = analytic::solve_w();
  } else if (method == "general") {
    d = analytic::solve_flow(analytic::OrderFlow::from_model(model), s);
  } else if (method == "market_orders") {
    const double lambda = require<double>(cfg, "lambda", "solve");
    sol["lambda"] = lambda;
    d = analytic::market_order_solution(lambda, s);
  } else if (method == "differing_rates") {
    const double nu_a = require<double>(cfg, "nu_a", "solve"), nu_b = require<double>(cfg, "nu_b", "solve");
    sol["nu_a"] = nu_a;
    sol["nu_b"] = nu_b;
    d = analytic::differing_rates_solution(nu_a, nu_b, s);
  } else if (method == "market_impact") {
    const double mu_a = require<double>(cfg, "mu_a", "solve"), mu_b = require<double>(cfg, "mu_b", "solve");
    sol["mu_a"] = mu_a;
    sol["mu_b"] = mu_b;
    d = analytic::market_impact_solution(mu_a, mu_b, s);
  } else {
    config_error("unknown solve method '" + method + "'");
  }
  sol["kappa_b"] = d.kappa_b;
  sol["kappa_a"] = d.kappa_a;
  sol["grid_size"] = d.grid.size();
  sol["residuals"] = residuals_json(d.residuals);
  if (spec.json) w.json_file("solution.json", sol);
  if (spec.csv) {
    Csv csv({"x", "varpi_b", "varpi_a", "pi_b", "pi_a"});
    for (std::size_t i = 0; i < d.grid.size(); ++i) csv.row(d.grid[i], d.varpi_b[i], d.varpi_a[i], d.pi_b[i], d.pi_a[i]);
    w.text("density.csv", csv.str());
  }
}

// ---------------------------------------------------------------- binned

void cmd_binned(const json& cfg, Writer& w, std::uint64_t seed) {
  check_common(cfg, {"model", "n_bins", "boundary", "method", "queue_cap", "simulate_events", "tolerance", "damping"},
               "binned");
  const OutputSpec spec = parse_outputs(cfg);
  const int n = require<int>(cfg, "n_bins", "binned");
  if (n < 1) config_error("n_bins must be positive");
  const ArrivalModel model = parse_model(cfg);
  if (model.rate_bid != model.rate_ask) config_error("binned solver expects equal bid and ask rates");
  auto bm = binned_model_of(model, n);
  if (cfg.contains("boundary")) {
    const auto b = get_or<std::vector<int>>(cfg, "boundary", {});
    if (b.size() != 2) config_error("boundary must be [bid_bin, ask_bin]");
    bm.boundary = binned::BoundaryOrders{b[0], b[1]};
  }
  bm.validate();
  const auto method = get_or<std::string>(cfg, "method", "fixed_point");
  if (method != "fixed_point" && method != "ctmc" && method != "both")
    config_error("binned method must be fixed_point, ctmc or both");

  json out{{"n_bins", n}, {"method", method}};
  const double width = 1.0 / n;
  int shoulder_bid = 0, shoulder_ask = 0;
  auto table = [&](const std::vector<double>& beta, const std::vector<double>& alpha) {
    Csv csv({"bin", "lower", "upper", "pi_beta", "pi_alpha", "shoulder_flag"});
    for (int k = 0; k < n; ++k) {
      const int flag = (k + 1 == shoulder_bid || k + 1 == shoulder_ask) ? 1 : 0;
      csv.row(k + 1, k * width, (k + 1) * width, beta[k], alpha[k], flag);
    }
    return csv.str();
  };

  std::optional<binned::BinnedStationary> fp;
  if (method != "ctmc") {
    binned::FixedPointSettings fs_;
    fs_.tolerance = get_or(cfg, "tolerance", fs_.tolerance);
    fs_.damping = get_or(cfg, "damping", fs_.damping);
    fp = binned::solve_binned(bm, fs_);
    out["fixed_point"] = {{"iterations", fp->iterations},
                          {"shoulder_bid", fp->shoulder_bid},
                          {"shoulder_ask", fp->shoulder_ask},
                          {"difference_residual", fp->difference_residual}};
    shoulder_bid = fp->shoulder_bid;
    shoulder_ask = fp->shoulder_ask;
    if (spec.csv) w.text("binned.csv", table(fp->pi_beta, fp->pi_alpha));
  }
  if (method != "fixed_point") {
    binned::TruncatedCTMC chain{bm, get_or(cfg, "queue_cap", 30), model.rate_bid, model.rate_ask};
    const auto ct = binned::ctmc_stationary(chain);
    json cj{{"queue_cap", chain.queue_cap}, {"n_states", ct.n_states}, {"interior_empty", ct.interior_empty}};
    if (fp) {
      double diff = 0.0;
      for (int k = 0; k < n; ++k)
        diff = std::max({diff, std::abs(ct.pi_beta[k] - fp->pi_beta[k]), std::abs(ct.pi_alpha[k] - fp->pi_alpha[k])});
      cj["max_difference_to_fixed_point"] = diff;
    }
    out["ctmc"] = cj;
    if (spec.csv) w.text("binned_ctmc.csv", table(ct.pi_beta, ct.pi_alpha));
  }
  if (cfg.contains("simulate_events")) {
    const auto cc = binned::simulate_binned_cross_check(bm, get_or<std::uint64_t>(cfg, "simulate_events", 0),
                                                        RngSeed{seed, 0});
    out["simulation"] = {{"events", get_or<std::uint64_t>(cfg, "simulate_events", 0)},
                         {"seed", seed},
                         {"max_error", cc.max_error},
                         {"simulated_pi_beta", cc.simulated_beta}};
  }
  if (spec.json) w.json_file("binned.json", out);
}

// ---------------------------------------------------------------- strategy

void cmd_strategy(const json& cfg, Writer& w, std::uint64_t seed) {
  check_common(cfg, {"optimize", "curve", "confirm_events"}, "strategy");
  const OutputSpec spec = parse_outputs(cfg);
  const auto what = require<std::string>(cfg, "optimize", "strategy");
  json out{{"optimize", what}};
  std::unique_ptr<StrategyHook> hook;
  double rate = 0.0;
  std::string curve_kind = what;
  double lo = 0.0, hi = 0.5, fixed_p = 0.75;

  if (what == "mm") {
    const auto o = strategy::optimize_mm();
    const auto d = strategy::mm_density(o.p);
    out.update({{"p", o.p}, {"q", 1.0 - o.p}, {"rate", o.rate}, {"kappa_b", d.kappa_b}, {"C", d.C},
                {"prob_at_p", d.prob_at_p}});
    hook = strategy::make_market_maker({o.p});
    rate = o.rate;
    lo = analytic::kappa_uniform();
  } else if (what == "snipe") {
    const auto o = strategy::optimize_snipe();
    out.update({{"q", o.p}, {"p", 1.0 - o.p}, {"rate", o.rate}, {"kappa_b", o.p / std::exp(1.0)}});
    hook = strategy::make_sniper({o.p, 1.0 - o.p});
    rate = o.rate;
    lo = 0.01;
  } else if (what == "mixed") {
    const auto o = strategy::optimize_mixed();
    out.update({{"P", o.P}, {"p", o.p}, {"rate", o.rate}, {"case", strategy::to_string(o.tag)}});
    hook = strategy::make_mixed({o.P, o.p});
    rate = o.rate;
    fixed_p = o.p;
  } else {
    config_error("optimize must be mm, snipe or mixed");
  }

  int points = 101;
  if (cfg.contains("curve")) {
    const json& c = cfg.at("curve");
    check_keys(c, {"kind", "from", "to", "points", "p"}, "curve");
    curve_kind = get_or(c, "kind", curve_kind);
    lo = get_or(c, "from", lo);
    hi = get_or(c, "to", hi);
    points = get_or(c, "points", points);
    fixed_p = get_or(c, "p", fixed_p);
  }
  const auto curve = strategy::profit_curve(curve_kind, lo, hi, points, fixed_p);

  if (cfg.contains("confirm_events")) {
    const auto events = get_or<std::uint64_t>(cfg, "confirm_events", 0);
    SimConfig sc;
    sc.horizon = Horizon::events(events);
    sc.seed = {seed, 0};
    const auto r = run(sc, {hook.get()});
    const double sim = r.pnl.front().ledger.profit_rate(r.measured_time);
    out["simulation"] = {{"events", events}, {"seed", seed}, {"rate", sim}, {"difference", sim - rate}};
  }
  if (spec.json) w.json_file("strategy.json", out);
  if (spec.csv) {
    Csv csv({"parameter", "rate", "case_tag"});
    for (const auto& p : curve) csv.row(p.parameter, p.rate, p.case_tag);
    w.text("profit_curve.csv", csv.str());
  }
}

// ---------------------------------------------------------------- equilibrium

void cmd_equilibrium(const json& cfg, Writer& w) {
  check_common(cfg, {"kind", "n"}, "equilibrium");
  const OutputSpec spec = parse_outputs(cfg);
  const auto kind = require<std::string>(cfg, "kind", "equilibrium");
  json out{{"kind", kind}};
  if (kind == "nash_sniping") {
    const auto n = strategy::nash_sniping(get_or(cfg, "n", 2));
    out.update({{"n", n.n_traders},
                {"combined_rate", n.combined_rate},
                {"per_trader_rate", n.per_trader_rate},
                {"mean_spread", n.mean_spread},
                {"max_spread", n.max_spread}});
  } else if (kind == "stackelberg") {
    const auto s = strategy::stackelberg_equilibrium();
    out.update({{"P", s.P}, {"q", s.q}, {"mm_rate", s.mm_rate}, {"sniper_rate", s.sniper_rate}});
  } else if (kind != "spread_table") {
    config_error("equilibrium kind must be nash_sniping, stackelberg or spread_table");
  }
  const auto rows = strategy::spread_table();
  json table = json::array();
  Csv csv({"scenario", "mean_spread", "max_spread"});
  for (const auto& r : rows) {
    table.push_back({{"scenario", r.scenario}, {"mean_spread", r.mean_spread}, {"max_spread", r.max_spread}});
    csv.row(r.scenario, r.mean_spread, r.max_spread);
  }
  out["spread_table"] = table;
  if (spec.json) w.json_file("equilibrium.json", out);
  if (spec.csv) w.text("spread_table.csv", csv.str());
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

unsigned sweep_threads() {
  if (const char* env = std::getenv("LOBKIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

RunSummary run_experiment(const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (std::find(std::begin(kCommands), std::end(kCommands), options.command) == std::end(kCommands))
    config_error("unknown command '" + options.command + "'");

  json cfg = parse_json(options.config_json);
  if (!cfg.is_object()) config_error("config must be a JSON object");
  if (cfg.contains("tool") && cfg.contains("config")) cfg = cfg.at("config");  // manifest
  if (cfg.contains("command") && cfg.at("command") != options.command)
    config_error("config was written for command '" + cfg.at("command").dump() + "'");
  if (options.sweep < 0) config_error("sweep count must be nonnegative");
  if (options.sweep > 0 && options.command != "simulate") config_error("sweeps are only supported for simulate");

  cfg["command"] = options.command;
  if (options.seed) cfg["seed"] = *options.seed;
  const auto seed = get_or<std::uint64_t>(cfg, "seed", 1);
  cfg["seed"] = seed;
  if (options.sweep > 0) {
    json seeds = json::array();
    for (int i = 0; i < options.sweep; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
    cfg["sweep"] = {{"seeds", seeds}};
  }
  fs::path out_dir = options.out_dir;
  if (out_dir.empty()) {
    out_dir = "out";
    if (cfg.contains("outputs") && cfg.at("outputs").is_object() && cfg.at("outputs").contains("dir"))
      out_dir = get_or<std::string>(cfg.at("outputs"), "dir", "out");
  }
  const std::string hash = fnv1a_hex(cfg.dump());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  Writer w(out_dir);

  try {
    if (options.command == "simulate") {
      cmd_simulate(cfg, w, seed, out_dir);
    } else if (options.command == "solve") {
      cmd_solve(cfg, w);
    } else if (options.command == "binned") {
      cmd_binned(cfg, w, seed);
    } else if (options.command == "strategy") {
      cmd_strategy(cfg, w, seed);
    } else {
      cmd_equilibrium(cfg, w);
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  }

  RunSummary summary;
  summary.config_hash = hash;
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  summary.outputs = w.written();
  json manifest{{"tool", "lobkin"},
                {"version", kVersion},
                {"command", options.command},
                {"config_hash", hash},
                {"seed", seed},
                {"wall_clock_seconds", summary.wall_seconds},
                {"outputs", summary.outputs},
                {"config", cfg}};
  w.json_file("manifest.json", manifest);
  summary.outputs.push_back("manifest.json");
  return summary;
}

}  // namespace lobkin::experiment
