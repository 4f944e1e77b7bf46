#include "lobkin/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/tools/minima.hpp>

#include "lobkin/analytic.hpp"
#include "lobkin/error.hpp"

namespace lobkin::strategy {
namespace {

const double kE = boost::math::constants::e<double>();
constexpr int kBits = std::numeric_limits<double>::digits / 2;
constexpr double kTieTolerance = 1e-9;

// Maximise a smooth unimodal objective on [lo, hi].
template <class F>
std::pair<double, double> maximise(F f, double lo, double hi) {
  auto neg = [&](double x) { return -f(x); };
  auto [x, fx] = boost::math::tools::brent_find_minima(neg, lo, hi, kBits);
  return {x, -fx};
}

// Antiderivative of (1 - 2x) log(x / k).
double log_antiderivative(double x, double k) {
  const double l = std::log(x / k);
  return x * l - x - x * x * l + x * x / 2.0;
}

// Integral of (1 - 2x) log(x / k) over [a, b] intersected with [k, inf).
double log_weighted(double a, double b, double k) {
  a = std::max(a, k);
  if (b <= a) return 0.0;
  return log_antiderivative(b, k) - log_antiderivative(a, k);
}

// Integral of (1 - 2x) over [a, b].
double linear_weighted(double a, double b) { return (b - a) - (b * b - a * a); }

double mm_kappa(double p) {
  const double r = std::log((1.0 - p) / p);
  const double C = 1.0 / (1.0 + p * r);
  return (p / kE) * std::pow((1.0 - p) / p, C);
}

void check_price(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must lie in [0, 1]");
}

}  // namespace

double MmDensity::varpi_b(double x) const {
  if (x < kappa_b || x > 1.0 - p) return 0.0;
  if (x <= p) return 1.0 / x;
  return C * (1.0 / x + std::log((1.0 - x) / x));
}

MmDensity mm_density(double p) {
  const double kappa = analytic::kappa_uniform();
  if (!(p > kappa && p <= 0.5))
    throw Error(ErrorCode::InvalidArgument, "market maker level must lie in (kappa, 1/2]");
  MmDensity d;
  d.p = p;
  const double r = std::log((1.0 - p) / p);
  d.C = 1.0 / (1.0 + p * r);
  d.kappa_b = (p / kE) * std::pow((1.0 - p) / p, d.C);
  d.prob_at_p = 1.0 - d.C * r;
  return d;
}

double mm_profit(double p) {
  check_price(p, "p");
  if (p >= 0.5 || p <= analytic::kappa_uniform()) return 0.0;
  const auto d = mm_density(p);
  return (1.0 - 2.0 * p) * p * d.prob_at_p;
}

Optimum optimize_mm() {
  auto [p, rate] = maximise(mm_profit, analytic::kappa_uniform(), 0.5);
  return {p, rate};
}

double snipe_profit(double q) {
  if (!(q > 0.0 && q <= 0.5)) throw Error(ErrorCode::InvalidArgument, "snipe threshold must lie in (0, 1/2]");
  const double k = q / kE;
  return k - q * q / 2.0 - q * q / (2.0 * kE * kE);
}

Optimum optimize_snipe() {
  auto [q, rate] = maximise(snipe_profit, 1e-9, 0.5);
  return {q, rate};
}

const char* to_string(MixedCase c) {
  switch (c) {
    case MixedCase::MarketMaker: return "market_maker";
    case MixedCase::SnipeBelowHalf: return "snipe_below_half";
    case MixedCase::SnipeAcrossHalf: return "snipe_across_half";
    case MixedCase::CrossedThresholds: return "crossed_thresholds";
    case MixedCase::AboveHalf: return "above_half";
  }
  return "unknown";
}

MixedCase classify_mixed(double P, double p) {
  check_price(P, "P");
  check_price(p, "p");
  if (P >= 0.5) return MixedCase::AboveHalf;
  if (p <= P) return MixedCase::MarketMaker;
  if (p <= 0.5) return MixedCase::SnipeBelowHalf;
  if (P <= 1.0 - p) return MixedCase::SnipeAcrossHalf;
  return MixedCase::CrossedThresholds;
}

MixedRate mixed_profit(double P, double p) {
  const MixedCase tag = classify_mixed(P, p);
  const double pair = (1.0 - 2.0 * P) * P;
  double rate = 0.0;
  switch (tag) {
    case MixedCase::MarketMaker:
      rate = mm_profit(P);
      break;
    case MixedCase::SnipeBelowHalf: {
      if (p <= analytic::kappa_uniform()) break;
      const double k = mm_kappa(p);
      rate = pair * std::max(0.0, std::log(P / k)) + log_weighted(P, p, k);
      break;
    }
    case MixedCase::SnipeAcrossHalf: {
      const double q = 1.0 - p;
      const double k = q / kE;
      rate = (P > k ? pair * std::log(P / k) : 0.0) + log_weighted(P, q, k);
      break;
    }
    case MixedCase::CrossedThresholds:
      rate = pair + linear_weighted(1.0 - P, p);
      break;
    case MixedCase::AboveHalf:
      rate = pair + linear_weighted(P, std::max(P, p));
      break;
  }
  return {rate, tag};
}

MixedOptimum optimize_mixed() {
  // On the boundary P = 1 - p the rate is (1 - 2P) P, maximal at P = 1/4. Every
  // crossed-threshold configuration does worse than its boundary projection.
  MixedOptimum best{0.25, 0.75, 0.125, MixedCase::SnipeAcrossHalf};
  const double kappa = analytic::kappa_uniform();

  auto consider = [&](double P, double p) {
    const auto r = mixed_profit(P, p);
    if (r.rate > best.rate + kTieTolerance) best = {P, p, r.rate, r.tag};
  };

  const auto mm = optimize_mm();
  consider(mm.p, 0.0);

  // Snipe threshold below 1/2: profile over the level for each threshold.
  auto below_profile = [&](double p) {
    return maximise([&](double P) { return mixed_profit(P, p).rate; }, 0.0, p);
  };
  const auto [p2, r2] = maximise([&](double p) { return below_profile(p).second; }, kappa, 0.5);
  (void)r2;
  consider(below_profile(p2).first, p2);

  // Threshold above 1/2 with P <= 1 - p: the rate is flat for P below q / e.
  auto across_profile = [&](double q) {
    return maximise([&](double P) { return mixed_profit(P, 1.0 - q).rate; }, q / kE, q);
  };
  const auto [q3, r3] = maximise([&](double q) { return across_profile(q).second; }, 1e-9, 0.5 - 1e-12);
  (void)r3;
  consider(across_profile(q3).first, 1.0 - q3);
  return best;
}

double stackelberg_sniper_rate(double P, double q) {
  if (!(P >= 0.0 && q >= P && q <= 0.5))
    throw Error(ErrorCode::InvalidArgument, "sniper threshold must lie in [P, 1/2]");
  if (q == 0.0) return 0.0;
  return log_weighted(P, q, q / kE);
}

double stackelberg_mm_rate(double P, double q) {
  if (!(P > 0.0 && q >= P && q <= 0.5))
    throw Error(ErrorCode::InvalidArgument, "sniper threshold must lie in [P, 1/2]");
  return (1.0 - 2.0 * P) * P * std::max(0.0, std::log(kE * P / q));
}

double sniper_best_response(double P) {
  check_price(P, "P");
  return std::sqrt(P * (1.0 - P));
}

Stackelberg stackelberg_equilibrium() {
  auto leader = [](double P) { return stackelberg_mm_rate(P, sniper_best_response(P)); };
  auto [P, mm_rate] = maximise(leader, analytic::kappa_uniform(), 0.5);
  const double q = sniper_best_response(P);
  return {P, q, mm_rate, stackelberg_sniper_rate(P, q)};
}

NashSniping nash_sniping(int n_traders) {
  if (n_traders < 2) throw Error(ErrorCode::InvalidArgument, "Nash sniping needs at least two traders");
  NashSniping out;
  out.n_traders = n_traders;
  out.combined_rate = 1.0 / (2.0 * kE) - (1.0 + kE * kE) / (8.0 * kE * kE);
  out.per_trader_rate = out.combined_rate / n_traders;
  out.mean_spread = 1.0 / kE;
  out.max_spread = 1.0 - 1.0 / kE;
  return out;
}

std::vector<double> sniper_pool_rates(const std::vector<double>& thresholds, std::optional<double> book_threshold) {
  if (thresholds.empty()) throw Error(ErrorCode::InvalidArgument, "empty sniper pool");
  for (double p : thresholds) check_price(p, "threshold");
  const double p_max = book_threshold.value_or(*std::max_element(thresholds.begin(), thresholds.end()));
  check_price(p_max, "book threshold");
  std::vector<double> rates(thresholds.size(), 0.0);

  // Law of the highest natural bid: density 1/x on (k, top), then no bids above top.
  double k = 0.0, top = 0.0;
  if (p_max >= 0.5) {
    top = 1.0 - p_max;
    k = top / kE;
  } else if (*std::max_element(thresholds.begin(), thresholds.end()) > p_max) {
    throw Error(ErrorCode::InvalidArgument, "pinned book threshold below 1/2 must dominate every trader");
  } else if (p_max > analytic::kappa_uniform()) {
    k = mm_kappa(p_max);
    top = 1.0;  // only prices below p_max are ever sniped
  } else {
    return rates;
  }
  auto joined_weighted = [&](double a, double b) {
    // Integral of (1 - 2x) P(best bid < x) over [a, b].
    double s = log_weighted(a, std::min(b, top), k);
    if (b > top) s += linear_weighted(std::max(a, top), b);
    return s;
  };

  std::vector<double> cuts{k};
  for (double p : thresholds)
    if (p > k) cuts.push_back(p);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    int n = 0;
    for (double p : thresholds) n += p >= b;
    const double share = joined_weighted(a, b) / n;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (thresholds[i] >= b) rates[i] += share;
  }
  return rates;
}

std::vector<SpreadRow> spread_table() {
  std::vector<SpreadRow> rows;
  const double kappa = analytic::kappa_uniform();
  rows.push_back({"no_traders", kappa, 1.0 - 2.0 * kappa});

  const double qs = kE / (kE * kE + 1.0);
  rows.push_back({"single_sniper", 1.0 - 2.0 * qs * (1.0 - 1.0 / kE), 1.0 - 2.0 * qs / kE});

  const auto nash = nash_sniping(2);
  rows.push_back({"nash_snipers", nash.mean_spread, nash.max_spread});

  // Best bid is max(P, natural best bid), the latter with density 1/x on (q/e, q).
  const auto st = stackelberg_equilibrium();
  const double mean_bid = st.P * std::log(kE * st.P / st.q) + (st.q - st.P);
  rows.push_back({"market_maker_and_sniper", 1.0 - 2.0 * mean_bid, 1.0 - 2.0 * st.P});
  return rows;
}

std::vector<CurvePoint> profit_curve(const std::string& kind, double from, double to, int points, double fixed_p) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "profit curve needs at least two points");
  if (!(from < to)) throw Error(ErrorCode::InvalidArgument, "profit curve range is empty");
  std::vector<CurvePoint> out;
  out.reserve(points);
  for (int i = 0; i < points; ++i) {
    const double x = from + (to - from) * i / (points - 1);
    if (kind == "mm") {
      out.push_back({x, mm_profit(x), "market_maker"});
    } else if (kind == "snipe") {
      out.push_back({x, snipe_profit(x), "snipe"});
    } else if (kind == "mixed") {
      const auto r = mixed_profit(x, fixed_p);
      out.push_back({x, r.rate, to_string(r.tag)});
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown profit curve kind: " + kind);
    }
  }
  return out;
}

void MixedHook::on_start(BookState& book, const PriceEquivalence& eq, OwnerId self) {
  book.place(Side::Bid, cfg_.P, Depth::infinite(), self, eq);
  book.place(Side::Ask, 1.0 - cfg_.P, Depth::infinite(), self, eq);
}

std::unique_ptr<StrategyHook> make_market_maker(const MarketMakerConfig& cfg, std::string name) {
  check_price(cfg.p, "p");
  if (!(cfg.p < cfg.q())) throw Error(ErrorCode::InvalidArgument, "market maker levels would cross");
  return std::make_unique<StaticLevelsHook>(std::move(name), cfg.p, cfg.q());
}

std::unique_ptr<StrategyHook> make_sniper(const SniperConfig& cfg, std::string name) {
  check_price(cfg.q, "q");
  check_price(cfg.p, "p");
  return std::make_unique<SniperHook>(std::move(name), cfg);
}

std::unique_ptr<StrategyHook> make_mixed(const MixedConfig& cfg, std::string name) {
  check_price(cfg.P, "P");
  check_price(cfg.p, "p");
  if (!(cfg.P < 1.0 - cfg.P)) throw Error(ErrorCode::InvalidArgument, "mixed strategy levels would cross");
  return std::make_unique<MixedHook>(cfg, std::move(name));
}

std::vector<std::unique_ptr<StrategyHook>> make_sniper_pool(int n, const SniperConfig& cfg) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sniper pool needs at least one trader");
  std::vector<std::unique_ptr<StrategyHook>> out;
  for (int i = 0; i < n; ++i) out.push_back(make_sniper(cfg, "sniper_" + std::to_string(i)));
  return out;
}

std::unique_ptr<StrategyHook> make_lost_market_orders() {
  return std::make_unique<StaticLevelsHook>("boundary", 0.0, 1.0);
}

}  // namespace lobkin::strategy
