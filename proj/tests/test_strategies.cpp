#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <algorithm>
#include <cmath>

#include "lobkin/error.hpp"
#include "lobkin/simulator.hpp"
#include "lobkin/strategies.hpp"

using namespace lobkin;
using namespace lobkin::strategy;

namespace {

const double kE = std::exp(1.0);

double kappa() {
  const double w = boost::math::lambert_w0(1.0 / kE);
  return w / (1.0 + w);
}

template <class F>
double quad(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-13);
}

// Sniper rate by quadrature: joined orders at x (best bid below x) priced
// in (lo, hi), each worth 1 - 2x for the pair, with the best bid law 1/x on (k, top).
double sniped_rate_oracle(double lo, double hi, double k) {
  return quad([k](double x) { return (1 - 2 * x) * std::log(x / k); }, std::max(lo, k), hi);
}

// Per-trader rates in a symmetric sniper pool, computed pointwise: at price x
// the joined-ask flow P(best bid < x) is split among traders with threshold above x.
std::vector<double> pool_oracle(const std::vector<double>& thresholds, double book_threshold) {
  const double top = 1.0 - book_threshold;
  const double k = top / kE;
  auto below = [&](double x) { return x <= k ? 0.0 : x >= top ? 1.0 : std::log(x / k); };
  std::vector<double> rates;
  for (double mine : thresholds) {
    auto integrand = [&](double x) {
      int takers = 0;
      for (double p : thresholds) takers += p > x;
      return takers == 0 || x >= mine ? 0.0 : (1 - 2 * x) * below(x) / takers;
    };
    std::vector<double> cuts{0.0, k, top};
    for (double p : thresholds) cuts.push_back(p);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += quad(integrand, cuts[i], cuts[i + 1]);
    rates.push_back(total);
  }
  return rates;
}

double profit_rate(const SimReport& r, std::size_t i) { return r.pnl[i].ledger.profit_rate(r.measured_time); }

SimConfig sim(std::uint64_t events, std::uint64_t seed) {
  SimConfig cfg;
  cfg.horizon = Horizon::events(events);
  cfg.seed = {seed, 0};
  return cfg;
}

}  // namespace

TEST(MarketMaker, DensityContinuousAndNormalized) {
  for (double p : {0.25, 0.3, 0.377, 0.45, 0.5}) {
    const auto d = mm_density(p);
    const double r = std::log((1 - p) / p);
    EXPECT_NEAR(d.C * (1 / p + r), 1 / p, 1e-12) << p;
    if (p < 0.5) EXPECT_NEAR(d.varpi_b(p - 1e-9), d.varpi_b(p + 1e-9), 1e-6) << p;
    // Shadow natural bids below p carry exactly the mass of the level at p.
    EXPECT_NEAR(quad([](double x) { return 1 / x; }, d.kappa_b, p), d.prob_at_p, 1e-10) << p;
    const double above = quad([&](double x) { return d.varpi_b(x); }, p, 1 - p);
    EXPECT_NEAR(above + d.prob_at_p, 1.0, 1e-10) << p;
  }
}

TEST(MarketMaker, LevelAtThresholdIsNeverBest) {
  const auto d = mm_density(kappa() + 1e-7);
  EXPECT_NEAR(d.prob_at_p, 0.0, 1e-5);
  EXPECT_THROW(mm_density(kappa() - 1e-3), Error);
  EXPECT_THROW(mm_density(0.6), Error);
}

TEST(MarketMaker, ProfitFormula) {
  for (double p : {0.3, 0.377, 0.45}) {
    const double r = std::log((1 - p) / p), C = 1 / (1 + p * r);
    EXPECT_NEAR(mm_profit(p), (1 - 2 * p) * p * (1 - C * r), 1e-14);
  }
  EXPECT_EQ(mm_profit(0.5), 0.0);
  EXPECT_EQ(mm_profit(0.2), 0.0);
}

TEST(MarketMaker, Optimum) {
  const auto o = optimize_mm();
  EXPECT_NEAR(o.p, 0.377, 1e-3);
  EXPECT_NEAR(o.rate, 0.054, 1e-3);
  EXPECT_NEAR(o.p, 0.37739758, 1e-6);
  EXPECT_NEAR(o.rate, 0.05357505, 1e-8);
  for (double dp : {-0.01, -0.001, 0.001, 0.01}) EXPECT_LT(mm_profit(o.p + dp), o.rate);
}

TEST(Sniper, ProfitMatchesQuadrature) {
  for (double q : {0.2, 0.324, 0.45, 0.5}) EXPECT_NEAR(snipe_profit(q), sniped_rate_oracle(q / kE, q, q / kE), 1e-12);
  EXPECT_THROW(snipe_profit(0.0), Error);
  EXPECT_THROW(snipe_profit(0.6), Error);
}

TEST(Sniper, Optimum) {
  const auto o = optimize_snipe();
  EXPECT_NEAR(o.p, kE / (kE * kE + 1), 1e-7);
  EXPECT_NEAR(o.p, 0.324, 1e-3);
  EXPECT_NEAR(o.rate, 0.060, 1e-3);
  EXPECT_NEAR(o.rate, 0.05960146, 1e-8);
}

TEST(Mixed, Classification) {
  EXPECT_EQ(classify_mixed(0.3, 0.2), MixedCase::MarketMaker);
  EXPECT_EQ(classify_mixed(0.3, 0.4), MixedCase::SnipeBelowHalf);
  EXPECT_EQ(classify_mixed(0.25, 0.75), MixedCase::SnipeAcrossHalf);
  EXPECT_EQ(classify_mixed(0.2, 0.7), MixedCase::SnipeAcrossHalf);
  EXPECT_EQ(classify_mixed(0.3, 0.8), MixedCase::CrossedThresholds);
  EXPECT_EQ(classify_mixed(0.6, 0.7), MixedCase::AboveHalf);
}

TEST(Mixed, BoundaryOptimum) {
  const auto r = mixed_profit(0.25, 0.75);
  EXPECT_NEAR(r.rate, 0.125, 1e-12);
  const auto o = optimize_mixed();
  EXPECT_NEAR(o.P, 0.25, 1e-6);
  EXPECT_NEAR(o.p, 0.75, 1e-6);
  EXPECT_NEAR(o.rate, 0.125, 1e-9);
  EXPECT_EQ(o.tag, MixedCase::SnipeAcrossHalf);
  // Nearby configurations do no better.
  for (double dP : {-0.02, 0.0, 0.02})
    for (double dp : {-0.02, 0.0, 0.02}) EXPECT_LE(mixed_profit(0.25 + dP, 0.75 + dp).rate, 0.125 + 1e-12);
}

TEST(Mixed, AcrossHalfByQuadrature) {
  // Pairs through the level at rate P log(P / k) plus sniped asks in (P, 1 - p).
  for (auto [P, p] : {std::pair{0.2, 0.7}, {0.25, 0.75}, {0.22, 0.6}}) {
    const double q = 1 - p, k = q / kE;
    const double expected = (1 - 2 * P) * P * std::log(P / k) + sniped_rate_oracle(P, q, k);
    EXPECT_NEAR(mixed_profit(P, p).rate, expected, 1e-10) << P << " " << p;
  }
}

TEST(Mixed, MarketMakerRegimeMatchesMm) {
  EXPECT_NEAR(mixed_profit(0.3, 0.2).rate, mm_profit(0.3), 1e-14);
  EXPECT_NEAR(mixed_profit(0.3, 0.2).rate, 0.03893111, 1e-8);
}

TEST(Mixed, AboveHalfLoses) {
  for (double P : {0.55, 0.6, 0.8}) EXPECT_LT(mixed_profit(P, 0.7).rate, 0.0) << P;
  EXPECT_NEAR(mixed_profit(0.6, 0.7).rate, -0.15, 1e-12);
}

TEST(Stackelberg, Equilibrium) {
  const auto s = stackelberg_equilibrium();
  EXPECT_NEAR(s.P, 0.340, 1e-3);
  EXPECT_NEAR(s.mm_rate, 0.073, 1e-3);
  EXPECT_NEAR(s.sniper_rate, 0.020, 1e-3);
  EXPECT_NEAR(s.q, std::sqrt(s.P * (1 - s.P)), 1e-12);
  EXPECT_NEAR(s.mm_rate, (1 - 2 * s.P) * s.P * std::log(kE * s.P / s.q), 1e-12);
  EXPECT_NEAR(s.sniper_rate, quad([&](double x) { return (1 - 2 * x) * std::log(kE * x / s.q); }, s.P, s.q), 1e-12);
  EXPECT_DOUBLE_EQ(sniper_best_response(0.5), 0.5);
  EXPECT_NEAR(stackelberg_sniper_rate(0.5, 0.5), 0.0, 1e-15);
}

TEST(Stackelberg, BestResponseIsLocallyOptimal) {
  for (double P = 0.26; P < 0.49; P += 0.02) {
    const double q = sniper_best_response(P);
    const double at = stackelberg_sniper_rate(P, q);
    for (double dq : {-0.01, 0.01}) {
      const double alt = std::clamp(q + dq, P, 0.5);
      EXPECT_LE(stackelberg_sniper_rate(P, alt), at + 1e-15) << P << " " << dq;
    }
  }
}

TEST(Nash, ClosedForm) {
  const auto n2 = nash_sniping(2);
  const double combined = 1 / (2 * kE) - (1 + kE * kE) / (8 * kE * kE);
  EXPECT_NEAR(n2.combined_rate, combined, 1e-12);
  EXPECT_NEAR(n2.combined_rate, 0.0420, 1e-4);
  EXPECT_NEAR(n2.per_trader_rate, combined / 2, 1e-12);
  EXPECT_NEAR(n2.mean_spread, 1 / kE, 1e-12);
  EXPECT_NEAR(n2.max_spread, 1 - 1 / kE, 1e-12);
  EXPECT_NEAR(nash_sniping(5).per_trader_rate, combined / 5, 1e-12);
  EXPECT_THROW(nash_sniping(1), Error);
}

TEST(Nash, PoolRatesMatchQuadrature) {
  const std::vector<std::vector<double>> pools = {
      {0.5, 0.5, 0.5}, {0.51, 0.5, 0.5}, {0.49, 0.5, 0.5}, {0.6, 0.55, 0.5}, {0.7}};
  for (const auto& pool : pools) {
    const double top = *std::max_element(pool.begin(), pool.end());
    const auto rates = sniper_pool_rates(pool);
    const auto oracle = pool_oracle(pool, top);
    for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_NEAR(rates[i], oracle[i], 1e-10);
  }
  const auto pinned = sniper_pool_rates({0.51, 0.5, 0.5}, 0.5);
  const auto oracle = pool_oracle({0.51, 0.5, 0.5}, 0.5);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(pinned[i], oracle[i], 1e-10);
}

TEST(Nash, PoolSumsToCombinedRate) {
  for (int n : {2, 3, 6}) {
    const auto rates = sniper_pool_rates(std::vector<double>(n, 0.5));
    double total = 0;
    for (double r : rates) {
      total += r;
      EXPECT_NEAR(r, rates.front(), 1e-15);
    }
    EXPECT_NEAR(total, nash_sniping(n).combined_rate, 1e-12);
  }
}

TEST(Nash, SingleTraderPoolIsTheSniper) {
  const double q = kE / (kE * kE + 1);
  EXPECT_NEAR(sniper_pool_rates({1 - q})[0], snipe_profit(q), 1e-12);
}

TEST(Nash, UnilateralDeviationDoesNotPayForPriceTakers) {
  for (int n : {2, 3, 5}) {
    std::vector<double> pool(n, 0.5);
    const double base = sniper_pool_rates(pool, 0.5)[0];
    for (double d : {-0.01, 0.01}) {
      pool[0] = 0.5 + d;
      EXPECT_LE(sniper_pool_rates(pool, 0.5)[0], base) << n << " " << d;
    }
  }
}

TEST(Nash, RaisingThresholdPaysWhenTheBookResponds) {
  // If the best-bid law follows the deviator, buying asks just above 1/2 thins
  // the bid side for everyone and the deviator gains.
  for (int n : {2, 3}) {
    std::vector<double> pool(n, 0.5);
    const double base = sniper_pool_rates(pool)[0];
    pool[0] = 0.51;
    const double dev = sniper_pool_rates(pool)[0];
    EXPECT_NEAR(dev, pool_oracle(pool, 0.51)[0], 1e-10);
    EXPECT_GT(dev, base) << n;
  }
  EXPECT_NEAR(sniper_pool_rates({0.5, 0.5})[0], 0.02101, 1e-5);
  EXPECT_NEAR(sniper_pool_rates({0.51, 0.5})[0], 0.02193, 1e-5);
}

TEST(SpreadTable, Rows) {
  const auto rows = spread_table();
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].scenario, "no_traders");
  EXPECT_NEAR(rows[0].mean_spread, kappa(), 1e-12);
  EXPECT_NEAR(rows[0].max_spread, 1 - 2 * kappa(), 1e-12);
  EXPECT_NEAR(rows[1].mean_spread, 1 - 2 * (kE - 1) / (kE * kE + 1), 1e-12);
  EXPECT_NEAR(rows[1].max_spread, 1 - 2 / (kE * kE + 1), 1e-12);
  EXPECT_NEAR(rows[1].mean_spread, 0.590, 1e-3);
  EXPECT_NEAR(rows[1].max_spread, 0.762, 1e-3);
  EXPECT_NEAR(rows[2].mean_spread, 1 / kE, 1e-12);
  EXPECT_NEAR(rows[2].max_spread, 1 - 1 / kE, 1e-12);
  // Best bid is max(P, natural bid), the latter with density 1/x on (q/e, q).
  const auto s = stackelberg_equilibrium();
  const double k = s.q / kE;
  const double mean_bid = s.P * quad([](double x) { return 1 / x; }, k, s.P) + quad([](double) { return 1.0; }, s.P, s.q);
  EXPECT_NEAR(rows[3].mean_spread, 1 - 2 * mean_bid, 1e-10);
  EXPECT_NEAR(rows[3].mean_spread, 0.277503, 1e-6);
  EXPECT_NEAR(rows[3].max_spread, 0.320, 1e-3);
}

TEST(ProfitCurve, Shapes) {
  const auto mm = profit_curve("mm", 0.25, 0.5, 11);
  ASSERT_EQ(mm.size(), 11u);
  EXPECT_DOUBLE_EQ(mm.back().parameter, 0.5);
  EXPECT_NEAR(mm[5].rate, mm_profit(0.375), 1e-15);
  const auto mixed = profit_curve("mixed", 0.1, 0.7, 7, 0.75);
  EXPECT_EQ(mixed.front().case_tag, to_string(classify_mixed(0.1, 0.75)));
  EXPECT_EQ(mixed.back().case_tag, to_string(MixedCase::AboveHalf));
  EXPECT_THROW(profit_curve("bogus", 0, 1, 3), Error);
  EXPECT_THROW(profit_curve("mm", 0.4, 0.3, 3), Error);
}

TEST(Hooks, FactoriesValidate) {
  EXPECT_THROW(make_mixed({0.6, 0.7}), Error);
  EXPECT_THROW(make_sniper_pool(0, {}), Error);
  const auto pool = make_sniper_pool(3, {0.5, 0.5});
  ASSERT_EQ(pool.size(), 3u);
  EXPECT_EQ(pool[2]->name(), "sniper_2");
}

TEST(Hooks, MixedSnipesOnlyOrdersThatWouldRest) {
  auto h = make_mixed({0.25, 0.75});
  BookState book;
  h->on_start(book, PriceEquivalence::identity(), 0);
  EXPECT_TRUE(book.depth_at(Side::Bid, 0.25).is_infinite());
  EXPECT_TRUE(book.depth_at(Side::Ask, 0.75).is_infinite());
  EXPECT_TRUE(h->wants_snipe(Side::Ask, 0.5, book));
  EXPECT_TRUE(h->wants_snipe(Side::Bid, 0.3, book));
  EXPECT_FALSE(h->wants_snipe(Side::Bid, 0.2, book));
}

// Short simulations; the long confirmations live in the acceptance suite.
TEST(HookSimulation, MarketMaker) {
  const auto o = optimize_mm();
  auto h = make_market_maker({o.p});
  const auto r = run(sim(2000000, 31), {h.get()});
  EXPECT_NEAR(profit_rate(r, 0), o.rate, 0.003);
}

TEST(HookSimulation, Sniper) {
  const auto o = optimize_snipe();
  auto h = make_sniper({o.p, 1 - o.p});
  const auto r = run(sim(2000000, 32), {h.get()});
  EXPECT_NEAR(profit_rate(r, 0), o.rate, 0.003);
}

TEST(HookSimulation, NashPool) {
  auto pool = make_sniper_pool(3, {0.5, 0.5});
  std::vector<StrategyHook*> hooks;
  for (auto& h : pool) hooks.push_back(h.get());
  const auto r = run(sim(2000000, 33), hooks);
  double total = 0;
  for (std::size_t i = 0; i < 3; ++i) total += profit_rate(r, i);
  EXPECT_NEAR(total, nash_sniping(3).combined_rate, 0.003);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(profit_rate(r, i), total / 3, 0.002);
  EXPECT_NEAR(r.collector.mean_spread(), 1 / kE, 0.01);
}

TEST(HookSimulation, Stackelberg) {
  const auto s = stackelberg_equilibrium();
  auto mm = make_market_maker({s.P});
  auto sn = make_sniper({s.q, 1 - s.q});
  const auto r = run(sim(2000000, 34), {mm.get(), sn.get()});
  EXPECT_NEAR(profit_rate(r, 0), s.mm_rate, 0.003);
  EXPECT_NEAR(profit_rate(r, 1), s.sniper_rate, 0.003);
  EXPECT_NEAR(r.collector.mean_spread(), spread_table()[3].mean_spread, 0.005);
}
