#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lobkin/simulator.hpp"

namespace lobkin::strategy {

struct MarketMakerConfig {
  double p = 0.377;  // infinite bids at p, infinite asks at 1 - p
  double q() const { return 1.0 - p; }
};

struct SniperConfig {
  double q = 0.324;  // sell to bids joining above q
  double p = 0.676;  // buy asks joining below p
};

struct MixedConfig {
  double P = 0.25;  // infinite bids at P, infinite asks at 1 - P
  double p = 0.75;  // buy asks joining below p, sell to bids joining above 1 - p
};

struct MmDensity {
  double p = 0.0;
  double C = 0.0;
  double kappa_b = 0.0;
  double prob_at_p = 0.0;  // P(best bid = p)

  // Density of the highest natural bid.
  double varpi_b(double x) const;
};

MmDensity mm_density(double p);
double mm_profit(double p);

struct Optimum {
  double p = 0.0;  // level or threshold being optimised
  double rate = 0.0;
};

Optimum optimize_mm();
double snipe_profit(double q);
Optimum optimize_snipe();

enum class MixedCase { MarketMaker, SnipeBelowHalf, SnipeAcrossHalf, CrossedThresholds, AboveHalf };
const char* to_string(MixedCase c);

MixedCase classify_mixed(double P, double p);

struct MixedRate {
  double rate = 0.0;
  MixedCase tag = MixedCase::MarketMaker;
};

MixedRate mixed_profit(double P, double p);

struct MixedOptimum {
  double P = 0.0;
  double p = 0.0;
  double rate = 0.0;
  MixedCase tag = MixedCase::SnipeAcrossHalf;
};

MixedOptimum optimize_mixed();

struct Stackelberg {
  double P = 0.0;
  double q = 0.0;
  double mm_rate = 0.0;
  double sniper_rate = 0.0;
};

// Sniper's rate when it snipes bids above q and asks below 1 - q against a
// market maker at P.
double stackelberg_sniper_rate(double P, double q);
double stackelberg_mm_rate(double P, double q);
double sniper_best_response(double P);
Stackelberg stackelberg_equilibrium();

struct NashSniping {
  int n_traders = 2;
  double combined_rate = 0.0;
  double per_trader_rate = 0.0;
  double mean_spread = 0.0;
  double max_spread = 0.0;
};

NashSniping nash_sniping(int n_traders);

// Per-trader rates of symmetric snipers with ask thresholds p_i (bid thresholds
// 1 - p_i), ties split evenly among the traders willing to snipe. The law of the
// highest natural bid follows the largest threshold unless `book_threshold`
// pins it, which models traders who take the book as given.
std::vector<double> sniper_pool_rates(const std::vector<double>& thresholds,
                                      std::optional<double> book_threshold = std::nullopt);

struct SpreadRow {
  std::string scenario;
  double mean_spread = 0.0;
  double max_spread = 0.0;
};

std::vector<SpreadRow> spread_table();

struct CurvePoint {
  double parameter = 0.0;
  double rate = 0.0;
  std::string case_tag;
};

// kind: "mm" (over p), "snipe" (over q), "mixed" (over P with fixed snipe threshold).
std::vector<CurvePoint> profit_curve(const std::string& kind, double from, double to, int points,
                                     double fixed_p = 0.75);

// Simulator hooks.
class SniperHook : public StrategyHook {
 public:
  SniperHook(std::string name, SniperConfig cfg) : name_(std::move(name)), cfg_(cfg) {}
  std::string name() const override { return name_; }
  bool wants_snipe(Side joined, double price, const BookState&) const override {
    return joined == Side::Bid ? price > cfg_.q : price < cfg_.p;
  }

 private:
  std::string name_;
  SniperConfig cfg_;
};

class MixedHook : public StrategyHook {
 public:
  explicit MixedHook(MixedConfig cfg, std::string name = "mixed") : name_(std::move(name)), cfg_(cfg) {}
  std::string name() const override { return name_; }
  void on_start(BookState& book, const PriceEquivalence& eq, OwnerId self) override;
  bool wants_snipe(Side joined, double price, const BookState&) const override {
    return joined == Side::Bid ? price > 1.0 - cfg_.p : price < cfg_.p;
  }

 private:
  std::string name_;
  MixedConfig cfg_;
};

std::unique_ptr<StrategyHook> make_market_maker(const MarketMakerConfig& cfg, std::string name = "market_maker");
std::unique_ptr<StrategyHook> make_sniper(const SniperConfig& cfg, std::string name = "sniper");
std::unique_ptr<StrategyHook> make_mixed(const MixedConfig& cfg, std::string name = "mixed");
std::vector<std::unique_ptr<StrategyHook>> make_sniper_pool(int n, const SniperConfig& cfg);
// Infinite bid at 0 and ask at 1: market orders that find the opposite side empty are lost.
std::unique_ptr<StrategyHook> make_lost_market_orders();

}  // namespace lobkin::strategy
