#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lobkin/arrivals.hpp"
#include "lobkin/book.hpp"
#include "lobkin/rng.hpp"

namespace lobkin {

// Cash/inventory account of one strategy. Only trades after burn-in are booked.
struct PnLLedger {
  double cash = 0.0;
  std::int64_t inventory = 0;
  std::uint64_t buys = 0;
  std::uint64_t sells = 0;
  std::uint64_t snipes = 0;
  std::uint64_t fills = 0;          // trades against the strategy's resting levels
  std::uint64_t snipe_attempts = 0;
  std::uint64_t cancellations = 0;  // lost snipe races

  std::uint64_t matched_pairs() const noexcept { return buys < sells ? buys : sells; }
  // Inventory is marked at `mark`; the default mid-price 1/2 makes a bought-and-sold
  // pair worth (ask - bid) regardless of the order in which the legs occurred.
  double profit(double mark = 0.5) const noexcept {
    return cash + static_cast<double>(inventory) * mark;
  }
  double profit_rate(double elapsed, double mark = 0.5) const noexcept {
    return elapsed > 0.0 ? profit(mark) / elapsed : 0.0;
  }

  void buy(double price) {
    cash -= price;
    ++inventory;
    ++buys;
  }
  void sell(double price) {
    cash += price;
    --inventory;
    ++sells;
  }
};

class StrategyHook {
 public:
  virtual ~StrategyHook() = default;

  virtual std::string name() const = 0;
  // Called once before the first arrival; may place infinite levels owned by `self`.
  virtual void on_start(BookState& /*book*/, const PriceEquivalence& /*eq*/, OwnerId /*self*/) {}
  // Whether the strategy would match the order that just joined at `price`.
  virtual bool wants_snipe(Side /*joined*/, double /*price*/, const BookState& /*book*/) const {
    return false;
  }
};

struct TradeRecord {
  double time = 0.0;
  double bid_price = 0.0;
  double ask_price = 0.0;
  Side aggressor = Side::Bid;
  OwnerId bid_owner = kNatural;
  OwnerId ask_owner = kNatural;
  bool snipe = false;
};

struct QueueSnapshot {
  double time = 0.0;
  std::vector<std::uint64_t> bid_depth;  // finite depth per grid bin
  std::vector<std::uint64_t> ask_depth;
};

struct StatsCollector {
  int n_bins = 50;
  std::vector<double> best_bid_time;
  std::vector<double> best_ask_time;
  double bid_absent_time = 0.0;
  double ask_absent_time = 0.0;
  double empty_side_time = 0.0;
  double both_present_time = 0.0;
  double spread_sum = 0.0;
  double spread_max = 0.0;
  std::vector<double> interval_empty_times;
  double interval_empty_duration = 0.0;
  std::vector<TradeRecord> trade_log;
  std::vector<QueueSnapshot> queue_profile;

  double mean_spread() const {
    return both_present_time > 0.0 ? spread_sum / both_present_time : 0.0;
  }
};

struct Horizon {
  enum class Unit : std::uint8_t { Events, Time };
  Unit unit = Unit::Events;
  double value = 1e6;

  static Horizon events(std::uint64_t n) { return {Unit::Events, static_cast<double>(n)}; }
  static Horizon time(double t) { return {Unit::Time, t}; }
};

struct SimConfig {
  ArrivalModel model;
  PriceEquivalence eq = PriceEquivalence::identity();
  Horizon horizon;
  // Burn-in in the horizon's unit; negative selects 10% of the horizon.
  double burn_in = -1.0;
  RngSeed seed;
  int stats_bins = 50;
  bool keep_trade_log = false;
  std::optional<std::pair<double, double>> empty_interval;
  std::uint64_t snapshot_every = 0;  // events between queue snapshots; 0 disables
};

struct HookResult {
  std::string name;
  PnLLedger ledger;
};

struct SimReport {
  double elapsed = 0.0;
  double burn_in_time = 0.0;
  double measured_time = 0.0;  // elapsed - burn_in_time
  std::uint64_t events_processed = 0;
  StatsCollector collector;
  std::optional<double> kappa_b_hat;
  std::optional<double> kappa_a_hat;
  std::vector<HookResult> pnl;
  // Post-burn-in counts of natural orders that traded.
  std::uint64_t natural_bids_matched = 0;
  std::uint64_t natural_asks_matched = 0;
  std::uint64_t trades = 0;
};

SimReport run(const SimConfig& config, const std::vector<StrategyHook*>& hooks = {});

SimReport run(const ArrivalModel& model, const PriceEquivalence& eq, Horizon horizon, RngSeed seed,
              const std::vector<StrategyHook*>& hooks, double burn_in);

std::pair<std::optional<double>, std::optional<double>> estimate_thresholds(const SimReport& report);

// Time-normalised best-quote densities on `n_bins` equal bins (must divide the
// collector grid). Mass deficit equals the fraction of time that side is empty.
std::vector<double> empirical_best_bid_density(const SimReport& report, int n_bins);
std::vector<double> empirical_best_ask_density(const SimReport& report, int n_bins);

}  // namespace lobkin

namespace lobkin {

// Places fixed infinite levels at start and does nothing else.
class StaticLevelsHook : public StrategyHook {
 public:
  StaticLevelsHook(std::string name, std::optional<double> bid, std::optional<double> ask)
      : name_(std::move(name)), bid_(bid), ask_(ask) {}

  std::string name() const override { return name_; }
  void on_start(BookState& book, const PriceEquivalence& eq, OwnerId self) override {
    if (bid_) book.place(Side::Bid, *bid_, Depth::infinite(), self, eq);
    if (ask_) book.place(Side::Ask, *ask_, Depth::infinite(), self, eq);
  }

 private:
  std::string name_;
  std::optional<double> bid_;
  std::optional<double> ask_;
};

}  // namespace lobkin
