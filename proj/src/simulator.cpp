#include "lobkin/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lobkin/error.hpp"

namespace lobkin {

namespace {

constexpr std::int64_t kInfiniteCount = std::int64_t{1} << 40;

class Runner {
 public:
  Runner(const SimConfig& cfg, const std::vector<StrategyHook*>& hooks)
      : cfg_(cfg), hooks_(hooks), tiebreak_(cfg.seed, 1) {
    auto& c = report_.collector;
    c.n_bins = cfg.stats_bins;
    c.best_bid_time.assign(static_cast<std::size_t>(cfg.stats_bins), 0.0);
    c.best_ask_time.assign(static_cast<std::size_t>(cfg.stats_bins), 0.0);
    report_.pnl.resize(hooks.size());
    for (std::size_t i = 0; i < hooks.size(); ++i) report_.pnl[i].name = hooks[i]->name();
    contenders_.reserve(hooks.size());
  }

  SimReport execute() {
    for (std::size_t i = 0; i < hooks_.size(); ++i)
      hooks_[i]->on_start(book_, cfg_.eq, static_cast<OwnerId>(i));
    if (book_.is_crossed(cfg_.eq)) throw Error(ErrorCode::InvalidArgument, "strategies crossed the book");
    init_interval_count();

    ArrivalStream stream(cfg_.model, cfg_.seed);
    const bool by_events = cfg_.horizon.unit == Horizon::Unit::Events;
    const double horizon = cfg_.horizon.value;
    const double burn = cfg_.burn_in < 0.0 ? (by_events ? std::floor(0.1 * horizon) : 0.1 * horizon)
                                           : cfg_.burn_in;
    const std::uint64_t n_events = by_events ? static_cast<std::uint64_t>(horizon) : 0;
    const std::uint64_t burn_events = by_events ? static_cast<std::uint64_t>(burn) : 0;

    double t = 0.0;
    if (by_events ? burn_events == 0 : burn <= 0.0) start_measuring(0.0);
    std::uint64_t processed = 0;
    for (;;) {
      if (by_events && processed >= n_events) break;
      const ArrivalEvent ev = stream.next();
      if (!by_events) {
        if (!measuring_ && ev.time > burn) {
          integrate(burn - t);
          t = burn;
          start_measuring(burn);
        }
        if (ev.time > horizon) {
          integrate(horizon - t);
          t = horizon;
          break;
        }
      }
      integrate(ev.time - t);
      t = ev.time;
      process(ev);
      ++processed;
      if (by_events && !measuring_ && processed >= burn_events) start_measuring(t);
    }
    report_.elapsed = t;
    report_.events_processed = processed;
    report_.measured_time = measuring_ ? t - report_.burn_in_time : 0.0;
    if (min_bid_ < std::numeric_limits<double>::infinity()) report_.kappa_b_hat = min_bid_;
    if (max_ask_ > -std::numeric_limits<double>::infinity()) report_.kappa_a_hat = max_ask_;
    return std::move(report_);
  }

 private:
  void start_measuring(double t) {
    measuring_ = true;
    report_.burn_in_time = t;
    if (interval_count_ == 0 && cfg_.empty_interval) report_.collector.interval_empty_times.push_back(t);
  }

  bool in_interval(double p) const {
    return cfg_.empty_interval && p >= cfg_.empty_interval->first && p <= cfg_.empty_interval->second;
  }

  void init_interval_count() {
    if (!cfg_.empty_interval) return;
    auto add = [this](const auto& m) {
      for (const auto& [p, lvl] : m)
        if (in_interval(p))
          interval_count_ += lvl.depth.is_infinite() ? kInfiniteCount
                                                     : static_cast<std::int64_t>(lvl.depth.count());
    };
    add(book_.bids());
    add(book_.asks());
  }

  void interval_change(double p, std::int64_t delta) {
    if (!in_interval(p)) return;
    interval_count_ += delta;
    if (interval_count_ == 0 && measuring_) report_.collector.interval_empty_times.push_back(now_);
  }

  void integrate(double dt) {
    if (!measuring_ || dt <= 0.0) return;
    auto& c = report_.collector;
    const auto bb = book_.best_bid();
    const auto ba = book_.best_ask();
    if (bb) c.best_bid_time[static_cast<std::size_t>(bin_of(*bb, c.n_bins) - 1)] += dt;
    else c.bid_absent_time += dt;
    if (ba) c.best_ask_time[static_cast<std::size_t>(bin_of(*ba, c.n_bins) - 1)] += dt;
    else c.ask_absent_time += dt;
    if (bb && ba) {
      const double s = *ba - *bb;
      c.both_present_time += dt;
      c.spread_sum += s * dt;
      c.spread_max = std::max(c.spread_max, s);
    } else {
      c.empty_side_time += dt;
    }
    if (cfg_.empty_interval && interval_count_ == 0) c.interval_empty_duration += dt;
  }

  void process(const ArrivalEvent& ev) {
    now_ = ev.time;
    const BookEvent be = apply_arrival_inplace(book_, ev.side, ev.price, cfg_.eq);
    if (be.is_trade()) {
      on_trade(be);
    } else {
      interval_change(ev.price, +1);
      if (!hooks_.empty()) offer_snipe(ev.side, ev.price);
    }
    if (measuring_ && cfg_.snapshot_every > 0 && (++since_snapshot_ % cfg_.snapshot_every) == 0)
      snapshot();
  }

  void on_trade(const BookEvent& be) {
    const bool bid_aggr = be.aggressor == Side::Bid;
    const double resting_price = bid_aggr ? be.ask_price : be.bid_price;
    if (be.resting_owner == kNatural) interval_change(resting_price, -1);
    if (!measuring_) return;
    ++report_.trades;
    TradeRecord rec{now_, be.bid_price, be.ask_price, be.aggressor, kNatural, kNatural, false};
    if (bid_aggr) {
      rec.ask_owner = be.resting_owner;
      note_natural_bid(be.bid_price);
      if (be.resting_owner == kNatural) note_natural_ask(be.ask_price);
    } else {
      rec.bid_owner = be.resting_owner;
      note_natural_ask(be.ask_price);
      if (be.resting_owner == kNatural) note_natural_bid(be.bid_price);
    }
    if (be.resting_owner != kNatural) {
      PnLLedger& l = report_.pnl[static_cast<std::size_t>(be.resting_owner)].ledger;
      ++l.fills;
      if (bid_aggr) l.sell(be.ask_price);
      else l.buy(be.bid_price);
    }
    if (cfg_.keep_trade_log) report_.collector.trade_log.push_back(rec);
  }

  void offer_snipe(Side side, double price) {
    contenders_.clear();
    for (std::size_t i = 0; i < hooks_.size(); ++i)
      if (hooks_[i]->wants_snipe(side, price, book_)) contenders_.push_back(i);
    if (contenders_.empty()) return;
    std::size_t winner = contenders_[0];
    if (contenders_.size() > 1) {
      const double u = tiebreak_.next_uniform();
      winner = contenders_[std::min(contenders_.size() - 1,
                                    static_cast<std::size_t>(u * static_cast<double>(contenders_.size())))];
    }
    book_.remove_one(side, price);
    interval_change(price, -1);
    if (!measuring_) return;
    ++report_.trades;
    for (std::size_t i : contenders_) {
      PnLLedger& l = report_.pnl[i].ledger;
      ++l.snipe_attempts;
      if (i != winner) ++l.cancellations;
    }
    PnLLedger& w = report_.pnl[winner].ledger;
    ++w.snipes;
    TradeRecord rec{now_, price, price, side, kNatural, kNatural, true};
    if (side == Side::Bid) {
      w.sell(price);
      rec.ask_owner = static_cast<OwnerId>(winner);
      note_natural_bid(price);
    } else {
      w.buy(price);
      rec.bid_owner = static_cast<OwnerId>(winner);
      note_natural_ask(price);
    }
    if (cfg_.keep_trade_log) report_.collector.trade_log.push_back(rec);
  }

  void note_natural_bid(double p) {
    ++report_.natural_bids_matched;
    min_bid_ = std::min(min_bid_, p);
  }
  void note_natural_ask(double p) {
    ++report_.natural_asks_matched;
    max_ask_ = std::max(max_ask_, p);
  }

  void snapshot() {
    auto& c = report_.collector;
    QueueSnapshot s;
    s.time = now_;
    s.bid_depth.assign(static_cast<std::size_t>(c.n_bins), 0);
    s.ask_depth.assign(static_cast<std::size_t>(c.n_bins), 0);
    for (const auto& [p, lvl] : book_.bids())
      if (!lvl.depth.is_infinite()) s.bid_depth[static_cast<std::size_t>(bin_of(p, c.n_bins) - 1)] += lvl.depth.count();
    for (const auto& [p, lvl] : book_.asks())
      if (!lvl.depth.is_infinite()) s.ask_depth[static_cast<std::size_t>(bin_of(p, c.n_bins) - 1)] += lvl.depth.count();
    c.queue_profile.push_back(std::move(s));
  }

  const SimConfig& cfg_;
  const std::vector<StrategyHook*>& hooks_;
  CounterRng tiebreak_;
  BookState book_;
  SimReport report_;
  std::vector<std::size_t> contenders_;
  bool measuring_ = false;
  double now_ = 0.0;
  std::int64_t interval_count_ = 0;
  std::uint64_t since_snapshot_ = 0;
  double min_bid_ = std::numeric_limits<double>::infinity();
  double max_ask_ = -std::numeric_limits<double>::infinity();
};

std::vector<double> coarsen(const std::vector<double>& times, double measured, int n_bins) {
  const int fine = static_cast<int>(times.size());
  if (n_bins < 1 || fine % n_bins != 0)
    throw Error(ErrorCode::InvalidArgument, "density bins must divide the collector grid");
  const int ratio = fine / n_bins;
  std::vector<double> out(static_cast<std::size_t>(n_bins), 0.0);
  if (measured <= 0.0) return out;
  for (int k = 0; k < fine; ++k) out[static_cast<std::size_t>(k / ratio)] += times[static_cast<std::size_t>(k)];
  for (double& v : out) v *= n_bins / measured;
  return out;
}

}  // namespace

SimReport run(const SimConfig& config, const std::vector<StrategyHook*>& hooks) {
  config.model.validate();
  if (config.stats_bins < 1) throw Error(ErrorCode::InvalidArgument, "stats_bins must be positive");
  if (!(config.horizon.value > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (config.burn_in >= config.horizon.value)
    throw Error(ErrorCode::InvalidArgument, "burn-in must be shorter than the horizon");
  if (config.empty_interval && config.empty_interval->first > config.empty_interval->second)
    throw Error(ErrorCode::InvalidArgument, "empty interval bounds out of order");
  return Runner(config, hooks).execute();
}

SimReport run(const ArrivalModel& model, const PriceEquivalence& eq, Horizon horizon, RngSeed seed,
              const std::vector<StrategyHook*>& hooks, double burn_in) {
  SimConfig cfg;
  cfg.model = model;
  cfg.eq = eq;
  cfg.horizon = horizon;
  cfg.seed = seed;
  cfg.burn_in = burn_in;
  return run(cfg, hooks);
}

std::pair<std::optional<double>, std::optional<double>> estimate_thresholds(const SimReport& report) {
  return {report.kappa_b_hat, report.kappa_a_hat};
}

std::vector<double> empirical_best_bid_density(const SimReport& report, int n_bins) {
  return coarsen(report.collector.best_bid_time, report.measured_time, n_bins);
}

std::vector<double> empirical_best_ask_density(const SimReport& report, int n_bins) {
  return coarsen(report.collector.best_ask_time, report.measured_time, n_bins);
}

}  // namespace lobkin
