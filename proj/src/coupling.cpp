#include "lobkin/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lobkin/error.hpp"
#include "lobkin/rng.hpp"

namespace lobkin::coupling {
namespace {

constexpr std::uint32_t kExtraPriceLane = 2;
constexpr std::uint32_t kPerturbLane = 3;

struct Delta {
  Side side;
  double price;
  int sign;
};

Delta delta_of(const BookEvent& e) {
  if (!e.is_trade()) return {e.kind == BookEvent::Kind::BidJoined ? Side::Bid : Side::Ask, e.price, +1};
  const Side resting = opposite(e.aggressor);
  return {resting, resting == Side::Ask ? e.ask_price : e.bid_price, -1};
}

std::vector<ArrivalEvent> generate(const ArrivalModel& model, RngSeed seed, std::uint64_t n) {
  ArrivalStream stream(model, seed);
  std::vector<ArrivalEvent> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(stream.next());
  return out;
}

// Prefix sums of signed per-price differences with a running minimum over all prefixes.
class PrefixMinTree {
 public:
  explicit PrefixMinTree(std::size_t n) : n_(n), sum_(4 * std::max<std::size_t>(n, 1)), min_(sum_.size()) {}

  void add(std::size_t i, std::int64_t v) { add(1, 0, n_ - 1, i, v); }
  std::int64_t min_prefix() const { return n_ == 0 ? 0 : min_[1]; }

 private:
  void add(std::size_t node, std::size_t lo, std::size_t hi, std::size_t i, std::int64_t v) {
    if (lo == hi) {
      sum_[node] += v;
      min_[node] = sum_[node];
      return;
    }
    const std::size_t mid = (lo + hi) / 2;
    if (i <= mid) {
      add(2 * node, lo, mid, i, v);
    } else {
      add(2 * node + 1, mid + 1, hi, i, v);
    }
    sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
    min_[node] = std::min(min_[2 * node], sum_[2 * node] + min_[2 * node + 1]);
  }

  std::size_t n_;
  std::vector<std::int64_t> sum_;
  std::vector<std::int64_t> min_;
};

// Tracks larger - smaller cumulative queues on a fixed price grid.
class DominanceTracker {
 public:
  explicit DominanceTracker(std::vector<double> prices) : prices_(std::move(prices)), bids_(prices_.size()),
                                                          asks_(prices_.size()) {
    std::sort(prices_.begin(), prices_.end());
    prices_.erase(std::unique(prices_.begin(), prices_.end()), prices_.end());
    bids_ = PrefixMinTree(prices_.size());
    asks_ = PrefixMinTree(prices_.size());
  }

  void add_book(const BookState& book, int sign) {
    for (const auto& [price, level] : book.bids()) apply({Side::Bid, price, sign}, finite(level));
    for (const auto& [price, level] : book.asks()) apply({Side::Ask, price, sign}, finite(level));
  }
  void apply(const Delta& d, std::int64_t count = 1) {
    const auto it = std::lower_bound(prices_.begin(), prices_.end(), d.price);
    if (it == prices_.end() || *it != d.price) throw Error(ErrorCode::InvalidArgument, "price outside the coupling grid");
    const auto i = static_cast<std::size_t>(it - prices_.begin());
    if (d.side == Side::Bid) {
      bids_.add(i, d.sign * count);
    } else {
      asks_.add(prices_.size() - 1 - i, d.sign * count);  // asks accumulate from the right
    }
  }
  bool holds() const { return bids_.min_prefix() >= 0 && asks_.min_prefix() >= 0; }

 private:
  static std::int64_t finite(const Level& l) {
    if (l.depth.is_infinite()) throw Error(ErrorCode::InvalidArgument, "coupled books hold finite depth only");
    return static_cast<std::int64_t>(l.depth.count());
  }

  std::vector<double> prices_;
  PrefixMinTree bids_;
  PrefixMinTree asks_;
};

template <class Map>
void append_prices(const Map& m, std::vector<double>& out) {
  for (const auto& kv : m) out.push_back(kv.first);
}

std::vector<double> grid_of(const std::vector<ArrivalEvent>& events, std::initializer_list<const BookState*> books) {
  std::vector<double> prices;
  prices.reserve(events.size());
  for (const auto& e : events) prices.push_back(e.price);
  for (const auto* b : books) {
    append_prices(b->bids(), prices);
    append_prices(b->asks(), prices);
  }
  return prices;
}

template <class Map>
void remove_random(BookState& book, Side side, const Map& levels, CounterRng& rng) {
  const auto total = book.finite_depth(side);
  if (total == 0) throw Error(ErrorCode::InvalidArgument, "perturbation removes more orders than the book holds");
  auto target = static_cast<std::uint64_t>(rng.next_uniform() * static_cast<double>(total));
  target = std::min(target, total - 1);
  for (const auto& [price, level] : levels) {
    if (target < level.depth.count()) {
      book.remove_one(side, price);
      return;
    }
    target -= level.depth.count();
  }
}

}  // namespace

const char* to_string(DiffKind k) {
  switch (k) {
    case DiffKind::ExtraBid: return "extra_bid";
    case DiffKind::MissingAsk: return "missing_ask";
    case DiffKind::ExtraAsk: return "extra_ask";
    case DiffKind::MissingBid: return "missing_bid";
    case DiffKind::Other: return "other";
  }
  return "other";
}

AddOneTrace coupled_run_add_one(const CouplingSetup& setup, std::optional<double> extra_bid_price) {
  setup.model.validate();
  const auto events = generate(setup.model, setup.seed, setup.warmup_events + setup.events);

  AddOneTrace trace;
  for (std::uint64_t i = 0; i < setup.warmup_events; ++i)
    apply_arrival_inplace(trace.base, events[i].side, events[i].price, setup.eq);
  trace.perturbed = trace.base;
  trace.extra_bid_price = extra_bid_price ? *extra_bid_price : CounterRng(setup.seed, kExtraPriceLane).next_uniform();

  // perturbed minus base, keyed by side then price
  std::map<std::pair<int, double>, std::int64_t> diff;
  std::int64_t cardinality = 0;
  auto bump = [&](const Delta& d, int sign) {
    auto& v = diff[{static_cast<int>(d.side), d.price}];
    cardinality -= std::abs(v);
    v += sign * d.sign;
    cardinality += std::abs(v);
    if (v == 0) diff.erase({static_cast<int>(d.side), d.price});
  };
  auto record = [&](std::uint64_t step) {
    DiffState s;
    s.event = step;
    s.cardinality = cardinality;
    if (diff.size() == 1 && cardinality == 1) {
      const auto& [key, v] = *diff.begin();
      const bool bid = key.first == static_cast<int>(Side::Bid);
      s.price = key.second;
      s.kind = bid ? (v > 0 ? DiffKind::ExtraBid : DiffKind::MissingBid)
                   : (v > 0 ? DiffKind::ExtraAsk : DiffKind::MissingAsk);
    }
    trace.holds = trace.holds && (s.kind == DiffKind::ExtraBid || s.kind == DiffKind::MissingAsk);
    trace.steps.push_back(s);
  };

  bump(delta_of(apply_arrival_inplace(trace.perturbed, Side::Bid, trace.extra_bid_price, setup.eq)), +1);
  trace.steps.reserve(setup.events + 1);
  record(0);
  for (std::uint64_t i = setup.warmup_events; i < events.size(); ++i) {
    const auto& e = events[i];
    bump(delta_of(apply_arrival_inplace(trace.base, e.side, e.price, setup.eq)), -1);
    bump(delta_of(apply_arrival_inplace(trace.perturbed, e.side, e.price, setup.eq)), +1);
    record(i - setup.warmup_events + 1);
  }
  return trace;
}

BookState perturb(const BookState& book, const Perturbation& p, const PriceEquivalence& eq, RngSeed seed,
                  std::uint64_t* crossing_pairs) {
  if (p.remove_bids != p.remove_asks)
    throw Error(ErrorCode::InvalidArgument, "orders must be removed in bid-ask pairs");
  if (!(p.bid_shift >= 0.0 && p.ask_shift >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "bids may only move right and asks only left");

  CounterRng rng(seed, kPerturbLane);
  BookState out = book;
  for (std::uint32_t i = 0; i < p.remove_bids; ++i) remove_random(out, Side::Bid, out.bids(), rng);
  for (std::uint32_t i = 0; i < p.remove_asks; ++i) remove_random(out, Side::Ask, out.asks(), rng);
  if (p.bid_shift == 0.0 && p.ask_shift == 0.0) {
    if (crossing_pairs) *crossing_pairs = 0;
    return out;
  }

  // Rebuild with shifted prices, then clear compatible pairs from the top of the book.
  std::map<double, std::uint64_t> bids, asks;
  for (const auto& [price, level] : out.bids()) bids[std::min(1.0, price + p.bid_shift)] += level.depth.count();
  for (const auto& [price, level] : out.asks()) asks[std::max(0.0, price - p.ask_shift)] += level.depth.count();
  std::uint64_t pairs = 0;
  while (!bids.empty() && !asks.empty()) {
    auto b = std::prev(bids.end());
    auto a = asks.begin();
    if (!eq.compatible(b->first, a->first)) break;
    const auto n = std::min(b->second, a->second);
    pairs += n;
    if ((b->second -= n) == 0) bids.erase(b);
    if ((a->second -= n) == 0) asks.erase(a);
  }
  if (crossing_pairs) *crossing_pairs = pairs;

  BookState shifted;
  for (const auto& [price, n] : bids) shifted.place(Side::Bid, price, Depth::finite(n), kNatural, eq);
  for (const auto& [price, n] : asks) shifted.place(Side::Ask, price, Depth::finite(n), kNatural, eq);
  return shifted;
}

bool dominated(const BookState& smaller, const BookState& larger) {
  // larger minus smaller depth per price, in ascending price order
  auto net_counts = [](const auto& small_levels, const auto& large_levels) {
    std::map<double, std::int64_t> diff;
    for (const auto& [price, level] : large_levels) diff[price] += static_cast<std::int64_t>(level.depth.count());
    for (const auto& [price, level] : small_levels) diff[price] -= static_cast<std::int64_t>(level.depth.count());
    return diff;
  };
  const auto bid_diff = net_counts(smaller.bids(), larger.bids());
  std::int64_t run = 0;
  for (const auto& [price, v] : bid_diff) {
    run += v;
    if (run < 0) return false;
  }
  const auto ask_diff = net_counts(smaller.asks(), larger.asks());
  run = 0;
  for (auto it = ask_diff.rbegin(); it != ask_diff.rend(); ++it) {
    run += it->second;
    if (run < 0) return false;
  }
  return true;
}

DecreaseTrace coupled_run_decrease(const CouplingSetup& setup, const Perturbation& p) {
  setup.model.validate();
  const auto events = generate(setup.model, setup.seed, setup.warmup_events + setup.events);

  DecreaseTrace trace;
  BookState base;
  for (std::uint64_t i = 0; i < setup.warmup_events; ++i)
    apply_arrival_inplace(base, events[i].side, events[i].price, setup.eq);
  BookState tilde = perturb(base, p, setup.eq, setup.seed, &trace.crossing_pairs);
  trace.initial_base = base;
  trace.initial_perturbed = tilde;

  const auto net = [](const BookState& b) {
    return static_cast<std::int64_t>(b.finite_depth(Side::Bid)) - static_cast<std::int64_t>(b.finite_depth(Side::Ask));
  };
  if (net(base) != net(tilde) || !dominated(tilde, base))
    throw Error(ErrorCode::InvalidArgument, "perturbation does not decrease both cumulative queues");

  DominanceTracker tracker(grid_of(events, {&base, &tilde}));
  tracker.add_book(base, +1);
  tracker.add_book(tilde, -1);

  trace.ok.reserve(setup.events + 1);
  auto record = [&](std::uint64_t step) {
    const bool ok = tracker.holds();
    trace.ok.push_back(ok ? 1 : 0);
    if (!ok && !trace.first_violation) trace.first_violation = step;
    trace.holds = trace.holds && ok;
  };
  record(0);
  for (std::uint64_t i = setup.warmup_events; i < events.size(); ++i) {
    const auto& e = events[i];
    tracker.apply(delta_of(apply_arrival_inplace(base, e.side, e.price, setup.eq)));
    auto d = delta_of(apply_arrival_inplace(tilde, e.side, e.price, setup.eq));
    d.sign = -d.sign;
    tracker.apply(d);
    record(i - setup.warmup_events + 1);
  }
  return trace;
}

BoundingTrace bounding_run(const ArrivalModel& model, int n_bins, std::uint64_t n_events, RngSeed seed) {
  if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "bounding run needs at least one bin");
  model.validate();
  const auto events = generate(model, seed, n_events);
  const auto identity = PriceEquivalence::identity();
  const auto merged = PriceEquivalence::binned(n_bins);
  // The upper book lives on n + 1 bins: prices y in [-1/n, 1] map to z = (y + 1/n) / (1 + 1/n),
  // and every bid is moved one bin to the left.
  const auto widened = PriceEquivalence::binned(n_bins + 1);
  const double h = 1.0 / n_bins;
  auto to_upper = [&](Side s, double x) {
    const double y = s == Side::Bid ? x - h : x;
    return std::clamp((y + h) / (1.0 + h), 0.0, 1.0);
  };

  BookState cont, lower, upper;
  std::vector<double> grid;
  grid.reserve(events.size());
  for (const auto& e : events) grid.push_back(e.price);
  DominanceTracker tracker(std::move(grid));

  BoundingTrace trace;
  trace.events = n_events;
  for (const auto& e : events) {
    tracker.apply(delta_of(apply_arrival_inplace(cont, e.side, e.price, identity)));
    auto d = delta_of(apply_arrival_inplace(lower, e.side, e.price, merged));
    d.sign = -d.sign;
    tracker.apply(d);
    apply_arrival_inplace(upper, e.side, to_upper(e.side, e.price), widened);

    trace.lower_holds = trace.lower_holds && tracker.holds();
    trace.upper_holds = trace.upper_holds && upper.finite_depth(Side::Bid) >= cont.finite_depth(Side::Bid) &&
                        upper.finite_depth(Side::Ask) >= cont.finite_depth(Side::Ask);
  }
  trace.continuous_bids = cont.finite_depth(Side::Bid);
  trace.continuous_asks = cont.finite_depth(Side::Ask);
  trace.lower_bids = lower.finite_depth(Side::Bid);
  trace.lower_asks = lower.finite_depth(Side::Ask);
  trace.upper_bids = upper.finite_depth(Side::Bid);
  trace.upper_asks = upper.finite_depth(Side::Ask);
  return trace;
}

}  // namespace lobkin::coupling
