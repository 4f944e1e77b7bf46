#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <utility>

namespace lobkin {

enum class Side : std::uint8_t { Bid, Ask };

inline constexpr Side opposite(Side s) noexcept {
  return s == Side::Bid ? Side::Ask : Side::Bid;
}

// Bin index in 1..n_bins: min(ceil(n*x), n), with bin(0) = 1.
int bin_of(double price, int n_bins);

class PriceEquivalence {
 public:
  enum class Kind : std::uint8_t { Identity, Binned };

  static PriceEquivalence identity() { return PriceEquivalence(Kind::Identity, 0); }
  static PriceEquivalence binned(int n_bins);

  Kind kind() const noexcept { return kind_; }
  int n_bins() const noexcept { return n_bins_; }

  double key(double price) const {
    return kind_ == Kind::Identity ? price : static_cast<double>(bin_of(price, n_bins_));
  }
  // A bid at `bid` and an ask at `ask` trade iff P(ask) <= P(bid).
  bool compatible(double bid, double ask) const { return key(ask) <= key(bid); }

  bool operator==(const PriceEquivalence&) const = default;

 private:
  PriceEquivalence(Kind k, int n) : kind_(k), n_bins_(n) {}
  Kind kind_;
  int n_bins_;
};

class Depth {
 public:
  constexpr Depth() = default;
  static constexpr Depth finite(std::uint64_t n) { return Depth(n); }
  static constexpr Depth infinite() { return Depth(kInfinite); }

  constexpr bool is_infinite() const noexcept { return n_ == kInfinite; }
  constexpr std::uint64_t count() const noexcept { return n_; }

  Depth& operator++() {
    if (!is_infinite()) ++n_;
    return *this;
  }
  Depth& operator--() {
    if (!is_infinite() && n_ > 0) --n_;
    return *this;
  }
  constexpr bool operator==(const Depth&) const = default;

 private:
  static constexpr std::uint64_t kInfinite = std::numeric_limits<std::uint64_t>::max();
  constexpr explicit Depth(std::uint64_t n) : n_(n) {}
  std::uint64_t n_ = 0;
};

using OwnerId = std::int32_t;
inline constexpr OwnerId kNatural = -1;

struct Level {
  Depth depth;
  // Strategy owning the infinite supply at this price, or kNatural.
  OwnerId owner = kNatural;
};

struct BookEvent {
  enum class Kind : std::uint8_t { BidJoined, AskJoined, Trade };
  Kind kind = Kind::BidJoined;
  double price = 0.0;      // joined price (joins) or arriving price (trades)
  double bid_price = 0.0;  // trades only
  double ask_price = 0.0;  // trades only
  Side aggressor = Side::Bid;
  OwnerId resting_owner = kNatural;

  static BookEvent joined(Side s, double p) {
    BookEvent e;
    e.kind = s == Side::Bid ? Kind::BidJoined : Kind::AskJoined;
    e.price = p;
    e.aggressor = s;
    return e;
  }
  bool is_trade() const noexcept { return kind == Kind::Trade; }
};

class BookState {
 public:
  using BidMap = std::map<double, Level, std::greater<>>;
  using AskMap = std::map<double, Level, std::less<>>;

  std::optional<double> best_bid() const;
  std::optional<double> best_ask() const;

  const BidMap& bids() const noexcept { return bids_; }
  const AskMap& asks() const noexcept { return asks_; }
  bool empty(Side s) const noexcept { return s == Side::Bid ? bids_.empty() : asks_.empty(); }

  // Total finite depth on a side (infinite levels excluded).
  std::uint64_t finite_depth(Side s) const noexcept {
    return s == Side::Bid ? finite_bids_ : finite_asks_;
  }
  bool has_infinite(Side s) const;
  Depth depth_at(Side s, double price) const;

  // Adds resting depth without matching. Throws if the result would be crossed.
  void place(Side s, double price, Depth d, OwnerId owner, const PriceEquivalence& eq);
  // Removes one finite unit at the given price. Returns false if absent.
  bool remove_one(Side s, double price);

  bool is_crossed(const PriceEquivalence& eq) const;

  bool operator==(const BookState& o) const;

 private:
  friend BookEvent apply_arrival_inplace(BookState&, Side, double, const PriceEquivalence&);
  template <class Map>
  void add_unit(Map& m, double price, std::uint64_t& finite_total);

  BidMap bids_;
  AskMap asks_;
  std::uint64_t finite_bids_ = 0;
  std::uint64_t finite_asks_ = 0;
};

// Mutating fast path used by the simulator.
BookEvent apply_arrival_inplace(BookState& book, Side side, double price, const PriceEquivalence& eq);

// Value-semantics transition.
std::pair<BookState, BookEvent> apply_arrival(const BookState& book, Side side, double price,
                                              const PriceEquivalence& eq);

}  // namespace lobkin
