#include "lobkin/book.hpp"

#include <cmath>
#include <string>

#include "lobkin/error.hpp"

namespace lobkin {

namespace {

void check_price(double price) {
  if (!(price >= 0.0 && price <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "price outside [0,1]: " + std::to_string(price));
  }
}

template <class Map>
BookEvent consume_best(Map& resting, std::uint64_t& finite_total, Side aggressor, double price) {
  auto it = resting.begin();
  BookEvent ev;
  ev.kind = BookEvent::Kind::Trade;
  ev.price = price;
  ev.aggressor = aggressor;
  ev.resting_owner = it->second.owner;
  if (aggressor == Side::Bid) {
    ev.bid_price = price;
    ev.ask_price = it->first;
  } else {
    ev.bid_price = it->first;
    ev.ask_price = price;
  }
  Depth& d = it->second.depth;
  if (!d.is_infinite()) {
    --d;
    --finite_total;
    if (d.count() == 0) resting.erase(it);
  }
  return ev;
}

}  // namespace

int bin_of(double price, int n_bins) {
  const double scaled = std::ceil(price * n_bins);
  if (scaled <= 1.0) return 1;
  if (scaled >= n_bins) return n_bins;
  return static_cast<int>(scaled);
}

PriceEquivalence PriceEquivalence::binned(int n_bins) {
  if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "n_bins must be positive");
  return PriceEquivalence(Kind::Binned, n_bins);
}

std::optional<double> BookState::best_bid() const {
  if (bids_.empty()) return std::nullopt;
  return bids_.begin()->first;
}

std::optional<double> BookState::best_ask() const {
  if (asks_.empty()) return std::nullopt;
  return asks_.begin()->first;
}

bool BookState::has_infinite(Side s) const {
  auto any_inf = [](const auto& m) {
    for (const auto& [p, lvl] : m)
      if (lvl.depth.is_infinite()) return true;
    return false;
  };
  return s == Side::Bid ? any_inf(bids_) : any_inf(asks_);
}

Depth BookState::depth_at(Side s, double price) const {
  if (s == Side::Bid) {
    auto it = bids_.find(price);
    return it == bids_.end() ? Depth{} : it->second.depth;
  }
  auto it = asks_.find(price);
  return it == asks_.end() ? Depth{} : it->second.depth;
}

template <class Map>
void BookState::add_unit(Map& m, double price, std::uint64_t& finite_total) {
  auto [it, inserted] = m.try_emplace(price, Level{Depth::finite(1), kNatural});
  if (inserted) {
    ++finite_total;
  } else if (!it->second.depth.is_infinite()) {
    ++it->second.depth;
    ++finite_total;
  }
}

void BookState::place(Side s, double price, Depth d, OwnerId owner, const PriceEquivalence& eq) {
  check_price(price);
  if (d.count() == 0) return;
  if (s == Side::Bid) {
    if (!asks_.empty() && eq.compatible(price, asks_.begin()->first))
      throw Error(ErrorCode::InvalidArgument, "bid placement would cross the book");
    Level& lvl = bids_[price];
    if (d.is_infinite()) {
      if (!lvl.depth.is_infinite()) finite_bids_ -= lvl.depth.count();
      lvl.depth = d;
      lvl.owner = owner;
    } else if (!lvl.depth.is_infinite()) {
      lvl.depth = Depth::finite(lvl.depth.count() + d.count());
      finite_bids_ += d.count();
    }
  } else {
    if (!bids_.empty() && eq.compatible(bids_.begin()->first, price))
      throw Error(ErrorCode::InvalidArgument, "ask placement would cross the book");
    Level& lvl = asks_[price];
    if (d.is_infinite()) {
      if (!lvl.depth.is_infinite()) finite_asks_ -= lvl.depth.count();
      lvl.depth = d;
      lvl.owner = owner;
    } else if (!lvl.depth.is_infinite()) {
      lvl.depth = Depth::finite(lvl.depth.count() + d.count());
      finite_asks_ += d.count();
    }
  }
}

bool BookState::remove_one(Side s, double price) {
  auto drop = [price](auto& m, std::uint64_t& total) {
    auto it = m.find(price);
    if (it == m.end() || it->second.depth.is_infinite()) return false;
    --it->second.depth;
    --total;
    if (it->second.depth.count() == 0) m.erase(it);
    return true;
  };
  return s == Side::Bid ? drop(bids_, finite_bids_) : drop(asks_, finite_asks_);
}

bool BookState::is_crossed(const PriceEquivalence& eq) const {
  if (bids_.empty() || asks_.empty()) return false;
  return eq.compatible(bids_.begin()->first, asks_.begin()->first);
}

bool BookState::operator==(const BookState& o) const {
  auto same = [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return false;
    auto j = b.begin();
    for (auto i = a.begin(); i != a.end(); ++i, ++j) {
      if (i->first != j->first || !(i->second.depth == j->second.depth) ||
          i->second.owner != j->second.owner)
        return false;
    }
    return true;
  };
  return same(bids_, o.bids_) && same(asks_, o.asks_);
}

BookEvent apply_arrival_inplace(BookState& book, Side side, double price, const PriceEquivalence& eq) {
  check_price(price);
  if (side == Side::Bid) {
    if (!book.asks_.empty() && eq.compatible(price, book.asks_.begin()->first))
      return consume_best(book.asks_, book.finite_asks_, Side::Bid, price);
    book.add_unit(book.bids_, price, book.finite_bids_);
    return BookEvent::joined(Side::Bid, price);
  }
  if (!book.bids_.empty() && eq.compatible(book.bids_.begin()->first, price))
    return consume_best(book.bids_, book.finite_bids_, Side::Ask, price);
  book.add_unit(book.asks_, price, book.finite_asks_);
  return BookEvent::joined(Side::Ask, price);
}

std::pair<BookState, BookEvent> apply_arrival(const BookState& book, Side side, double price,
                                              const PriceEquivalence& eq) {
  BookState next = book;
  BookEvent ev = apply_arrival_inplace(next, side, price, eq);
  return {std::move(next), ev};
}

}  // namespace lobkin
