#include <gtest/gtest.h>

#include <random>

#include "lobkin/book.hpp"
#include "lobkin/error.hpp"

using namespace lobkin;

namespace {

const PriceEquivalence kExact = PriceEquivalence::identity();

BookState with_asks(std::initializer_list<std::pair<double, std::uint64_t>> levels) {
  BookState b;
  for (auto [p, n] : levels) b.place(Side::Ask, p, Depth::finite(n), kNatural, kExact);
  return b;
}

}  // namespace

TEST(BinOf, BoundaryConvention) {
  EXPECT_EQ(bin_of(0.0, 10), 1);
  EXPECT_EQ(bin_of(0.55, 10), 6);
  EXPECT_EQ(bin_of(1.0, 10), 10);
  EXPECT_EQ(bin_of(0.1, 10), 1);  // right edge belongs to the lower bin
  EXPECT_EQ(bin_of(0.31, 10), 4);
  EXPECT_EQ(bin_of(0.29, 10), 3);
}

TEST(BinOf, Nondecreasing) {
  int prev = 1;
  for (int i = 0; i <= 10000; ++i) {
    const int k = bin_of(i / 10000.0, 37);
    EXPECT_GE(k, prev);
    EXPECT_GE(k, 1);
    EXPECT_LE(k, 37);
    prev = k;
  }
}

TEST(ApplyArrival, BidJoinsEmptyBook) {
  auto [book, ev] = apply_arrival(BookState{}, Side::Bid, 0.4, kExact);
  EXPECT_EQ(ev.kind, BookEvent::Kind::BidJoined);
  EXPECT_DOUBLE_EQ(ev.price, 0.4);
  EXPECT_EQ(book.bids().size(), 1u);
  EXPECT_EQ(book.depth_at(Side::Bid, 0.4).count(), 1u);
}

TEST(ApplyArrival, BidTakesLowestAsk) {
  const BookState start = with_asks({{0.3, 1}, {0.6, 1}});
  auto [book, ev] = apply_arrival(start, Side::Bid, 0.5, kExact);
  ASSERT_TRUE(ev.is_trade());
  EXPECT_DOUBLE_EQ(ev.bid_price, 0.5);
  EXPECT_DOUBLE_EQ(ev.ask_price, 0.3);
  EXPECT_EQ(ev.aggressor, Side::Bid);
  EXPECT_EQ(book.asks().size(), 1u);
  EXPECT_DOUBLE_EQ(*book.best_ask(), 0.6);
  EXPECT_TRUE(book.bids().empty());
}

TEST(ApplyArrival, SameBinMatches) {
  const auto eq = PriceEquivalence::binned(10);
  // 0.29 and 0.31 are in bins 3 and 4, so they do not trade.
  auto [b1, e1] = apply_arrival(with_asks({{0.31, 1}}), Side::Bid, 0.29, eq);
  EXPECT_FALSE(e1.is_trade());
  EXPECT_EQ(b1.bids().size(), 1u);
  // 0.21 and 0.29 share bin 3 and trade even though the ask is higher.
  auto [b2, e2] = apply_arrival(with_asks({{0.29, 1}}), Side::Bid, 0.21, eq);
  ASSERT_TRUE(e2.is_trade());
  EXPECT_DOUBLE_EQ(e2.bid_price, 0.21);
  EXPECT_DOUBLE_EQ(e2.ask_price, 0.29);
  EXPECT_TRUE(b2.asks().empty());
  EXPECT_TRUE(b2.bids().empty());
}

TEST(ApplyArrival, EqualPricesAreCompatible) {
  const BookState start = with_asks({{0.5, 1}});
  auto [book, ev] = apply_arrival(start, Side::Bid, 0.5, kExact);
  EXPECT_TRUE(ev.is_trade());
}

TEST(ApplyArrival, AskHitsHighestBid) {
  BookState start;
  start.place(Side::Bid, 0.2, Depth::finite(1), kNatural, kExact);
  start.place(Side::Bid, 0.35, Depth::finite(2), kNatural, kExact);
  auto [book, ev] = apply_arrival(start, Side::Ask, 0.1, kExact);
  ASSERT_TRUE(ev.is_trade());
  EXPECT_DOUBLE_EQ(ev.bid_price, 0.35);
  EXPECT_EQ(book.depth_at(Side::Bid, 0.35).count(), 1u);
  EXPECT_EQ(book.finite_depth(Side::Bid), 2u);
}

TEST(ApplyArrival, RejectsPriceOutsideUnitInterval) {
  for (double p : {-0.01, 1.01}) {
    try {
      apply_arrival(BookState{}, Side::Bid, p, kExact);
      FAIL() << "accepted " << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
  }
}

TEST(ApplyArrival, InfiniteLevelNeverExhausted) {
  BookState book;
  book.place(Side::Bid, 0.25, Depth::infinite(), 0, kExact);
  for (int i = 0; i < 1000; ++i) {
    const auto ev = apply_arrival_inplace(book, Side::Ask, 0.1, kExact);
    ASSERT_TRUE(ev.is_trade());
    EXPECT_EQ(ev.resting_owner, 0);
  }
  EXPECT_TRUE(book.depth_at(Side::Bid, 0.25).is_infinite());
  EXPECT_EQ(book.finite_depth(Side::Bid), 0u);
}

TEST(BestQuotes, Basics) {
  BookState book;
  EXPECT_FALSE(book.best_ask().has_value());
  book.place(Side::Bid, 0.2, Depth::finite(1), kNatural, kExact);
  book.place(Side::Bid, 0.35, Depth::finite(2), kNatural, kExact);
  EXPECT_DOUBLE_EQ(*book.best_bid(), 0.35);
  EXPECT_FALSE(book.best_ask().has_value());

  BookState inf;
  inf.place(Side::Bid, 0.25, Depth::infinite(), 0, kExact);
  EXPECT_DOUBLE_EQ(*inf.best_bid(), 0.25);
}

TEST(Place, RejectsCrossingPlacement) {
  BookState book = with_asks({{0.4, 1}});
  EXPECT_THROW(book.place(Side::Bid, 0.45, Depth::infinite(), 0, kExact), Error);
  EXPECT_NO_THROW(book.place(Side::Bid, 0.35, Depth::infinite(), 0, kExact));
}

TEST(Depth, InfiniteArithmetic) {
  Depth d = Depth::infinite();
  --d;
  EXPECT_TRUE(d.is_infinite());
  ++d;
  EXPECT_TRUE(d.is_infinite());
  Depth f = Depth::finite(1);
  --f;
  EXPECT_EQ(f.count(), 0u);
}

class RandomSequence : public ::testing::TestWithParam<int> {};

TEST_P(RandomSequence, NeverCrossesAndDepartsInPairs) {
  std::mt19937_64 gen(GetParam());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PriceEquivalence eq = GetParam() % 2 ? PriceEquivalence::binned(7) : kExact;
  BookState book;
  std::int64_t bid_arrivals = 0, ask_arrivals = 0;
  for (int i = 0; i < 5000; ++i) {
    const Side s = u(gen) < 0.5 ? Side::Bid : Side::Ask;
    (s == Side::Bid ? bid_arrivals : ask_arrivals)++;
    apply_arrival_inplace(book, s, u(gen), eq);
    ASSERT_FALSE(book.is_crossed(eq));
    const auto bids = static_cast<std::int64_t>(book.finite_depth(Side::Bid));
    const auto asks = static_cast<std::int64_t>(book.finite_depth(Side::Ask));
    ASSERT_EQ(bid_arrivals - bids, ask_arrivals - asks);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomSequence, ::testing::Range(0, 8));

TEST(ApplyArrival, PureFunction) {
  const BookState start = with_asks({{0.3, 2}, {0.7, 1}});
  const auto a = apply_arrival(start, Side::Bid, 0.5, kExact);
  const auto b = apply_arrival(start, Side::Bid, 0.5, kExact);
  EXPECT_TRUE(a.first == b.first);
  EXPECT_EQ(start.depth_at(Side::Ask, 0.3).count(), 2u);
}
