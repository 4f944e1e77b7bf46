#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lobkin/arrivals.hpp"
#include "lobkin/book.hpp"

// Coupled runs of two books driven by one arrival stream.
namespace lobkin::coupling {

struct CouplingSetup {
  ArrivalModel model;
  PriceEquivalence eq = PriceEquivalence::identity();
  std::uint64_t warmup_events = 0;  // builds the shared initial state
  std::uint64_t events = 10000;     // coupled events after the perturbation
  RngSeed seed;
};

enum class DiffKind : std::uint8_t { ExtraBid, MissingAsk, ExtraAsk, MissingBid, Other };
const char* to_string(DiffKind k);

struct DiffState {
  std::uint64_t event = 0;  // 0 is the perturbation itself
  DiffKind kind = DiffKind::Other;
  double price = 0.0;
  std::int64_t cardinality = 0;  // size of the symmetric difference of the two order multisets
};

struct AddOneTrace {
  double extra_bid_price = 0.0;
  std::vector<DiffState> steps;
  bool holds = true;  // every step differs by one extra bid or one missing ask
  BookState base;     // final states
  BookState perturbed;
};

// The perturbed book receives one extra bid right after warm-up; a random price
// is drawn when none is given.
AddOneTrace coupled_run_add_one(const CouplingSetup& setup, std::optional<double> extra_bid_price = std::nullopt);

struct Perturbation {
  std::uint32_t remove_bids = 0;  // random resting orders, must equal remove_asks
  std::uint32_t remove_asks = 0;
  double bid_shift = 0.0;  // every bid moves right, capped at 1
  double ask_shift = 0.0;  // every ask moves left, floored at 0
  bool is_identity() const noexcept {
    return remove_bids == 0 && remove_asks == 0 && bid_shift == 0.0 && ask_shift == 0.0;
  }
};

// Applies the perturbation; shifted orders that become compatible are removed in pairs.
BookState perturb(const BookState& book, const Perturbation& p, const PriceEquivalence& eq, RngSeed seed,
                  std::uint64_t* crossing_pairs = nullptr);

// Cumulative-queue dominance: bids counted from the left, asks from the right.
bool dominated(const BookState& smaller, const BookState& larger);

struct DecreaseTrace {
  std::vector<std::uint8_t> ok;  // one entry per coupled event, index 0 is the initial state
  bool holds = true;
  std::optional<std::uint64_t> first_violation;
  std::uint64_t crossing_pairs = 0;
  BookState initial_base;
  BookState initial_perturbed;
};

DecreaseTrace coupled_run_decrease(const CouplingSetup& setup, const Perturbation& p);

struct BoundingTrace {
  std::uint64_t events = 0;
  bool lower_holds = true;  // merged bins hold no more orders, cumulatively in price
  bool upper_holds = true;  // bids shifted one bin left hold at least as many orders per side
  std::uint64_t continuous_bids = 0, continuous_asks = 0;
  std::uint64_t lower_bids = 0, lower_asks = 0;
  std::uint64_t upper_bids = 0, upper_asks = 0;
};

// Sandwiches a continuous book between two binned books fed the same arrivals.
BoundingTrace bounding_run(const ArrivalModel& model, int n_bins, std::uint64_t events, RngSeed seed);

}  // namespace lobkin::coupling
