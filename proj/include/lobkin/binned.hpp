#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lobkin/rng.hpp"

namespace lobkin::binned {

// Bins are 1-based in the public interface; vectors are indexed by bin - 1.
struct BoundaryOrders {
  int bid_bin = 1;  // infinite bid
  int ask_bin = 3;  // infinite ask
};

struct BinnedModel {
  int n_bins = 0;
  std::vector<double> p_b;
  std::vector<double> p_a;
  std::optional<BoundaryOrders> boundary;

  static BinnedModel uniform(int n_bins);

  void validate() const;
  double F_a(int k) const;  // sum of p_a over bins <= k
  double F_b(int k) const;
};

struct BinnedStationary {
  std::vector<double> pi_beta;
  std::vector<double> pi_alpha;
  int shoulder_bid = 0;
  int shoulder_ask = 0;
  double difference_residual = 0.0;
  int iterations = 0;
};

struct FixedPointSettings {
  double tolerance = 1e-14;
  int max_iterations = 1000000;
  double damping = 0.5;
};

BinnedStationary solve_binned(const BinnedModel& model, const FixedPointSettings& settings = {});

// Residual of the second-order difference equation on bins strictly between the
// shoulders (where both balance identities are exact).
double difference_residual(const BinnedModel& model, const BinnedStationary& s);

struct TruncatedCTMC {
  BinnedModel model;
  int queue_cap = 30;
  double rate_bid = 1.0;
  double rate_ask = 1.0;
};

struct CtmcStationary {
  std::vector<double> pi_beta;   // best-bid bin occupancy (mass deficit = bid side empty)
  std::vector<double> pi_alpha;
  double interior_empty = 0.0;   // P(no finite orders in the tracked bins)
  std::size_t n_states = 0;
  std::vector<double> probabilities;
  std::vector<std::vector<int>> states;  // signed depth per tracked bin (+ bids, - asks)
  int first_tracked_bin = 1;
};

CtmcStationary ctmc_stationary(const TruncatedCTMC& chain);

struct CrossCheck {
  std::vector<double> simulated_beta;
  std::vector<double> solver_beta;
  double max_error = 0.0;
};

CrossCheck simulate_binned_cross_check(const BinnedModel& model, std::uint64_t horizon_events, RngSeed seed);

}  // namespace lobkin::binned
