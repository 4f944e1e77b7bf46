#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/lambert_w.hpp>
#include <cmath>

#include "lobkin/binned.hpp"
#include "lobkin/book.hpp"
#include "lobkin/coupling.hpp"
#include "lobkin/error.hpp"
#include "lobkin/simulator.hpp"

using namespace lobkin;
using namespace lobkin::binned;

namespace {

double kappa() {
  const double w = boost::math::lambert_w0(std::exp(-1.0));
  return w / (1.0 + w);
}

// Continuous limit formula, not clipped to the support.
double varpi_formula(double x) { return (1.0 - kappa()) * (1.0 / x + std::log((1.0 - x) / x)); }
double varpi(double x) { return x > kappa() && x < 1.0 - kappa() ? varpi_formula(x) : 0.0; }

BinnedModel three_bins_with_boundary() {
  auto m = BinnedModel::uniform(3);
  m.boundary = BoundaryOrders{1, 3};
  return m;
}

// Max over bins wholly inside the support of |pi_beta / p_b - varpi(centre)|.
double convergence_error(int n) {
  const auto m = BinnedModel::uniform(n);
  const auto s = solve_binned(m);
  double err = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double lo = (k - 1.0) / n, hi = static_cast<double>(k) / n;
    if (lo <= kappa() || hi >= 1.0 - kappa()) continue;
    err = std::max(err, std::abs(s.pi_beta[k - 1] / m.p_b[k - 1] - varpi(0.5 * (lo + hi))));
  }
  return err;
}

}  // namespace

TEST(SolveBinned, BalanceIdentitiesHold) {
  for (int n : {5, 20, 50}) {
    const auto m = BinnedModel::uniform(n);
    const auto s = solve_binned(m);
    double mass_b = 0, mass_a = 0;
    for (int k = 1; k <= n; ++k) {
      mass_b += s.pi_beta[k - 1];
      mass_a += s.pi_alpha[k - 1];
      EXPECT_LE(s.pi_beta[k - 1], m.p_b[k - 1] / m.F_a(k) + 1e-12);
      double above = 0, below = 0;
      for (int j = k + 1; j <= n; ++j) above += s.pi_alpha[j - 1];
      for (int j = 1; j < k; ++j) below += s.pi_beta[j - 1];
      if (k > s.shoulder_bid) EXPECT_NEAR(s.pi_beta[k - 1] * m.F_a(k), m.p_b[k - 1] * above, 1e-12);
      if (k < s.shoulder_ask) EXPECT_NEAR(s.pi_alpha[k - 1] * (1 - m.F_b(k - 1)), m.p_a[k - 1] * below, 1e-12);
      if (k < s.shoulder_bid) EXPECT_NEAR(s.pi_beta[k - 1], 0.0, 1e-12);
    }
    EXPECT_NEAR(mass_b, 1.0, 1e-12);
    EXPECT_NEAR(mass_a, 1.0, 1e-12);
    EXPECT_LT(s.difference_residual, 1e-9);
    EXPECT_LT(difference_residual(m, s), 1e-9);
    // Symmetric inputs give a mirrored solution.
    for (int k = 1; k <= n; ++k) EXPECT_NEAR(s.pi_beta[k - 1], s.pi_alpha[n - k], 1e-12);
  }
}

TEST(SolveBinned, ConvergesToContinuousLimit) {
  const double e50 = convergence_error(50), e200 = convergence_error(200), e800 = convergence_error(800);
  EXPECT_GT(e50, e200);
  EXPECT_GT(e200, e800);
  EXPECT_LT(e800, 0.05);
}

TEST(SolveBinned, FiftyBinShoulder) {
  const int n = 50;
  const auto s = solve_binned(BinnedModel::uniform(n));
  const int k = s.shoulder_bid;
  const double lo = (k - 1.0) / n, hi = static_cast<double>(k) / n;
  EXPECT_LT(lo, kappa());
  EXPECT_GT(hi, kappa());
  const double full_level =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(varpi_formula, lo, hi);
  EXPECT_GT(s.pi_beta[k - 1], 0.0);
  EXPECT_LT(s.pi_beta[k - 1], full_level);
  EXPECT_LT(s.pi_beta[k - 1], s.pi_beta[k]);
  EXPECT_EQ(s.shoulder_ask, n + 1 - k);
}

TEST(SolveBinned, ShoulderInitialInequalities) {
  const int n = 50;
  const auto m = BinnedModel::uniform(n);
  const auto s = solve_binned(m);
  auto X = [&](int k) { return m.F_a(k) * s.pi_beta[k - 1] / m.p_b[k - 1]; };
  for (int k = s.shoulder_bid; k <= n; ++k) EXPECT_LE(X(k), 1.0 + 1e-12) << k;
  for (int k = s.shoulder_bid + 1; k < n; ++k) EXPECT_LE(X(k + 1) - X(k), 1e-12) << k;
}

TEST(SolveBinned, TwoBinsByHand) {
  // Bids rest only in bin 1 and asks only in bin 2, so all best-bid mass sits
  // in bin 1 and all best-ask mass in bin 2.
  auto m = BinnedModel::uniform(2);
  const auto s = solve_binned(m);
  EXPECT_NEAR(s.pi_beta[0], 1.0, 1e-12);
  EXPECT_NEAR(s.pi_beta[1], 0.0, 1e-12);
  EXPECT_NEAR(s.pi_alpha[0], 0.0, 1e-12);
  EXPECT_NEAR(s.pi_alpha[1], 1.0, 1e-12);
  EXPECT_NEAR(s.pi_beta[1] * m.F_a(2), 0.0, 1e-12);
  EXPECT_NEAR(s.pi_alpha[0] * (1 - m.F_b(0)), 0.0, 1e-12);
}

TEST(SolveBinned, ThreeBinsMatchBirthDeath) {
  // Signed depth q of bin 2 between the boundary orders moves up at 1/3 and
  // down at 2/3 away from zero, so P(q = j) = (1/3) 2^-|j| and P(q > 0) = 1/3.
  const auto s = solve_binned(three_bins_with_boundary());
  EXPECT_NEAR(s.pi_beta[1], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.pi_beta[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.pi_alpha[1], 1.0 / 3.0, 1e-12);
}

TEST(SolveBinned, RejectsBadModels) {
  BinnedModel m = BinnedModel::uniform(3);
  m.p_b = {0.5, 0.5, 0.5};
  EXPECT_THROW(solve_binned(m), Error);
  m = BinnedModel::uniform(3);
  m.boundary = BoundaryOrders{3, 2};
  EXPECT_THROW(solve_binned(m), Error);
}

TEST(Ctmc, ThreeBinsMatchFixedPoint) {
  TruncatedCTMC chain{three_bins_with_boundary(), 30};
  const auto c = ctmc_stationary(chain);
  const auto s = solve_binned(chain.model);
  EXPECT_EQ(c.n_states, 61u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(c.pi_beta[k], s.pi_beta[k], 1e-3);
    EXPECT_NEAR(c.pi_alpha[k], s.pi_alpha[k], 1e-3);
  }
  EXPECT_NEAR(c.interior_empty, 1.0 / 3.0, 1e-8);
  double total = 0;
  for (double p : c.probabilities) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Hand-derived geometric law of the signed depth.
  for (std::size_t i = 0; i < c.states.size(); ++i) {
    const int q = c.states[i][0];
    if (std::abs(q) < 10) EXPECT_NEAR(c.probabilities[i], std::pow(0.5, std::abs(q)) / 3.0, 1e-8) << q;
  }
}

TEST(Ctmc, TruncationRefinementIsMonotone) {
  double prev = 1.0;
  for (int cap : {1, 2, 5, 10, 30}) {
    const auto c = ctmc_stationary({three_bins_with_boundary(), cap});
    const double err = std::abs(c.pi_beta[1] - 1.0 / 3.0);
    EXPECT_LT(err, prev) << cap;
    prev = err;
  }
}

TEST(Ctmc, WiderChainConvergesInCap) {
  // Two tracked bins: truncation error shrinks as the cap grows.
  auto m = BinnedModel::uniform(4);
  m.boundary = BoundaryOrders{1, 4};
  const auto s = solve_binned(m);
  double prev = 1.0;
  for (int cap : {4, 8, 12, 16}) {
    const auto c = ctmc_stationary({m, cap});
    double err = 0.0;
    for (int k = 0; k < 4; ++k) err = std::max(err, std::abs(c.pi_beta[k] - s.pi_beta[k]));
    EXPECT_LT(err, prev) << cap;
    prev = err;
  }
  EXPECT_LT(prev, 2e-3);
}

TEST(Ctmc, ReducibleChainIsSingular) {
  BinnedModel m;
  m.n_bins = 3;
  m.p_b = {1, 0, 0};
  m.p_a = {0, 0, 1};
  m.boundary = BoundaryOrders{1, 3};
  try {
    ctmc_stationary({m, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularSystem);
  }
}

TEST(CrossCheck, ThreeBinsAgreeWithSimulation) {
  const auto r = simulate_binned_cross_check(three_bins_with_boundary(), 1000000, {21, 0});
  EXPECT_LT(r.max_error, 0.01);
  EXPECT_NEAR(r.simulated_beta[1], 1.0 / 3.0, 0.01);
}

TEST(CrossCheck, FiftyBins) {
  const auto r = simulate_binned_cross_check(BinnedModel::uniform(50), 2000000, {22, 0});
  EXPECT_LT(r.max_error, 0.01);
}

TEST(CrossCheck, OneBinIsASignedRandomWalk) {
  // With one bin every bid meets every ask, so the book is a signed queue. The
  // best-bid occupancy must equal the time the replayed walk spends above zero.
  SimConfig cfg;
  cfg.eq = PriceEquivalence::binned(1);
  cfg.horizon = Horizon::time(2000.0);
  cfg.burn_in = 0.0;
  cfg.stats_bins = 1;
  double mean = 0.0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    cfg.seed = {static_cast<std::uint64_t>(seed), 7};
    const auto rep = run(cfg);
    const auto events = sample_stream(cfg.model, cfg.seed, 2000.0);
    long q = 0;
    double t = 0.0, positive = 0.0;
    for (const auto& e : events) {
      if (q > 0) positive += e.time - t;
      t = e.time;
      q += e.side == Side::Bid ? 1 : -1;
    }
    if (q > 0) positive += 2000.0 - t;
    EXPECT_NEAR(rep.collector.best_bid_time[0], positive, 1e-9 * 2000.0);
    mean += positive / 2000.0 / seeds;
  }
  // By symmetry the expected fraction is 1/2; arcsine spread is sd 0.35 per seed.
  EXPECT_NEAR(mean, 0.5, 0.2);
}

TEST(Bounding, ContinuousBookIsSandwiched) {
  for (int n : {10, 50}) {
    const auto t = coupling::bounding_run(ArrivalModel{}, n, 100000, {23, 0});
    EXPECT_TRUE(t.lower_holds) << n;
    EXPECT_TRUE(t.upper_holds) << n;
    EXPECT_LE(t.lower_bids, t.continuous_bids);
    EXPECT_GE(t.upper_bids, t.continuous_bids);
  }
}
