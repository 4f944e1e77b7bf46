#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lobkin/book.hpp"
#include "lobkin/rng.hpp"

namespace lobkin {

// Law of an order's price on [0,1]: an absolutely continuous body plus optional
// atoms at 0 and 1.
class PriceDistribution {
 public:
  enum class Kind : std::uint8_t { Uniform01, PiecewiseLinearCdf, Polynomial };

  PriceDistribution() = default;  // Uniform01, no atoms
  static PriceDistribution uniform() { return {}; }
  // Knots (x, F(x)) of the body CDF; must start at (0,0) and end at (1,1).
  static PriceDistribution piecewise_linear(std::vector<std::pair<double, double>> knots);
  // Body density proportional to sum_k c[k] x^k; must be nonnegative on [0,1].
  static PriceDistribution polynomial(std::vector<double> coefficients);

  // Returns a copy whose body is scaled by 1 - at_zero - at_one.
  PriceDistribution with_atoms(double at_zero, double at_one) const;

  Kind kind() const noexcept { return kind_; }
  double atom_low() const noexcept { return atom0_; }
  double atom_high() const noexcept { return atom1_; }
  double body_mass() const noexcept { return 1.0 - atom0_ - atom1_; }
  const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }
  const std::vector<double>& coefficients() const noexcept { return coef_; }

  // P(price <= x), atoms included.
  double cdf(double x) const;
  // Density of the continuous part (already scaled by body_mass()).
  double pdf(double x) const;
  double inverse_cdf(double u) const;

  double body_cdf(double x) const;
  double body_pdf(double x) const;
  double body_inverse(double v) const;

 private:
  Kind kind_ = Kind::Uniform01;
  std::vector<std::pair<double, double>> knots_;
  std::vector<double> coef_;  // normalized density coefficients
  double atom0_ = 0.0;
  double atom1_ = 0.0;
};

double inverse_cdf(const PriceDistribution& dist, double u);

struct ArrivalModel {
  double rate_bid = 1.0;
  double rate_ask = 1.0;
  double limit_fraction_bid = 1.0;
  double limit_fraction_ask = 1.0;
  PriceDistribution price_bid;
  PriceDistribution price_ask;

  // A fraction lambda of all orders are market orders, total rate 1 per side.
  static ArrivalModel market_orders(double lambda);
  // Limit rates nu and market rates mu per side, uniform limit prices.
  static ArrivalModel from_rates(double nu_b, double mu_b, double nu_a, double mu_a);

  double total_rate() const noexcept { return rate_bid + rate_ask; }
  void validate() const;
};

struct ArrivalEvent {
  double time = 0.0;
  Side side = Side::Bid;
  double price = 0.0;
};

// Lazily generated arrival process. Event i draws from fixed counter blocks, so
// the sequence is a pure function of (model, seed).
class ArrivalStream {
 public:
  ArrivalStream(const ArrivalModel& model, RngSeed seed);

  ArrivalEvent next();
  std::uint64_t emitted() const noexcept { return index_; }
  double time() const noexcept { return time_; }

 private:
  ArrivalModel model_;
  CounterRng rng_;
  double p_bid_;
  std::uint64_t index_ = 0;
  double time_ = 0.0;
};

std::vector<ArrivalEvent> sample_stream(const ArrivalModel& model, RngSeed seed, double horizon);

}  // namespace lobkin
