#pragma once

#include <functional>
#include <vector>

#include "lobkin/arrivals.hpp"

namespace lobkin::analytic {

struct SolverSettings {
  int grid_size = 2001;
  double root_tolerance = 1e-10;
  double ode_tolerance = 1e-9;
  int max_iterations = 200;
};

// Order flow seen by the balance equations, as rates per unit time.
//   ask_below(x) = flow of asks priced <= x (market asks included), G_a
//   bid_above(x) = flow of bids priced >= x (market bids included), H_b
// and the limit-order rate densities g_b, g_a.
struct OrderFlow {
  std::function<double(double)> bid_density;
  std::function<double(double)> ask_density;
  std::function<double(double)> ask_below;
  std::function<double(double)> bid_above;

  static OrderFlow from_densities(const PriceDistribution& f_b, const PriceDistribution& f_a);
  static OrderFlow from_model(const ArrivalModel& model);
  static OrderFlow uniform() { return from_densities({}, {}); }
};

struct Residuals {
  double normalization_b = 0.0;  // |int varpi_b g_b - 1|
  double normalization_a = 0.0;
  double consistency = 0.0;      // |H_b(kappa_b) - G_a(kappa_a)|
  double balance_b = 0.0;        // sup |G_a varpi_b - int_x varpi_a g_a|
  double balance_a = 0.0;        // sup |H_b varpi_a - int^x varpi_b g_b|
  double boundary_b = 0.0;       // |varpi_b(kappa_a)|
  double boundary_a = 0.0;       // |varpi_a(kappa_b)|

  double max() const;
};

// varpi = pi / g, where g is the limit-order rate density of that side.
struct LimitingDensity {
  double kappa_b = 0.0;
  double kappa_a = 1.0;
  std::vector<double> grid;
  std::vector<double> varpi_b, varpi_a;
  std::vector<double> dvarpi_b, dvarpi_a;
  std::vector<double> pi_b, pi_a;
  Residuals residuals;

  // Cubic Hermite interpolation on the grid; zero outside [kappa_b, kappa_a].
  double varpi_b_at(double x) const;
  double varpi_a_at(double x) const;
};

// Root of w e^w = 1/e.
double solve_w();
// Threshold kappa = w / (1 + w) of the symmetric uniform book.
double kappa_uniform();
// Lower threshold with a fraction lambda of market orders.
double kappa_market_orders(double lambda);

// Closed-form varpi_b of the symmetric uniform book (zero outside the support).
double uniform_varpi_b(double x);
double uniform_varpi_b_derivative(double x);

LimitingDensity uniform_solution(const SolverSettings& settings = {});
LimitingDensity solve_general(const PriceDistribution& f_b, const PriceDistribution& f_a,
                              const SolverSettings& settings = {});
LimitingDensity solve_flow(const OrderFlow& flow, const SolverSettings& settings = {});
LimitingDensity market_order_solution(double lambda, const SolverSettings& settings = {});
LimitingDensity differing_rates_solution(double nu_a, double nu_b, const SolverSettings& settings = {});
LimitingDensity market_impact_solution(double mu_a, double mu_b, const SolverSettings& settings = {});

// Recomputes residuals of a tabulated solution against `flow`.
Residuals compute_residuals(const LimitingDensity& sol, const OrderFlow& flow);

struct OneSidedSolution {
  double nu_b = 1.0;
  double mu_a = 2.0;
  double theta = 0.0;
  double kappa_b = 0.0;  // clipped to [0,1)

  // P(no bids in (x,1)).
  double no_bid_above(double x) const;
  // Density of the best bid on (kappa_b, 1).
  double best_bid_density(double x) const;
  // Probability the bid side is empty.
  double empty_probability() const { return no_bid_above(0.0); }
  double expected_bids_above(double x) const;
  // Stationary law of the number of bids in (x,1), truncated at n_max terms.
  std::vector<double> queue_law(double x, int n_max = 200) const;
};

OneSidedSolution one_sided_solution(double nu_b, double mu_a, double theta = 0.0);

struct InitialCondition {
  double x0 = 0.0;
  double value = 0.0;  // varpi_b(x0)
  double slope = 0.0;  // varpi_b'(x0)
};

struct MonotonicityResult {
  bool dominated = false;
  double min_gap = 0.0;  // min over grid of varpi_b^1 - varpi_b^2
  std::vector<double> grid;
  std::vector<double> varpi_1, varpi_2;
};

// Integrates the varpi_b equation from both initial conditions up to x_end and
// checks pointwise dominance. ic1 must dominate ic2 in value and slope.
MonotonicityResult ode_monotonicity_check(const InitialCondition& ic1, const InitialCondition& ic2,
                                          double x_end, const OrderFlow& flow = OrderFlow::uniform(),
                                          int grid_size = 1001);

}  // namespace lobkin::analytic
