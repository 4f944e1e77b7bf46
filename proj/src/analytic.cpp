#include "lobkin/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "lobkin/error.hpp"

namespace lobkin::analytic {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;

namespace {

constexpr double kUpper = 1.0 - 1e-12;

// u = G_a varpi_b = P(best ask > x), v = H_b varpi_a = P(best bid < x).
struct BalanceSystem {
  const OrderFlow& flow;
  void operator()(const State& s, State& ds, double x) const {
    x = std::clamp(x, 1e-300, kUpper);
    ds[0] = -s[1] * flow.ask_density(x) / flow.bid_above(x);
    ds[1] = s[0] * flow.bid_density(x) / flow.ask_below(x);
  }
};

struct Shot {
  double end = 0.0;
  State state{};
  bool hit_zero = false;
  bool blew_up = false;
};

using DenseStepper = odeint::dense_output_runge_kutta<
    odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State>>>;

// Integrates from x0 until u reaches zero (if stop_at_zero), x_max, or blow-up.
// `visit(a, b, stepper)` is called for each accepted step [a, b].
template <class Visit>
Shot integrate(const OrderFlow& flow, double x0, State s0, double x_max, double tol, bool stop_at_zero,
               Visit&& visit) {
  DenseStepper stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
  BalanceSystem sys{flow};
  stepper.initialize(s0, x0, std::min(1e-4, 0.01 * (x_max - x0)));
  Shot shot;
  shot.end = x0;
  shot.state = s0;
  for (int steps = 0; stepper.current_time() < x_max; ++steps) {
    if (steps > 1000000) throw Error(ErrorCode::NonConvergence, "ODE integration took too many steps");
    const auto [t0, t1] = stepper.do_step(sys);
    State cur = stepper.current_state();
    double b = t1;
    if (t1 > x_max) {
      b = x_max;
      stepper.calc_state(b, cur);
    }
    if (!std::isfinite(cur[0]) || !std::isfinite(cur[1]) || cur[1] > 1e6) {
      shot.blew_up = true;
      shot.end = b;
      shot.state = cur;
      return shot;
    }
    if (stop_at_zero && cur[0] <= 0.0) {
      auto u_at = [&](double x) {
        State s;
        stepper.calc_state(x, s);
        return s[0];
      };
      double root = b;
      if (u_at(t0) > 0.0) {
        boost::uintmax_t it = 200;
        const auto r = boost::math::tools::toms748_solve(
            u_at, t0, b, u_at(t0), cur[0],
            [](double lo, double hi) { return std::abs(hi - lo) < 1e-15; }, it);
        root = 0.5 * (r.first + r.second);
      }
      visit(t0, root, stepper);
      shot.end = root;
      stepper.calc_state(root, shot.state);
      shot.state[0] = 0.0;
      shot.hit_zero = true;
      return shot;
    }
    visit(t0, b, stepper);
    shot.end = b;
    shot.state = cur;
  }
  return shot;
}

double shoot_residual(const OrderFlow& flow, double kb, const SolverSettings& s) {
  const Shot shot = integrate(flow, kb, {1.0, 0.0}, kUpper, s.ode_tolerance, true,
                              [](double, double, const DenseStepper&) {});
  if (shot.blew_up) return 1e6;
  return shot.state[1] - 1.0;
}

void check_flow(const OrderFlow& flow) {
  for (int i = 1; i < 1000; ++i) {
    const double x = i / 1000.0;
    const double gb = flow.bid_density(x);
    const double ga = flow.ask_density(x);
    if (!std::isfinite(gb) || !std::isfinite(ga) || !(gb > 0.0) || !(ga > 0.0))
      throw Error(ErrorCode::InvalidDensity,
                  "arrival densities must be finite and positive on (0,1); failed at x=" + std::to_string(x));
    if (!std::isfinite(flow.ask_below(x)) || !std::isfinite(flow.bid_above(x)))
      throw Error(ErrorCode::InvalidDensity, "arrival distribution functions must be finite");
  }
}

double derivative(const std::function<double(double)>& f, double x) {
  const double h = 1e-6;
  const double lo = std::max(0.0, x - h);
  const double hi = std::min(1.0, x + h);
  return (f(hi) - f(lo)) / (hi - lo);
}

double hermite(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
         (t3 - t2) * h * d1;
}

double interpolate(const LimitingDensity& s, const std::vector<double>& f, const std::vector<double>& d,
                   double x) {
  if (s.grid.empty() || x < s.grid.front() || x > s.grid.back()) return 0.0;
  auto it = std::upper_bound(s.grid.begin(), s.grid.end(), x);
  if (it == s.grid.end()) return f.back();
  const auto i = static_cast<std::size_t>(it - s.grid.begin()) - 1;
  return hermite(s.grid[i], s.grid[i + 1], f[i], f[i + 1], d[i], d[i + 1], x);
}

// Cumulative integral of phi from grid[0], exact for piecewise cubics.
std::vector<double> cumulative(const std::vector<double>& x, const std::vector<double>& phi,
                               const std::vector<double>& dphi) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = x[i] - x[i - 1];
    out[i] = out[i - 1] + 0.5 * h * (phi[i - 1] + phi[i]) + h * h / 12.0 * (dphi[i - 1] - dphi[i]);
  }
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  g.back() = b;
  return g;
}

using Fn = std::function<double(double)>;

LimitingDensity tabulate(double kb, double ka, int n, const Fn& wb, const Fn& dwb, const Fn& wa, const Fn& dwa,
                         const OrderFlow& flow) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "grid_size must be at least 3");
  LimitingDensity s;
  s.kappa_b = kb;
  s.kappa_a = ka;
  s.grid = linspace(kb, ka, n);
  for (double x : s.grid) {
    s.varpi_b.push_back(wb(x));
    s.dvarpi_b.push_back(dwb(x));
    s.varpi_a.push_back(wa(x));
    s.dvarpi_a.push_back(dwa(x));
    s.pi_b.push_back(s.varpi_b.back() * flow.bid_density(x));
    s.pi_a.push_back(s.varpi_a.back() * flow.ask_density(x));
  }
  s.residuals = compute_residuals(s, flow);
  return s;
}

// Unclipped closed form; callers stay on the support up to rounding.
double pi_uniform(double s) { return (1.0 - kappa_uniform()) * (1.0 / s + std::log((1.0 - s) / s)); }
double dpi_uniform(double s) { return -(1.0 - kappa_uniform()) * (1.0 / (s * s) + 1.0 / (s * (1.0 - s))); }

}  // namespace

double Residuals::max() const {
  return std::max({normalization_b, normalization_a, consistency, balance_b, balance_a, boundary_b, boundary_a});
}

OrderFlow OrderFlow::from_densities(const PriceDistribution& f_b, const PriceDistribution& f_a) {
  OrderFlow f;
  f.bid_density = [f_b](double x) { return f_b.pdf(x); };
  f.ask_density = [f_a](double x) { return f_a.pdf(x); };
  f.ask_below = [f_a](double x) { return f_a.cdf(x); };
  f.bid_above = [f_b](double x) { return x >= 1.0 ? f_b.atom_high() : 1.0 - f_b.cdf(x); };
  return f;
}

OrderFlow OrderFlow::from_model(const ArrivalModel& m) {
  m.validate();
  const double nu_b = m.rate_bid * m.limit_fraction_bid;
  const double mu_b = m.rate_bid - nu_b;
  const double nu_a = m.rate_ask * m.limit_fraction_ask;
  const double mu_a = m.rate_ask - nu_a;
  const PriceDistribution fb = m.price_bid;
  const PriceDistribution fa = m.price_ask;
  OrderFlow f;
  f.bid_density = [=](double x) { return nu_b * fb.pdf(x); };
  f.ask_density = [=](double x) { return nu_a * fa.pdf(x); };
  f.ask_below = [=](double x) { return mu_a + nu_a * fa.cdf(x); };
  f.bid_above = [=](double x) { return mu_b + nu_b * (x >= 1.0 ? fb.atom_high() : 1.0 - fb.cdf(x)); };
  return f;
}

double LimitingDensity::varpi_b_at(double x) const { return interpolate(*this, varpi_b, dvarpi_b, x); }
double LimitingDensity::varpi_a_at(double x) const { return interpolate(*this, varpi_a, dvarpi_a, x); }

double solve_w() {
  // Halley iteration on g(w) = w e^w - 1/e; converges cubically from 0.3.
  const double target = std::exp(-1.0);
  double w = 0.3;
  for (int i = 0; i < 50; ++i) {
    const double ew = std::exp(w);
    const double g = w * ew - target;
    const double g1 = ew * (w + 1.0);
    const double g2 = ew * (w + 2.0);
    const double step = g / (g1 - 0.5 * g * g2 / g1);
    w -= step;
    if (std::abs(step) < 1e-17) break;
  }
  return w;
}

double kappa_uniform() {
  const double w = solve_w();
  return w / (1.0 + w);
}

double kappa_market_orders(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw Error(ErrorCode::InvalidArgument, "market-order fraction must lie in [0,1)");
  if (lambda >= solve_w())
    throw Error(ErrorCode::SupercriticalLambda, "market-order fraction at or above w: no stationary regime");
  return (1.0 + lambda) / (1.0 - lambda) * kappa_uniform() - lambda / (1.0 - lambda);
}

double uniform_varpi_b(double x) {
  const double k = kappa_uniform();
  if (x < k || x > 1.0 - k) return 0.0;
  return (1.0 - k) * (1.0 / x + std::log((1.0 - x) / x));
}

double uniform_varpi_b_derivative(double x) {
  const double k = kappa_uniform();
  if (x < k || x > 1.0 - k) return 0.0;
  return -(1.0 - k) * (1.0 / (x * x) + 1.0 / (x * (1.0 - x)));
}

Residuals compute_residuals(const LimitingDensity& s, const OrderFlow& flow) {
  const auto& x = s.grid;
  const std::size_t n = x.size();
  std::vector<double> pb(n), dpb(n), pa(n), dpa(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double gb = flow.bid_density(x[i]);
    const double ga = flow.ask_density(x[i]);
    pb[i] = s.varpi_b[i] * gb;
    dpb[i] = s.dvarpi_b[i] * gb + s.varpi_b[i] * derivative(flow.bid_density, x[i]);
    pa[i] = s.varpi_a[i] * ga;
    dpa[i] = s.dvarpi_a[i] * ga + s.varpi_a[i] * derivative(flow.ask_density, x[i]);
  }
  const std::vector<double> cb = cumulative(x, pb, dpb);
  const std::vector<double> ca = cumulative(x, pa, dpa);
  Residuals r;
  r.normalization_b = std::abs(cb.back() - 1.0);
  r.normalization_a = std::abs(ca.back() - 1.0);
  r.consistency = std::abs(flow.bid_above(s.kappa_b) - flow.ask_below(s.kappa_a));
  for (std::size_t i = 0; i < n; ++i) {
    const double above = ca.back() - ca[i];
    r.balance_b = std::max(r.balance_b, std::abs(flow.ask_below(x[i]) * s.varpi_b[i] - above));
    r.balance_a = std::max(r.balance_a, std::abs(flow.bid_above(x[i]) * s.varpi_a[i] - cb[i]));
  }
  r.boundary_b = std::abs(s.varpi_b.back());
  r.boundary_a = std::abs(s.varpi_a.front());
  return r;
}

LimitingDensity uniform_solution(const SolverSettings& settings) {
  const double k = kappa_uniform();
  return tabulate(
      k, 1.0 - k, settings.grid_size, uniform_varpi_b, uniform_varpi_b_derivative,
      [](double x) { return uniform_varpi_b(1.0 - x); },
      [](double x) { return -uniform_varpi_b_derivative(1.0 - x); }, OrderFlow::uniform());
}

LimitingDensity solve_general(const PriceDistribution& f_b, const PriceDistribution& f_a,
                              const SolverSettings& settings) {
  return solve_flow(OrderFlow::from_densities(f_b, f_a), settings);
}

LimitingDensity solve_flow(const OrderFlow& flow, const SolverSettings& settings) {
  if (settings.grid_size < 3 || !(settings.root_tolerance > 0) || !(settings.ode_tolerance > 0) ||
      settings.max_iterations < 1)
    throw Error(ErrorCode::InvalidArgument, "solver settings must be positive");
  check_flow(flow);

  // h(kappa_b) = v(kappa_a) - 1 decreases in kappa_b; bracket its sign change.
  std::vector<double> scan = {1e-9, 1e-7, 1e-5, 1e-4, 1e-3, 3e-3};
  for (int i = 1; i < 100; ++i) scan.push_back(i / 100.0);
  scan.push_back(1.0 - 1e-6);
  double lo = 0.0, hi = 0.0, h_lo = 0.0, h_hi = 0.0;
  bool found = false;
  double prev_x = scan[0];
  double prev_h = shoot_residual(flow, prev_x, settings);
  for (std::size_t i = 1; i < scan.size() && !found; ++i) {
    const double h = shoot_residual(flow, scan[i], settings);
    if (prev_h > 0.0 && h <= 0.0) {
      lo = prev_x, hi = scan[i], h_lo = prev_h, h_hi = h;
      found = true;
    }
    prev_x = scan[i];
    prev_h = h;
  }
  if (!found) throw Error(ErrorCode::NonConvergence, "shooting residual has no sign change on (0,1)");

  double kb = hi;
  if (h_hi != 0.0) {
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(settings.max_iterations);
    const double tol = settings.root_tolerance;
    const auto r = boost::math::tools::toms748_solve(
        [&](double k) { return shoot_residual(flow, k, settings); }, lo, hi, h_lo, h_hi,
        [tol](double a, double b) { return std::abs(b - a) < tol; }, iters);
    if (iters >= static_cast<boost::uintmax_t>(settings.max_iterations))
      throw Error(ErrorCode::NonConvergence, "shooting did not converge within max_iterations");
    kb = 0.5 * (r.first + r.second);
  }

  const Shot first = integrate(flow, kb, {1.0, 0.0}, kUpper, settings.ode_tolerance, true,
                               [](double, double, const DenseStepper&) {});
  if (!first.hit_zero) throw Error(ErrorCode::NonConvergence, "best-ask support end not found");
  const double ka = first.end;

  LimitingDensity s;
  s.kappa_b = kb;
  s.kappa_a = ka;
  s.grid = linspace(kb, ka, settings.grid_size);
  std::vector<State> states(s.grid.size());
  std::size_t next = 0;
  integrate(flow, kb, {1.0, 0.0}, kUpper, settings.ode_tolerance, true,
            [&](double a, double b, const DenseStepper& st) {
              while (next < s.grid.size() && s.grid[next] <= b) {
                if (s.grid[next] >= a) st.calc_state(s.grid[next], states[next]);
                ++next;
              }
            });
  states.front() = {1.0, 0.0};
  states.back()[0] = 0.0;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const double x = s.grid[i];
    const double u = states[i][0], v = states[i][1];
    const double G = flow.ask_below(x), H = flow.bid_above(x);
    const double ga = flow.ask_density(x), gb = flow.bid_density(x);
    const double wb = u / G, wa = v / H;
    s.varpi_b.push_back(wb);
    s.varpi_a.push_back(wa);
    s.dvarpi_b.push_back((-v * ga / H - wb * ga) / G);
    s.dvarpi_a.push_back((u * gb / G + wa * gb) / H);
    s.pi_b.push_back(wb * gb);
    s.pi_a.push_back(wa * ga);
  }
  s.residuals = compute_residuals(s, flow);
  return s;
}

LimitingDensity market_order_solution(double lambda, const SolverSettings& settings) {
  const double k = kappa_market_orders(lambda);
  const double l = lambda;
  auto s_of = [l](double x) { return ((1.0 - l) * x + l) / (1.0 + l); };
  const double ds = (1.0 - l) / (1.0 + l);
  return tabulate(
      k, 1.0 - k, settings.grid_size, [=](double x) { return pi_uniform(s_of(x)) / (1.0 + l); },
      [=](double x) { return dpi_uniform(s_of(x)) * ds / (1.0 + l); },
      [=](double x) { return pi_uniform(s_of(1.0 - x)) / (1.0 + l); },
      [=](double x) { return -dpi_uniform(s_of(1.0 - x)) * ds / (1.0 + l); },
      OrderFlow::from_model(ArrivalModel::market_orders(l)));
}

LimitingDensity differing_rates_solution(double nu_a, double nu_b, const SolverSettings& settings) {
  if (!(nu_a > 0.0) || !(nu_b > 0.0)) throw Error(ErrorCode::InvalidArgument, "rates must be positive");
  const double r = nu_a / nu_b;
  auto g = [r](double k) { return std::log((1 - k) * (1 - k) / (k * (r - 1 + k))) - (1 + r) / (1 - k); };
  const double lo = std::max(0.0, 1.0 - r) + 1e-14;
  const double hi = 1.0 - 1e-14;
  const double g_lo = g(lo), g_hi = g(hi);
  if (!(g_lo > 0.0 && g_hi < 0.0)) throw Error(ErrorCode::NonConvergence, "threshold equation not bracketed");
  boost::uintmax_t iters = static_cast<boost::uintmax_t>(settings.max_iterations);
  const double tol = std::min(settings.root_tolerance, 1e-13);
  const auto root = boost::math::tools::toms748_solve(
      g, lo, hi, g_lo, g_hi, [tol](double a, double b) { return std::abs(b - a) < tol; }, iters);
  if (iters >= static_cast<boost::uintmax_t>(settings.max_iterations))
    throw Error(ErrorCode::NonConvergence, "threshold equation did not converge");
  const double kb = 0.5 * (root.first + root.second);
  const double ka = nu_b * (1.0 - kb) / nu_a;
  const double cb = 1.0 / ka + std::log((1.0 - ka) / ka);
  const double ca = 1.0 / (1.0 - kb) + std::log(kb / (1.0 - kb));
  return tabulate(
      kb, ka, settings.grid_size,
      [=](double x) { return ka * (1.0 / x + std::log((1.0 - x) / x) - cb) / nu_b; },
      [=](double x) { return -ka * (1.0 / (x * x) + 1.0 / (x * (1.0 - x))) / nu_b; },
      [=](double x) { return (1.0 - kb) * (1.0 / (1.0 - x) + std::log(x / (1.0 - x)) - ca) / nu_a; },
      [=](double x) { return (1.0 - kb) * (1.0 / ((1.0 - x) * (1.0 - x)) + 1.0 / (x * (1.0 - x))) / nu_a; },
      OrderFlow::from_model(ArrivalModel::from_rates(nu_b, 0.0, nu_a, 0.0)));
}

LimitingDensity market_impact_solution(double mu_a, double mu_b, const SolverSettings& settings) {
  if (!(mu_a >= 0.0) || !(mu_b >= 0.0)) throw Error(ErrorCode::InvalidArgument, "market rates must be >= 0");
  const double w = solve_w();
  if (mu_a / (1.0 + mu_b) >= w || mu_b / (1.0 + mu_a) >= w)
    throw Error(ErrorCode::SupercriticalRates, "market-order rates too large: no stationary regime");
  const double m = 1.0 + mu_a + mu_b;
  const double kb = (w * (1.0 + mu_b) - mu_a) / (w + 1.0);
  const double ka = 1.0 - (w * (1.0 + mu_a) - mu_b) / (w + 1.0);
  auto sb = [=](double x) { return (x + mu_a) / m; };
  auto sa = [=](double x) { return (1.0 - x + mu_b) / m; };
  return tabulate(
      kb, ka, settings.grid_size, [=](double x) { return pi_uniform(sb(x)) / m; },
      [=](double x) { return dpi_uniform(sb(x)) / (m * m); },
      [=](double x) { return pi_uniform(sa(x)) / m; },
      [=](double x) { return -dpi_uniform(sa(x)) / (m * m); },
      OrderFlow::from_model(ArrivalModel::from_rates(1.0, mu_b, 1.0, mu_a)));
}

double OneSidedSolution::no_bid_above(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  const double birth = nu_b * (1.0 - x);
  if (theta == 0.0) return 1.0 - birth / mu_a;
  double term = 1.0, total = 1.0;
  for (int n = 1; n < 100000; ++n) {
    term *= birth / (mu_a + n * theta);
    total += term;
    if (term < 1e-18 * total) break;
  }
  return 1.0 / total;
}

double OneSidedSolution::best_bid_density(double x) const {
  if (x < kappa_b || x > 1.0) return 0.0;
  if (theta == 0.0) return nu_b / mu_a;
  const double h = 1e-5;
  const double lo = std::max(kappa_b, x - h), hi = std::min(1.0, x + h);
  return (no_bid_above(hi) - no_bid_above(lo)) / (hi - lo);
}

double OneSidedSolution::expected_bids_above(double x) const {
  const double birth = nu_b * (1.0 - std::clamp(x, 0.0, 1.0));
  if (theta == 0.0) return birth / (mu_a - birth);
  const std::vector<double> law = queue_law(x, 100000);
  double mean = 0.0;
  for (std::size_t n = 0; n < law.size(); ++n) mean += static_cast<double>(n) * law[n];
  return mean;
}

std::vector<double> OneSidedSolution::queue_law(double x, int n_max) const {
  const double birth = nu_b * (1.0 - std::clamp(x, 0.0, 1.0));
  std::vector<double> p;
  double term = 1.0, total = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) term *= birth / (mu_a + n * theta);
    p.push_back(term);
    total += term;
    if (n > 0 && term < 1e-18 * total) break;
  }
  for (double& v : p) v /= total;
  return p;
}

OneSidedSolution one_sided_solution(double nu_b, double mu_a, double theta) {
  if (!(nu_b > 0.0) || !(mu_a > nu_b))
    throw Error(ErrorCode::InvalidArgument, "one-sided market needs mu_a > nu_b > 0");
  if (!(theta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "cancellation rate must be >= 0");
  OneSidedSolution s;
  s.nu_b = nu_b;
  s.mu_a = mu_a;
  s.theta = theta;
  s.kappa_b = std::max(0.0, 1.0 - mu_a / nu_b);
  return s;
}

MonotonicityResult ode_monotonicity_check(const InitialCondition& ic1, const InitialCondition& ic2,
                                          double x_end, const OrderFlow& flow, int grid_size) {
  if (ic1.x0 != ic2.x0) throw Error(ErrorCode::InvalidArgument, "initial conditions at different points");
  if (ic1.value < ic2.value || ic1.slope < ic2.slope)
    throw Error(ErrorCode::InvalidArgument, "first initial condition must dominate the second");
  if (!(x_end > ic1.x0) || x_end > 1.0 || grid_size < 2)
    throw Error(ErrorCode::InvalidArgument, "bad integration range");
  const double x0 = ic1.x0;
  auto to_state = [&](const InitialCondition& ic) {
    const double G = flow.ask_below(x0), ga = flow.ask_density(x0), H = flow.bid_above(x0);
    const double du = ga * ic.value + G * ic.slope;
    return State{G * ic.value, -H * du / ga};
  };
  MonotonicityResult res;
  res.grid = linspace(x0, x_end, grid_size);
  auto run_one = [&](State s0, std::vector<double>& out) {
    std::vector<State> st(res.grid.size());
    st.front() = s0;
    std::size_t next = 1;
    integrate(flow, x0, s0, x_end, 1e-11, false, [&](double a, double b, const DenseStepper& stp) {
      while (next < res.grid.size() && res.grid[next] <= b) {
        if (res.grid[next] >= a) stp.calc_state(res.grid[next], st[next]);
        ++next;
      }
    });
    for (std::size_t i = 0; i < st.size(); ++i) out.push_back(st[i][0] / flow.ask_below(res.grid[i]));
  };
  run_one(to_state(ic1), res.varpi_1);
  run_one(to_state(ic2), res.varpi_2);
  res.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < res.grid.size(); ++i)
    res.min_gap = std::min(res.min_gap, res.varpi_1[i] - res.varpi_2[i]);
  res.dominated = res.min_gap >= -1e-10;
  return res;
}

}  // namespace lobkin::analytic
