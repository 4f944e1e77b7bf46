#include "lobkin/arrivals.hpp"

#include <algorithm>
#include <cmath>

#include "lobkin/error.hpp"

namespace lobkin {

namespace {

double poly_eval(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double poly_integral(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k] / static_cast<double>(k + 1);
  return acc * x;
}

}  // namespace

PriceDistribution PriceDistribution::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two CDF knots");
  if (knots.front() != std::make_pair(0.0, 0.0) || knots.back() != std::make_pair(1.0, 1.0))
    throw Error(ErrorCode::InvalidArgument, "CDF knots must run from (0,0) to (1,1)");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first))
      throw Error(ErrorCode::InvalidArgument, "CDF knots must be strictly increasing in x");
    if (knots[i].second < knots[i - 1].second)
      throw Error(ErrorCode::InvalidArgument, "CDF knots must be nondecreasing");
  }
  PriceDistribution d;
  d.kind_ = Kind::PiecewiseLinearCdf;
  d.knots_ = std::move(knots);
  return d;
}

PriceDistribution PriceDistribution::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) throw Error(ErrorCode::InvalidArgument, "empty polynomial");
  for (int i = 0; i <= 1000; ++i) {
    if (poly_eval(coefficients, i / 1000.0) < 0.0)
      throw Error(ErrorCode::InvalidArgument, "polynomial density is negative on [0,1]");
  }
  const double mass = poly_integral(coefficients, 1.0);
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "polynomial density has zero mass");
  for (double& c : coefficients) c /= mass;
  PriceDistribution d;
  d.kind_ = Kind::Polynomial;
  d.coef_ = std::move(coefficients);
  return d;
}

PriceDistribution PriceDistribution::with_atoms(double at_zero, double at_one) const {
  if (at_zero < 0.0 || at_one < 0.0 || at_zero + at_one > 1.0)
    throw Error(ErrorCode::InvalidArgument, "atom masses must be nonnegative and sum to <= 1");
  PriceDistribution d = *this;
  d.atom0_ = at_zero;
  d.atom1_ = at_one;
  return d;
}

double PriceDistribution::body_cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  switch (kind_) {
    case Kind::Uniform01:
      return x;
    case Kind::PiecewiseLinearCdf: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                 [](double v, const auto& k) { return v < k.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      return lo.second + (hi.second - lo.second) * (x - lo.first) / (hi.first - lo.first);
    }
    case Kind::Polynomial:
      return std::clamp(poly_integral(coef_, x), 0.0, 1.0);
  }
  return x;
}

double PriceDistribution::body_pdf(double x) const {
  if (x < 0.0 || x > 1.0) return 0.0;
  switch (kind_) {
    case Kind::Uniform01:
      return 1.0;
    case Kind::PiecewiseLinearCdf: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                 [](double v, const auto& k) { return v < k.first; });
      if (it == knots_.end()) --it;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      return (hi.second - lo.second) / (hi.first - lo.first);
    }
    case Kind::Polynomial:
      return poly_eval(coef_, x);
  }
  return 1.0;
}

double PriceDistribution::body_inverse(double v) const {
  v = std::clamp(v, 0.0, 1.0);
  switch (kind_) {
    case Kind::Uniform01:
      return v;
    case Kind::PiecewiseLinearCdf: {
      // First segment whose upper CDF value reaches v and that has positive mass.
      for (std::size_t i = 1; i < knots_.size(); ++i) {
        const auto& lo = knots_[i - 1];
        const auto& hi = knots_[i];
        if (hi.second >= v && hi.second > lo.second) {
          const double t = (v - lo.second) / (hi.second - lo.second);
          return std::clamp(lo.first + t * (hi.first - lo.first), lo.first, hi.first);
        }
      }
      return 1.0;
    }
    case Kind::Polynomial: {
      double lo = 0.0, hi = 1.0, x = v;
      for (int it = 0; it < 100; ++it) {
        const double f = poly_integral(coef_, x) - v;
        if (f > 0.0) hi = x; else lo = x;
        if (std::abs(f) < 1e-15 || hi - lo < 1e-15) break;
        const double d = poly_eval(coef_, x);
        double nx = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        x = nx;
      }
      return x;
    }
  }
  return v;
}

double PriceDistribution::cdf(double x) const {
  if (x < 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return atom0_ + body_mass() * body_cdf(x);
}

double PriceDistribution::pdf(double x) const { return body_mass() * body_pdf(x); }

double PriceDistribution::inverse_cdf(double u) const {
  if (u < atom0_) return 0.0;
  if (u >= 1.0 - atom1_) return 1.0;
  const double body = body_mass();
  return body > 0.0 ? body_inverse((u - atom0_) / body) : 0.0;
}

double inverse_cdf(const PriceDistribution& dist, double u) { return dist.inverse_cdf(u); }

ArrivalModel ArrivalModel::market_orders(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "market-order fraction must lie in [0,1]");
  ArrivalModel m;
  m.limit_fraction_bid = m.limit_fraction_ask = 1.0 - lambda;
  return m;
}

ArrivalModel ArrivalModel::from_rates(double nu_b, double mu_b, double nu_a, double mu_a) {
  if (nu_b < 0 || mu_b < 0 || nu_a < 0 || mu_a < 0)
    throw Error(ErrorCode::InvalidArgument, "rates must be nonnegative");
  ArrivalModel m;
  m.rate_bid = nu_b + mu_b;
  m.rate_ask = nu_a + mu_a;
  m.limit_fraction_bid = m.rate_bid > 0 ? nu_b / m.rate_bid : 1.0;
  m.limit_fraction_ask = m.rate_ask > 0 ? nu_a / m.rate_ask : 1.0;
  return m;
}

void ArrivalModel::validate() const {
  if (!(rate_bid >= 0.0) || !(rate_ask >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "arrival rates must be nonnegative");
  if (!(total_rate() > 0.0)) throw Error(ErrorCode::InvalidArgument, "total arrival rate is zero");
  auto frac_ok = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!frac_ok(limit_fraction_bid) || !frac_ok(limit_fraction_ask))
    throw Error(ErrorCode::InvalidArgument, "limit fractions must lie in [0,1]");
}

ArrivalStream::ArrivalStream(const ArrivalModel& model, RngSeed seed)
    : model_(model), rng_(seed), p_bid_(0.0) {
  model_.validate();
  p_bid_ = model_.rate_bid / model_.total_rate();
}

ArrivalEvent ArrivalStream::next() {
  const auto a = rng_.uniforms(2 * index_);
  const auto b = rng_.uniforms(2 * index_ + 1);
  ++index_;
  time_ += -std::log1p(-a[0]) / model_.total_rate();
  ArrivalEvent ev;
  ev.time = time_;
  ev.side = a[1] < p_bid_ ? Side::Bid : Side::Ask;
  if (ev.side == Side::Bid) {
    ev.price = b[0] < model_.limit_fraction_bid ? model_.price_bid.inverse_cdf(b[1]) : 1.0;
  } else {
    ev.price = b[0] < model_.limit_fraction_ask ? model_.price_ask.inverse_cdf(b[1]) : 0.0;
  }
  return ev;
}

std::vector<ArrivalEvent> sample_stream(const ArrivalModel& model, RngSeed seed, double horizon) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  ArrivalStream stream(model, seed);
  std::vector<ArrivalEvent> out;
  out.reserve(static_cast<std::size_t>(model.total_rate() * horizon * 1.05) + 16);
  for (;;) {
    ArrivalEvent ev = stream.next();
    if (ev.time > horizon) break;
    out.push_back(ev);
  }
  return out;
}

}  // namespace lobkin
