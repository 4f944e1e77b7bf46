#include "lobkin/binned.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "lobkin/error.hpp"
#include "lobkin/simulator.hpp"

namespace lobkin::binned {

namespace {

std::size_t ix(int bin) { return static_cast<std::size_t>(bin - 1); }

}  // namespace

BinnedModel BinnedModel::uniform(int n_bins) {
  if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "n_bins must be positive");
  BinnedModel m;
  m.n_bins = n_bins;
  m.p_b.assign(static_cast<std::size_t>(n_bins), 1.0 / n_bins);
  m.p_a = m.p_b;
  return m;
}

void BinnedModel::validate() const {
  if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "n_bins must be positive");
  if (p_b.size() != static_cast<std::size_t>(n_bins) || p_a.size() != static_cast<std::size_t>(n_bins))
    throw Error(ErrorCode::InvalidArgument, "per-bin probabilities must have n_bins entries");
  auto check = [](const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bin probabilities must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "bin probabilities must sum to 1");
  };
  check(p_b);
  check(p_a);
  if (boundary) {
    if (boundary->bid_bin < 1 || boundary->ask_bin > n_bins || boundary->bid_bin >= boundary->ask_bin)
      throw Error(ErrorCode::InvalidArgument, "boundary orders need 1 <= bid bin < ask bin <= n_bins");
  }
}

double BinnedModel::F_a(int k) const {
  double s = 0.0;
  for (int j = 1; j <= std::min(k, n_bins); ++j) s += p_a[ix(j)];
  return s;
}

double BinnedModel::F_b(int k) const {
  double s = 0.0;
  for (int j = 1; j <= std::min(k, n_bins); ++j) s += p_b[ix(j)];
  return s;
}

double difference_residual(const BinnedModel& m, const BinnedStationary& s) {
  const int n = m.n_bins;
  std::vector<double> Fa(static_cast<std::size_t>(n + 1), 0.0), Fb(Fa);
  for (int k = 1; k <= n; ++k) {
    Fa[static_cast<std::size_t>(k)] = Fa[static_cast<std::size_t>(k - 1)] + m.p_a[ix(k)];
    Fb[static_cast<std::size_t>(k)] = Fb[static_cast<std::size_t>(k - 1)] + m.p_b[ix(k)];
  }
  auto X = [&](int k) { return Fa[static_cast<std::size_t>(k)] * s.pi_beta[ix(k)] / m.p_b[ix(k)]; };
  auto D = [&](int k) { return (1.0 - Fb[static_cast<std::size_t>(k)]) / m.p_a[ix(k + 1)] * (X(k + 1) - X(k)); };
  double worst = 0.0;
  for (int k = s.shoulder_bid + 1; k + 3 <= s.shoulder_ask; ++k) {
    if (m.p_b[ix(k)] <= 0 || m.p_b[ix(k + 1)] <= 0 || m.p_b[ix(k + 2)] <= 0 || m.p_a[ix(k + 1)] <= 0 ||
        m.p_a[ix(k + 2)] <= 0)
      continue;
    worst = std::max(worst, std::abs(D(k + 1) - D(k) + s.pi_beta[ix(k + 1)]));
  }
  return worst;
}

BinnedStationary solve_binned(const BinnedModel& model, const FixedPointSettings& settings) {
  model.validate();
  const int n = model.n_bins;
  std::vector<double> Fa(static_cast<std::size_t>(n + 1), 0.0), Fb(Fa);
  for (int k = 1; k <= n; ++k) {
    Fa[static_cast<std::size_t>(k)] = Fa[static_cast<std::size_t>(k - 1)] + model.p_a[ix(k)];
    Fb[static_cast<std::size_t>(k)] = Fb[static_cast<std::size_t>(k - 1)] + model.p_b[ix(k)];
  }
  const int b0 = model.boundary ? model.boundary->bid_bin : 0;
  const int a0 = model.boundary ? model.boundary->ask_bin : n + 1;

  BinnedStationary s;
  s.pi_beta.assign(static_cast<std::size_t>(n), 0.0);
  s.pi_alpha.assign(static_cast<std::size_t>(n), 1.0 / n);
  std::vector<double> next(static_cast<std::size_t>(n));
  const double d = settings.damping;

  for (int it = 1; it <= settings.max_iterations; ++it) {
    double change = 0.0;

    // Best bid: fill from the top; the first bin where the mass would exceed one
    // (or the boundary bin) takes the remainder.
    std::fill(next.begin(), next.end(), 0.0);
    double above = 0.0, cum = 0.0;
    int shoulder = 1;
    for (int k = n; k >= 1; --k) {
      if (k == b0 || k == 1) {
        next[ix(k)] = std::max(0.0, 1.0 - cum);
        shoulder = k;
        break;
      }
      const double fa = Fa[static_cast<std::size_t>(k)];
      const double cand = fa > 0.0 ? model.p_b[ix(k)] * above / fa : std::numeric_limits<double>::infinity();
      if (b0 == 0 && cum + cand >= 1.0) {
        next[ix(k)] = 1.0 - cum;
        shoulder = k;
        break;
      }
      next[ix(k)] = cand;
      cum += cand;
      above += s.pi_alpha[ix(k)];
    }
    s.shoulder_bid = shoulder;
    for (int k = 1; k <= n; ++k) {
      const double v = (1.0 - d) * s.pi_beta[ix(k)] + d * next[ix(k)];
      change = std::max(change, std::abs(v - s.pi_beta[ix(k)]));
      s.pi_beta[ix(k)] = v;
    }

    // Best ask: fill from the bottom.
    std::fill(next.begin(), next.end(), 0.0);
    double below = 0.0;
    cum = 0.0;
    shoulder = n;
    for (int k = 1; k <= n; ++k) {
      if (k == a0 || k == n) {
        next[ix(k)] = std::max(0.0, 1.0 - cum);
        shoulder = k;
        break;
      }
      const double hb = 1.0 - Fb[static_cast<std::size_t>(k - 1)];
      const double cand = hb > 0.0 ? model.p_a[ix(k)] * below / hb : std::numeric_limits<double>::infinity();
      if (a0 == n + 1 && cum + cand >= 1.0) {
        next[ix(k)] = 1.0 - cum;
        shoulder = k;
        break;
      }
      next[ix(k)] = cand;
      cum += cand;
      below += s.pi_beta[ix(k)];
    }
    s.shoulder_ask = shoulder;
    for (int k = 1; k <= n; ++k) {
      const double v = (1.0 - d) * s.pi_alpha[ix(k)] + d * next[ix(k)];
      change = std::max(change, std::abs(v - s.pi_alpha[ix(k)]));
      s.pi_alpha[ix(k)] = v;
    }

    s.iterations = it;
    if (change < settings.tolerance) {
      s.difference_residual = difference_residual(model, s);
      return s;
    }
  }
  throw Error(ErrorCode::NonConvergence, "binned fixed point did not converge");
}

CtmcStationary ctmc_stationary(const TruncatedCTMC& chain) {
  const BinnedModel& m = chain.model;
  m.validate();
  if (chain.queue_cap < 1) throw Error(ErrorCode::InvalidArgument, "queue_cap must be positive");
  const int b0 = m.boundary ? m.boundary->bid_bin : 0;
  const int a0 = m.boundary ? m.boundary->ask_bin : m.n_bins + 1;
  const int lo = b0 + 1, hi = a0 - 1;
  const int tracked = std::max(0, hi - lo + 1);
  const int cap = chain.queue_cap;
  const std::int64_t radix = 2 * cap + 1;

  double raw_count = 1.0;
  for (int i = 0; i < tracked; ++i) raw_count *= static_cast<double>(radix);
  if (raw_count > 2e7) throw Error(ErrorCode::InvalidArgument, "CTMC state space too large");

  // State: signed depth per tracked bin, packed little-endian in base 2cap+1
  // (digit = depth + cap, tracked bin lo is the least significant digit).
  auto decode = [&](std::int64_t code, std::vector<int>& q) {
    q.resize(static_cast<std::size_t>(tracked));
    for (int i = 0; i < tracked; ++i) {
      q[static_cast<std::size_t>(i)] = static_cast<int>(code % radix) - cap;
      code /= radix;
    }
  };
  auto encode = [&](const std::vector<int>& q) {
    std::int64_t code = 0;
    for (int i = tracked - 1; i >= 0; --i) code = code * radix + (q[static_cast<std::size_t>(i)] + cap);
    return code;
  };
  auto valid = [&](const std::vector<int>& q) {
    int highest_bid = -1;
    for (int i = 0; i < tracked; ++i) {
      const int v = q[static_cast<std::size_t>(i)];
      if (v > 0) highest_bid = i;
      if (v < 0 && highest_bid > i) return false;
    }
    // All asks must lie strictly above all bids.
    int lowest_ask = tracked;
    for (int i = 0; i < tracked; ++i)
      if (q[static_cast<std::size_t>(i)] < 0) {
        lowest_ask = i;
        break;
      }
    return highest_bid < lowest_ask;
  };

  std::vector<std::int64_t> codes;
  std::vector<int> q;
  const auto total = static_cast<std::int64_t>(raw_count);
  for (std::int64_t c = 0; c < total; ++c) {
    decode(c, q);
    if (valid(q)) codes.push_back(c);
  }
  const auto n_states = static_cast<Eigen::Index>(codes.size());
  auto index_of = [&](std::int64_t code) {
    return static_cast<Eigen::Index>(std::lower_bound(codes.begin(), codes.end(), code) - codes.begin());
  };

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(codes.size(), 0.0);
  std::vector<int> nq;
  for (std::size_t si = 0; si < codes.size(); ++si) {
    decode(codes[si], q);
    std::map<std::int64_t, double> out;
    int lowest_ask = 0, highest_bid = 0;  // bin numbers, 0 = none
    for (int i = 0; i < tracked; ++i)
      if (q[static_cast<std::size_t>(i)] < 0) {
        lowest_ask = lo + i;
        break;
      }
    if (lowest_ask == 0 && m.boundary) lowest_ask = a0;
    for (int i = tracked - 1; i >= 0; --i)
      if (q[static_cast<std::size_t>(i)] > 0) {
        highest_bid = lo + i;
        break;
      }
    if (highest_bid == 0 && m.boundary) highest_bid = b0;

    for (int j = 1; j <= m.n_bins; ++j) {
      const double rb = chain.rate_bid * m.p_b[ix(j)];
      if (rb > 0.0) {
        nq = q;
        if (lowest_ask != 0 && lowest_ask <= j) {
          if (lowest_ask >= lo && lowest_ask <= hi) nq[static_cast<std::size_t>(lowest_ask - lo)] += 1;
        } else if (j >= lo && j <= hi && nq[static_cast<std::size_t>(j - lo)] < cap) {
          nq[static_cast<std::size_t>(j - lo)] += 1;
        }
        if (nq != q) out[encode(nq)] += rb;
      }
      const double ra = chain.rate_ask * m.p_a[ix(j)];
      if (ra > 0.0) {
        nq = q;
        if (highest_bid != 0 && highest_bid >= j) {
          if (highest_bid >= lo && highest_bid <= hi) nq[static_cast<std::size_t>(highest_bid - lo)] -= 1;
        } else if (j >= lo && j <= hi && nq[static_cast<std::size_t>(j - lo)] > -cap) {
          nq[static_cast<std::size_t>(j - lo)] -= 1;
        }
        if (nq != q) out[encode(nq)] += ra;
      }
    }
    for (const auto& [code, rate] : out) {
      // Transposed generator: column = source state.
      trip.emplace_back(index_of(code), static_cast<Eigen::Index>(si), rate);
      diag[si] -= rate;
    }
  }
  for (std::size_t si = 0; si < codes.size(); ++si)
    trip.emplace_back(static_cast<Eigen::Index>(si), static_cast<Eigen::Index>(si), diag[si]);

  // Replace the last balance equation by the normalisation sum(pi) = 1.
  const Eigen::Index last = n_states - 1;
  std::vector<Eigen::Triplet<double>> sys;
  sys.reserve(trip.size() + codes.size());
  for (const auto& t : trip)
    if (t.row() != last) sys.push_back(t);
  for (Eigen::Index c = 0; c < n_states; ++c) sys.emplace_back(last, c, 1.0);
  Eigen::SparseMatrix<double> A(n_states, n_states);
  A.setFromTriplets(sys.begin(), sys.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_states);
  rhs(last) = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "generator is singular (reducible chain)");
  Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !pi.allFinite())
    throw Error(ErrorCode::SingularSystem, "stationary solve failed");
  double lowest = pi.minCoeff();
  if (lowest < -1e-9) throw Error(ErrorCode::SingularSystem, "stationary vector has negative mass (reducible chain)");
  // Reject spurious solutions from a rank-deficient system.
  Eigen::SparseMatrix<double> Qt(n_states, n_states);
  Qt.setFromTriplets(trip.begin(), trip.end());
  if ((Qt * pi).cwiseAbs().maxCoeff() > 1e-9)
    throw Error(ErrorCode::SingularSystem, "generator has no unique stationary law");

  CtmcStationary res;
  res.n_states = codes.size();
  res.first_tracked_bin = lo;
  res.pi_beta.assign(static_cast<std::size_t>(m.n_bins), 0.0);
  res.pi_alpha.assign(static_cast<std::size_t>(m.n_bins), 0.0);
  for (std::size_t si = 0; si < codes.size(); ++si) {
    const double p = std::max(0.0, pi(static_cast<Eigen::Index>(si)));
    decode(codes[si], q);
    res.probabilities.push_back(p);
    res.states.push_back(q);
    int hb = m.boundary ? b0 : 0, la = m.boundary ? a0 : 0;
    bool empty = true;
    for (int i = 0; i < tracked; ++i) {
      const int v = q[static_cast<std::size_t>(i)];
      if (v != 0) empty = false;
      if (v > 0) hb = lo + i;
    }
    for (int i = tracked - 1; i >= 0; --i)
      if (q[static_cast<std::size_t>(i)] < 0) la = lo + i;
    if (hb > 0) res.pi_beta[ix(hb)] += p;
    if (la > 0) res.pi_alpha[ix(la)] += p;
    if (empty) res.interior_empty += p;
  }
  return res;
}

CrossCheck simulate_binned_cross_check(const BinnedModel& model, std::uint64_t horizon_events, RngSeed seed) {
  model.validate();
  const int n = model.n_bins;
  auto knots_of = [n](const std::vector<double>& p) {
    std::vector<std::pair<double, double>> knots{{0.0, 0.0}};
    double cum = 0.0;
    for (int k = 1; k <= n; ++k) {
      cum += p[ix(k)];
      knots.emplace_back(static_cast<double>(k) / n, k == n ? 1.0 : std::min(cum, 1.0));
    }
    return knots;
  };
  SimConfig cfg;
  cfg.model.price_bid = PriceDistribution::piecewise_linear(knots_of(model.p_b));
  cfg.model.price_ask = PriceDistribution::piecewise_linear(knots_of(model.p_a));
  cfg.eq = PriceEquivalence::binned(n);
  cfg.horizon = Horizon::events(horizon_events);
  cfg.seed = seed;
  cfg.stats_bins = n;
  std::vector<StrategyHook*> hooks;
  std::optional<StaticLevelsHook> boundary;
  if (model.boundary) {
    boundary.emplace("boundary", (model.boundary->bid_bin - 0.5) / n, (model.boundary->ask_bin - 0.5) / n);
    hooks.push_back(&*boundary);
  }
  const SimReport rep = run(cfg, hooks);
  const BinnedStationary sol = solve_binned(model);
  CrossCheck out;
  out.solver_beta = sol.pi_beta;
  for (int k = 1; k <= n; ++k) {
    const double frac = rep.measured_time > 0 ? rep.collector.best_bid_time[ix(k)] / rep.measured_time : 0.0;
    out.simulated_beta.push_back(frac);
    out.max_error = std::max(out.max_error, std::abs(frac - sol.pi_beta[ix(k)]));
  }
  return out;
}

}  // namespace lobkin::binned
