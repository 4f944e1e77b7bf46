#include "lobkin/lobkin.h"

#include <exception>
#include <new>
#include <string>

#include "lobkin/analytic.hpp"
#include "lobkin/book.hpp"
#include "lobkin/error.hpp"
#include "lobkin/experiment.hpp"
#include "lobkin/strategies.hpp"
#include "lobkin/version.hpp"

struct lobkin_book {
  lobkin::BookState state;
  lobkin::PriceEquivalence eq = lobkin::PriceEquivalence::identity();
};

struct lobkin_experiment {
  lobkin::experiment::RunOptions options;
  lobkin::experiment::RunSummary summary;
};

namespace {

thread_local std::string g_last_error;

lobkin_status status_of(lobkin::ErrorCode c) {
  using lobkin::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return LOBKIN_ERROR_INVALID_ARGUMENT;
    case ErrorCode::InvalidDensity: return LOBKIN_ERROR_INVALID_DENSITY;
    case ErrorCode::NonConvergence: return LOBKIN_ERROR_NON_CONVERGENCE;
    case ErrorCode::SupercriticalLambda: return LOBKIN_ERROR_SUPERCRITICAL_LAMBDA;
    case ErrorCode::SupercriticalRates: return LOBKIN_ERROR_SUPERCRITICAL_RATES;
    case ErrorCode::SingularSystem: return LOBKIN_ERROR_SINGULAR_SYSTEM;
    case ErrorCode::Config: return LOBKIN_ERROR_CONFIG;
    case ErrorCode::Io: return LOBKIN_ERROR_IO;
  }
  return LOBKIN_ERROR_INTERNAL;
}

lobkin_status fail(lobkin_status s, const char* msg) {
  g_last_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
lobkin_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return LOBKIN_OK;
  } catch (const lobkin::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LOBKIN_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LOBKIN_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(LOBKIN_ERROR_INTERNAL, "unknown error");
  }
}

bool valid_side(lobkin_side s) { return s == LOBKIN_BID || s == LOBKIN_ASK; }
lobkin::Side to_side(lobkin_side s) { return s == LOBKIN_BID ? lobkin::Side::Bid : lobkin::Side::Ask; }

}  // namespace

extern "C" {

const char* lobkin_version(void) { return lobkin::kVersion; }

const char* lobkin_status_string(lobkin_status status) {
  switch (status) {
    case LOBKIN_OK: return "ok";
    case LOBKIN_ERROR_INVALID_ARGUMENT: return "invalid argument";
    case LOBKIN_ERROR_INVALID_DENSITY: return "invalid density";
    case LOBKIN_ERROR_NON_CONVERGENCE: return "non-convergence";
    case LOBKIN_ERROR_SUPERCRITICAL_LAMBDA: return "supercritical market-order fraction";
    case LOBKIN_ERROR_SUPERCRITICAL_RATES: return "supercritical rates";
    case LOBKIN_ERROR_SINGULAR_SYSTEM: return "singular system";
    case LOBKIN_ERROR_CONFIG: return "config error";
    case LOBKIN_ERROR_IO: return "i/o error";
    case LOBKIN_ERROR_INVALID_HANDLE: return "invalid handle";
    case LOBKIN_ERROR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* lobkin_last_error(void) { return g_last_error.c_str(); }

lobkin_status lobkin_book_new(int n_bins, lobkin_book** out_book) {
  if (!out_book) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "out_book is null");
  if (n_bins < 0) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "n_bins must be nonnegative");
  return guarded([&] {
    auto* b = new lobkin_book;
    if (n_bins > 0) b->eq = lobkin::PriceEquivalence::binned(n_bins);
    *out_book = b;
  });
}

void lobkin_book_free(lobkin_book* book) { delete book; }

lobkin_status lobkin_book_arrival(lobkin_book* book, lobkin_side side, double price, lobkin_event* out_event) {
  if (!book) return fail(LOBKIN_ERROR_INVALID_HANDLE, "book is null");
  if (!valid_side(side)) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "unknown side");
  return guarded([&] {
    const auto e = lobkin::apply_arrival_inplace(book->state, to_side(side), price, book->eq);
    if (out_event) {
      out_event->kind = e.is_trade() ? LOBKIN_TRADE
                        : e.kind == lobkin::BookEvent::Kind::BidJoined ? LOBKIN_BID_JOINED
                                                                        : LOBKIN_ASK_JOINED;
      out_event->price = e.price;
      out_event->bid_price = e.bid_price;
      out_event->ask_price = e.ask_price;
      out_event->aggressor = e.aggressor == lobkin::Side::Bid ? LOBKIN_BID : LOBKIN_ASK;
    }
  });
}

lobkin_status lobkin_book_place_infinite(lobkin_book* book, lobkin_side side, double price) {
  if (!book) return fail(LOBKIN_ERROR_INVALID_HANDLE, "book is null");
  if (!valid_side(side)) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "unknown side");
  return guarded([&] { book->state.place(to_side(side), price, lobkin::Depth::infinite(), 0, book->eq); });
}

lobkin_status lobkin_book_best(const lobkin_book* book, lobkin_side side, double* out_price, int* out_present) {
  if (!book) return fail(LOBKIN_ERROR_INVALID_HANDLE, "book is null");
  if (!valid_side(side) || !out_present) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "bad side or null output");
  return guarded([&] {
    const auto best = side == LOBKIN_BID ? book->state.best_bid() : book->state.best_ask();
    *out_present = best.has_value();
    if (best && out_price) *out_price = *best;
  });
}

lobkin_status lobkin_book_depth(const lobkin_book* book, lobkin_side side, uint64_t* out_depth) {
  if (!book) return fail(LOBKIN_ERROR_INVALID_HANDLE, "book is null");
  if (!valid_side(side) || !out_depth) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "bad side or null output");
  return guarded([&] { *out_depth = book->state.finite_depth(to_side(side)); });
}

lobkin_status lobkin_book_levels(const lobkin_book* book, lobkin_side side, size_t* out_levels) {
  if (!book) return fail(LOBKIN_ERROR_INVALID_HANDLE, "book is null");
  if (!valid_side(side) || !out_levels) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "bad side or null output");
  return guarded([&] {
    *out_levels = side == LOBKIN_BID ? book->state.bids().size() : book->state.asks().size();
  });
}

lobkin_status lobkin_solve_w(double* out_w) {
  if (!out_w) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] { *out_w = lobkin::analytic::solve_w(); });
}

lobkin_status lobkin_kappa_uniform(double* out_kappa) {
  if (!out_kappa) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] { *out_kappa = lobkin::analytic::kappa_uniform(); });
}

lobkin_status lobkin_kappa_market_orders(double lambda, double* out_kappa) {
  if (!out_kappa) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] { *out_kappa = lobkin::analytic::kappa_market_orders(lambda); });
}

lobkin_status lobkin_uniform_varpi_b(double x, double* out_value) {
  if (!out_value) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] { *out_value = lobkin::analytic::uniform_varpi_b(x); });
}

lobkin_status lobkin_optimize_mm(double* out_p, double* out_rate) {
  if (!out_p || !out_rate) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] {
    const auto o = lobkin::strategy::optimize_mm();
    *out_p = o.p;
    *out_rate = o.rate;
  });
}

lobkin_status lobkin_optimize_snipe(double* out_q, double* out_rate) {
  if (!out_q || !out_rate) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] {
    const auto o = lobkin::strategy::optimize_snipe();
    *out_q = o.p;
    *out_rate = o.rate;
  });
}

lobkin_status lobkin_optimize_mixed(double* out_P, double* out_p, double* out_rate) {
  if (!out_P || !out_p || !out_rate) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] {
    const auto o = lobkin::strategy::optimize_mixed();
    *out_P = o.P;
    *out_p = o.p;
    *out_rate = o.rate;
  });
}

lobkin_status lobkin_stackelberg(double* out_P, double* out_q, double* out_mm_rate, double* out_sniper_rate) {
  if (!out_P || !out_q || !out_mm_rate || !out_sniper_rate) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] {
    const auto s = lobkin::strategy::stackelberg_equilibrium();
    *out_P = s.P;
    *out_q = s.q;
    *out_mm_rate = s.mm_rate;
    *out_sniper_rate = s.sniper_rate;
  });
}

lobkin_status lobkin_nash_sniping(int n_traders, double* out_combined_rate, double* out_per_trader_rate) {
  if (!out_combined_rate || !out_per_trader_rate) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null output");
  return guarded([&] {
    const auto n = lobkin::strategy::nash_sniping(n_traders);
    *out_combined_rate = n.combined_rate;
    *out_per_trader_rate = n.per_trader_rate;
  });
}

lobkin_status lobkin_experiment_new(const char* command, const char* config_json, lobkin_experiment** out_experiment) {
  if (!command || !config_json || !out_experiment) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto* e = new lobkin_experiment;
    e->options.command = command;
    e->options.config_json = config_json;
    *out_experiment = e;
  });
}

void lobkin_experiment_free(lobkin_experiment* experiment) { delete experiment; }

lobkin_status lobkin_experiment_set_seed(lobkin_experiment* experiment, uint64_t seed) {
  if (!experiment) return fail(LOBKIN_ERROR_INVALID_HANDLE, "experiment is null");
  experiment->options.seed = seed;
  g_last_error.clear();
  return LOBKIN_OK;
}

lobkin_status lobkin_experiment_set_sweep(lobkin_experiment* experiment, int n_seeds) {
  if (!experiment) return fail(LOBKIN_ERROR_INVALID_HANDLE, "experiment is null");
  if (n_seeds < 0) return fail(LOBKIN_ERROR_INVALID_ARGUMENT, "sweep count must be nonnegative");
  experiment->options.sweep = n_seeds;
  g_last_error.clear();
  return LOBKIN_OK;
}

lobkin_status lobkin_experiment_run(lobkin_experiment* experiment, const char* out_dir) {
  if (!experiment) return fail(LOBKIN_ERROR_INVALID_HANDLE, "experiment is null");
  return guarded([&] {
    experiment->summary = {};
    experiment->options.out_dir = out_dir ? out_dir : "";
    experiment->summary = lobkin::experiment::run_experiment(experiment->options);
  });
}

size_t lobkin_experiment_output_count(const lobkin_experiment* experiment) {
  return experiment ? experiment->summary.outputs.size() : 0;
}

const char* lobkin_experiment_output(const lobkin_experiment* experiment, size_t index) {
  if (!experiment || index >= experiment->summary.outputs.size()) return nullptr;
  return experiment->summary.outputs[index].c_str();
}

const char* lobkin_experiment_config_hash(const lobkin_experiment* experiment) {
  return experiment ? experiment->summary.config_hash.c_str() : nullptr;
}

}  // extern "C"
