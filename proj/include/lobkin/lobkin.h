#ifndef LOBKIN_H
#define LOBKIN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LOBKIN_API __declspec(dllexport)
#else
#define LOBKIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    LOBKIN_OK = 0,
    LOBKIN_ERROR_INVALID_ARGUMENT = 1,
    LOBKIN_ERROR_INVALID_DENSITY = 2,
    LOBKIN_ERROR_NON_CONVERGENCE = 3,
    LOBKIN_ERROR_SUPERCRITICAL_LAMBDA = 4,
    LOBKIN_ERROR_SUPERCRITICAL_RATES = 5,
    LOBKIN_ERROR_SINGULAR_SYSTEM = 6,
    LOBKIN_ERROR_CONFIG = 7,
    LOBKIN_ERROR_IO = 8,
    LOBKIN_ERROR_INVALID_HANDLE = 9,
    LOBKIN_ERROR_INTERNAL = 99
} lobkin_status;

typedef enum { LOBKIN_BID = 0, LOBKIN_ASK = 1 } lobkin_side;

typedef enum { LOBKIN_BID_JOINED = 0, LOBKIN_ASK_JOINED = 1, LOBKIN_TRADE = 2 } lobkin_event_kind;

typedef struct {
    lobkin_event_kind kind;
    double price;      /* joined price, or the arriving price of a trade */
    double bid_price;  /* trades only */
    double ask_price;  /* trades only */
    lobkin_side aggressor;
} lobkin_event;

typedef struct lobkin_book lobkin_book;
typedef struct lobkin_experiment lobkin_experiment;

LOBKIN_API const char* lobkin_version(void);
LOBKIN_API const char* lobkin_status_string(lobkin_status status);
/* Message of the last failed call on this thread; empty after a success. */
LOBKIN_API const char* lobkin_last_error(void);

/* Order book. n_bins = 0 selects exact price matching, otherwise prices match by bin. */
LOBKIN_API lobkin_status lobkin_book_new(int n_bins, lobkin_book** out_book);
LOBKIN_API void lobkin_book_free(lobkin_book* book);
LOBKIN_API lobkin_status lobkin_book_arrival(lobkin_book* book, lobkin_side side, double price,
                                             lobkin_event* out_event);
/* Infinite supply at a price; fails if the book would cross. */
LOBKIN_API lobkin_status lobkin_book_place_infinite(lobkin_book* book, lobkin_side side, double price);
/* *out_present is 0 when the side is empty. */
LOBKIN_API lobkin_status lobkin_book_best(const lobkin_book* book, lobkin_side side, double* out_price,
                                          int* out_present);
/* Finite depth on one side; infinite levels are not counted. */
LOBKIN_API lobkin_status lobkin_book_depth(const lobkin_book* book, lobkin_side side, uint64_t* out_depth);
LOBKIN_API lobkin_status lobkin_book_levels(const lobkin_book* book, lobkin_side side, size_t* out_levels);

/* Thresholds and closed forms. */
LOBKIN_API lobkin_status lobkin_solve_w(double* out_w);
LOBKIN_API lobkin_status lobkin_kappa_uniform(double* out_kappa);
LOBKIN_API lobkin_status lobkin_kappa_market_orders(double lambda, double* out_kappa);
LOBKIN_API lobkin_status lobkin_uniform_varpi_b(double x, double* out_value);

/* Strategy optima. */
LOBKIN_API lobkin_status lobkin_optimize_mm(double* out_p, double* out_rate);
LOBKIN_API lobkin_status lobkin_optimize_snipe(double* out_q, double* out_rate);
LOBKIN_API lobkin_status lobkin_optimize_mixed(double* out_P, double* out_p, double* out_rate);
LOBKIN_API lobkin_status lobkin_stackelberg(double* out_P, double* out_q, double* out_mm_rate,
                                            double* out_sniper_rate);
LOBKIN_API lobkin_status lobkin_nash_sniping(int n_traders, double* out_combined_rate, double* out_per_trader_rate);

/* Experiments: command is one of simulate, solve, binned, strategy, equilibrium. */
LOBKIN_API lobkin_status lobkin_experiment_new(const char* command, const char* config_json,
                                               lobkin_experiment** out_experiment);
LOBKIN_API void lobkin_experiment_free(lobkin_experiment* experiment);
LOBKIN_API lobkin_status lobkin_experiment_set_seed(lobkin_experiment* experiment, uint64_t seed);
LOBKIN_API lobkin_status lobkin_experiment_set_sweep(lobkin_experiment* experiment, int n_seeds);
/* out_dir may be NULL to use the config's outputs.dir. */
LOBKIN_API lobkin_status lobkin_experiment_run(lobkin_experiment* experiment, const char* out_dir);
LOBKIN_API size_t lobkin_experiment_output_count(const lobkin_experiment* experiment);
/* NULL when index is out of range; valid until the next run or free. */
LOBKIN_API const char* lobkin_experiment_output(const lobkin_experiment* experiment, size_t index);
LOBKIN_API const char* lobkin_experiment_config_hash(const lobkin_experiment* experiment);

#ifdef __cplusplus
}
#endif

#endif /* LOBKIN_H */
