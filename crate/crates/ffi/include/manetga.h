#ifndef MANETGA_H
#define MANETGA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MgStatus {
  MG_STATUS_OK = 0,
  MG_STATUS_NULL_ARGUMENT = 1,
  MG_STATUS_INVALID_UTF8 = 2,
  // Scenario text rejected; the message names the line.
  MG_STATUS_SCENARIO = 3,
  // Simulation or optimization failed.
  MG_STATUS_SIMULATION = 4,
  MG_STATUS_INVALID_ARGUMENT = 5,
  // A Rust panic was caught at the boundary.
  MG_STATUS_INTERNAL = 6,
} MgStatus;

// Optimized weights with routed primary and backup paths.
typedef struct MgOptimizeResult MgOptimizeResult;

// Outcome of one simulation run.
typedef struct MgReport MgReport;

// Parsed scenario.
typedef struct MgScenario MgScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into this library on the same thread.
const char *mg_last_error(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void mg_string_free(char *s);

// Parse NUL-terminated scenario text.
//
// # Safety
// `text` must be a valid C string; `out` must be writable.
enum MgStatus mg_scenario_parse(const char *text, struct MgScenario **out);

// # Safety
// `sc` must be null or a live handle from [`mg_scenario_parse`].
void mg_scenario_free(struct MgScenario *sc);

// Override the simulation seed and the optimizer seed.
//
// # Safety
// `sc` must be a live handle.
enum MgStatus mg_scenario_set_seed(struct MgScenario *sc, uint64_t seed);

// Switch all enabled defenses on or off.
//
// # Safety
// `sc` must be a live handle.
enum MgStatus mg_scenario_set_defense(struct MgScenario *sc, bool enabled);

// Canonical text form of a scenario.
//
// # Safety
// `sc` must be a live handle; `out` must be writable.
enum MgStatus mg_scenario_render(const struct MgScenario *sc, char **out);

// Run the simulation.
//
// # Safety
// `sc` must be a live handle; `out` must be writable.
enum MgStatus mg_simulate(const struct MgScenario *sc, struct MgReport **out);

// # Safety
// `r` must be null or a live handle from [`mg_simulate`].
void mg_report_free(struct MgReport *r);

// Delivered / (delivered + dropped); NaN for a null handle.
//
// # Safety
// `r` must be null or a live handle.
double mg_report_delivery_ratio(const struct MgReport *r);

// Blacklist insertions over the run; 0 for a null handle.
//
// # Safety
// `r` must be null or a live handle.
uint64_t mg_report_blacklist_events(const struct MgReport *r);

// # Safety
// `r` must be a live handle; `out` must be writable.
enum MgStatus mg_report_summary_csv(const struct MgReport *r, char **out);

// # Safety
// `r` must be a live handle; `out` must be writable.
enum MgStatus mg_report_steps_csv(const struct MgReport *r, char **out);

// # Safety
// `r` must be a live handle; `out` must be writable.
enum MgStatus mg_report_events_log(const struct MgReport *r, char **out);

// Optimize link weights over the scenario's initial topology.
//
// # Safety
// `sc` must be a live handle; `out` must be writable.
enum MgStatus mg_optimize(const struct MgScenario *sc, struct MgOptimizeResult **out);

// # Safety
// `r` must be null or a live handle from [`mg_optimize`].
void mg_optimize_free(struct MgOptimizeResult *r);

// Best fitness found; NaN for a null handle.
//
// # Safety
// `r` must be null or a live handle.
double mg_optimize_fitness(const struct MgOptimizeResult *r);

// Copy up to `cap` weights, in canonical link order, into `buf`.
// Returns the total number of weights; call with `cap == 0` to size `buf`.
//
// # Safety
// `r` must be null or a live handle; `buf` must hold `cap` values.
size_t mg_optimize_weights(const struct MgOptimizeResult *r, uint32_t *buf, size_t cap);

// # Safety
// `r` must be a live handle; `out` must be writable.
enum MgStatus mg_optimize_weights_csv(const struct MgOptimizeResult *r, char **out);

// # Safety
// `r` must be a live handle; `out` must be writable.
enum MgStatus mg_optimize_history_csv(const struct MgOptimizeResult *r, char **out);

// # Safety
// `r` must be a live handle; `out` must be writable.
enum MgStatus mg_optimize_paths_csv(const struct MgOptimizeResult *r, char **out);

// Fitness of a caller-supplied weight vector, one weight per link in
// canonical order. Weights must be at least 1.
//
// # Safety
// `sc` must be a live handle; `weights` must hold `len` values;
// `fitness` must be writable.
enum MgStatus mg_evaluate_weights(const struct MgScenario *sc,
                                  const uint32_t *weights,
                                  size_t len,
                                  double *fitness);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANETGA_H */
