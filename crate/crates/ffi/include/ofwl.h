/* C interface to the opto-electronic fixed-weight learning simulator. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdint.h>
#include <stddef.h>
#include <stdbool.h>

/**
 * Result of every fallible call.
 */
typedef enum OfwlStatus {
  OFWL_STATUS_OK = 0,
  /**
   * A precondition on an argument failed.
   */
  OFWL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Sub-network training missed its target error.
   */
  OFWL_STATUS_TRAINING_FAILED = 2,
  /**
   * A wiring plan produced an ill-formed network.
   */
  OFWL_STATUS_COMPOSITION_FAILED = 3,
  /**
   * A netlist violated its structural invariants.
   */
  OFWL_STATUS_INVALID_NETLIST = 4,
  /**
   * JSON parsing or serialization failed.
   */
  OFWL_STATUS_PARSE_FAILED = 5,
  /**
   * A required pointer was null.
   */
  OFWL_STATUS_NULL_POINTER = 6,
  /**
   * The callee panicked; state may be stale but memory is intact.
   */
  OFWL_STATUS_PANICKED = 7,
} OfwlStatus;

/**
 * Which built-in network to construct.
 */
typedef enum OfwlNetwork {
  OFWL_NETWORK_SIGMA_AND = 0,
  OFWL_NETWORK_UMULT = 1,
  OFWL_NETWORK_PLANTRAN = 2,
  OFWL_NETWORK_BOOLEAN = 3,
} OfwlNetwork;

/**
 * Opaque recurrent netlist handle.
 */
typedef struct OfwlNetlist OfwlNetlist;

/**
 * Opaque execution context: a netlist plus its delay-line state.
 */
typedef struct OfwlRunner OfwlRunner;

/**
 * Message for the most recent failure on this thread, or null if none.
 */
const char *ofwl_last_error_message(void);

/**
 * Library version as a static string; never freed.
 */
const char *ofwl_version(void);

/**
 * Release a string allocated by this library.
 *
 * # Safety
 * `s` must have come from an `ofwl_*` call that documents this free
 * function, and must not be used afterwards. Null is ignored.
 */
void ofwl_string_free(char *s);

/**
 * Theoretical optical throughput in operations per second.
 *
 * # Safety
 * `out` must point to writable memory for one f64.
 */
enum OfwlStatus ofwl_throughput(uint64_t inputs, uint64_t outputs, double delta_x_m, double *out);

/**
 * Logistic squashing function.
 *
 * # Safety
 * `out` must point to writable memory for one f64.
 */
enum OfwlStatus ofwl_squash(double s, double *out);

/**
 * Snap a signal in [0,1] to the uniform 2^bits-level grid (bits = 0 is
 * identity).
 *
 * # Safety
 * `out` must point to writable memory for one f64.
 */
enum OfwlStatus ofwl_quantize(double x, uint8_t bits, double *out);

/**
 * Encode an activation as a stochastic pulse train, writing `np` slice
 * values (each 0.0 or 1.0) into `out_slices`.
 *
 * # Safety
 * `out_slices` must point to writable memory for `np` f64 values.
 */
enum OfwlStatus ofwl_pulse_encode(double value,
                                  size_t np,
                                  uint64_t seed,
                                  uint64_t lane,
                                  double *out_slices);

/**
 * Decode a pulse train (mean of its slices).
 *
 * # Safety
 * `slices` must point to `np` readable f64 values in [0,1]; `out` to one
 * writable f64.
 */
enum OfwlStatus ofwl_pulse_decode(const double *slices, size_t np, double *out);

/**
 * Slice-wise AND product of two equal-length trains, decoded to a value.
 *
 * # Safety
 * `a` and `b` must each point to `np` readable f64 values in [0,1]; `out`
 * to one writable f64.
 */
enum OfwlStatus ofwl_pulse_and_decode(const double *a, const double *b, size_t np, double *out);

/**
 * Build one of the reproduced networks. `eta` and `train_seed` of zero pick
 * the calibrated defaults.
 *
 * # Safety
 * `out` must point to writable memory for one handle pointer.
 */
enum OfwlStatus ofwl_netlist_build(enum OfwlNetwork network,
                                   double eta,
                                   uint64_t train_seed,
                                   struct OfwlNetlist **out);

/**
 * Parse a netlist from JSON text.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum OfwlStatus ofwl_netlist_from_json(const char *json, struct OfwlNetlist **out);

/**
 * Serialize a netlist to JSON; free the result with `ofwl_string_free`.
 *
 * # Safety
 * `net` must be a live handle; `out` must be writable.
 */
enum OfwlStatus ofwl_netlist_to_json(const struct OfwlNetlist *net, char **out);

/**
 * Structural counts: layers, neurons, synapses, external input arity,
 * output arity. Null out-pointers are skipped.
 *
 * # Safety
 * `net` must be a live handle; non-null out-pointers must be writable.
 */
enum OfwlStatus ofwl_netlist_counts(const struct OfwlNetlist *net,
                                    size_t *layers,
                                    size_t *neurons,
                                    size_t *synapses,
                                    size_t *inputs,
                                    size_t *outputs);

/**
 * Check every structural invariant; `OFWL_STATUS_INVALID_NETLIST` carries
 * the diagnostics in the error message.
 *
 * # Safety
 * `net` must be a live handle.
 */
enum OfwlStatus ofwl_netlist_validate(const struct OfwlNetlist *net);

/**
 * Release a netlist handle.
 *
 * # Safety
 * `net` must have come from this library and not been freed before. Null
 * is ignored.
 */
void ofwl_netlist_free(struct OfwlNetlist *net);

/**
 * Create an execution context over a copy of the netlist. `np` is the
 * pulse-train length, `bits` the signal quantization (0 ideal), `sigma`
 * the detector noise level; `exact` selects the reference float route.
 *
 * # Safety
 * `net` must be a live handle; `out` must be writable.
 */
enum OfwlStatus ofwl_runner_new(const struct OfwlNetlist *net,
                                size_t np,
                                uint64_t seed,
                                uint8_t bits,
                                double sigma,
                                bool exact,
                                struct OfwlRunner **out);

/**
 * Advance one macro-step. `inputs` supplies `n_inputs` external values in
 * [0,1); `outputs` receives `n_outputs` activations.
 *
 * # Safety
 * `runner` must be a live handle; `inputs` must hold `n_inputs` readable
 * f64 values and `outputs` room for `n_outputs`.
 */
enum OfwlStatus ofwl_runner_step(struct OfwlRunner *runner,
                                 const double *inputs,
                                 size_t n_inputs,
                                 double *outputs,
                                 size_t n_outputs);

/**
 * Reset delay lines to the zero-initialized state.
 *
 * # Safety
 * `runner` must be a live handle.
 */
enum OfwlStatus ofwl_runner_reset(struct OfwlRunner *runner);

/**
 * Release a runner handle.
 *
 * # Safety
 * `runner` must have come from `ofwl_runner_new` and not been freed. Null
 * is ignored.
 */
void ofwl_runner_free(struct OfwlRunner *runner);

/**
 * Run one full experiment from an `ExperimentConfig` JSON document and
 * return the run record (config echo, task, per-step MSE series, detected
 * convergence step, post-convergence MSE) as JSON. Free the result with
 * `ofwl_string_free`.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string; `out` writable.
 */
enum OfwlStatus ofwl_run_experiment_json(const char *config_json, char **out);
