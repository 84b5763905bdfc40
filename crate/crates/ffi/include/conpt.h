#ifndef CONPT_H
#define CONPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CONPT_RULES_CLASSICAL 0

#define CONPT_RULES_CONPT 1

#define CONPT_LATTICE_SQUARE 0

#define CONPT_LATTICE_HONEYCOMB 1

#define CONPT_LATTICE_TRIANGULAR 2

typedef enum ConptStatus {
  CONPT_STATUS_OK = 0,
  CONPT_STATUS_NULL_POINTER = 1,
  CONPT_STATUS_INVALID_ARGUMENT = 2,
  CONPT_STATUS_PARSE_ERROR = 3,
  CONPT_STATUS_SOLVER_ERROR = 4,
  CONPT_STATUS_PANIC = 5,
} ConptStatus;

/**
 * Opaque network handle.
 */
typedef struct ConptNetwork ConptNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread. Valid until the
 * next call into the library from the same thread; never null.
 */
const char *conpt_last_error(void);

const char *conpt_version(void);

/**
 * New empty network. Free with `conpt_network_free`.
 */
struct ConptNetwork *conpt_network_new(void);

/**
 * # Safety
 * `net` must be null or a handle from this library not yet freed.
 */
void conpt_network_free(struct ConptNetwork *net);

/**
 * # Safety
 * `net` must be a live handle.
 */
enum ConptStatus conpt_network_add_node(struct ConptNetwork *net, uint32_t id);

/**
 * Adds a link of weight `theta` (radians, in [0, π/4]).
 *
 * # Safety
 * `net` must be a live handle.
 */
enum ConptStatus conpt_network_add_link(struct ConptNetwork *net,
                                        uint32_t a,
                                        uint32_t b,
                                        double theta);

/**
 * # Safety
 * `net` must be a live handle; `a`/`b` must point to `na`/`nb` ids.
 */
enum ConptStatus conpt_network_set_boundaries(struct ConptNetwork *net,
                                              const uint32_t *a,
                                              size_t na,
                                              const uint32_t *b,
                                              size_t nb);

/**
 * # Safety
 * `net` must be a live handle; outputs must be valid pointers.
 */
enum ConptStatus conpt_network_size(const struct ConptNetwork *net, size_t *nodes, size_t *links);

/**
 * Parses the line-oriented network text format into a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum ConptStatus conpt_network_parse(const char *text, struct ConptNetwork **out);

/**
 * Uniform `L × L` lattice with left and right boundaries.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ConptStatus conpt_lattice_new(uint32_t kind,
                                   size_t size,
                                   double theta,
                                   struct ConptNetwork **out);

/**
 * Sponge-crossing measure (p or c) by consecutive star-mesh reduction,
 * averaged over `runs` random orders.
 *
 * # Safety
 * `net` must be a live handle; `mean` and `std` valid pointers.
 */
enum ConptStatus conpt_sponge_crossing(const struct ConptNetwork *net,
                                       uint32_t rule_code,
                                       size_t runs,
                                       uint64_t seed,
                                       double *mean,
                                       double *std);

/**
 * Exact classical sponge-crossing probability (at most 24 links).
 *
 * # Safety
 * `net` must be a live handle; `out` a valid pointer.
 */
enum ConptStatus conpt_brute_force(const struct ConptNetwork *net, double *out);

/**
 * Classical Monte Carlo sponge-crossing estimate.
 *
 * # Safety
 * `net` must be a live handle; outputs valid pointers.
 */
enum ConptStatus conpt_monte_carlo(const struct ConptNetwork *net,
                                   uint64_t trials,
                                   uint64_t seed,
                                   double *estimate,
                                   double *stderr);

/**
 * Infinite Bethe lattice value for degree `k`, retained fraction `f` and
 * link measure `w`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ConptStatus conpt_bethe_fixed_point(size_t k,
                                         double f,
                                         uint32_t rule_code,
                                         double w,
                                         double *out);

/**
 * Combines `n` link measures in series (`parallel == 0`) or in parallel.
 *
 * # Safety
 * `measures` must point to `n` values; `out` a valid pointer.
 */
enum ConptStatus conpt_compose(uint32_t rule_code,
                               int32_t parallel,
                               const double *measures,
                               size_t n,
                               double *out);

/**
 * Writes the network in the text format into `buf` (capacity `cap`,
 * NUL-terminated). `needed` receives the byte count including the NUL;
 * call with `cap = 0` to size the buffer.
 *
 * # Safety
 * `net` must be a live handle; `buf` must hold `cap` bytes; `needed` valid.
 */
enum ConptStatus conpt_network_save(const struct ConptNetwork *net,
                                    char *buf,
                                    size_t cap,
                                    size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONPT_H */
