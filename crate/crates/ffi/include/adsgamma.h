#ifndef ADSGAMMA_H
#define ADSGAMMA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdsgStatus {
  ADSG_STATUS_OK = 0,
  ADSG_STATUS_DOMAIN = 1,
  ADSG_STATUS_INTERNAL = 2,
  ADSG_STATUS_UNSUPPORTED_RANGE = 3,
  ADSG_STATUS_CHART = 4,
  ADSG_STATUS_POLE = 5,
  ADSG_STATUS_ASSUMPTION = 6,
  ADSG_STATUS_IO = 7,
  ADSG_STATUS_PARSE = 8,
  ADSG_STATUS_NULL_POINTER = 9,
  ADSG_STATUS_UTF8 = 10,
  ADSG_STATUS_PANIC = 11,
} AdsgStatus;

/**
 * Opaque sequence family.
 */
typedef struct AdsgFamily AdsgFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the library.
 */
const char *adsg_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void adsg_string_free(char *s);

/**
 * Builds a preset family by name (`double_exp`, `gueritaud_kassel`, `log_slow`).
 *
 * # Safety
 * `name` must be a valid C string and `out` a valid pointer.
 */
enum AdsgStatus adsg_family_preset(const char *name, struct AdsgFamily **out);

/**
 * Loads a family definition file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum AdsgStatus adsg_family_load(const char *path, struct AdsgFamily **out);

/**
 * # Safety
 * `fam` must come from this library and not be freed twice.
 */
void adsg_family_free(struct AdsgFamily *fam);

/**
 * Default `ν` of the family.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdsgStatus adsg_family_nu(const struct AdsgFamily *fam, uint64_t *out);

/**
 * `(a1, a2, r, R)` at `k` as signs and natural logs of magnitudes.
 *
 * # Safety
 * `signs` and `logmags` must each point to four writable elements.
 */
enum AdsgStatus adsg_family_values(const struct AdsgFamily *fam,
                                   uint64_t k,
                                   int8_t *signs,
                                   double *logmags);

/**
 * Whether the ping-pong assumptions hold on `[nu, k_max]`; the first bad index or 0.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdsgStatus adsg_check_assumptions(const struct AdsgFamily *fam,
                                       uint64_t nu,
                                       uint64_t k_max,
                                       bool *ok,
                                       uint64_t *first_violation);

/**
 * Empirical `ε̂` over the box `[nu, k_max]`, lengths up to `max_len`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdsgStatus adsg_estimate_epsilon(const struct AdsgFamily *fam,
                                      uint64_t nu,
                                      uint64_t k_max,
                                      uint32_t max_len,
                                      double *out);

/**
 * Orbit count `N(x, R)` for the base point `x = (a, b; c, d)`.
 *
 * `max_len = 0` with `k_max = 0` selects the certified limits. `report_json`
 * may be null; otherwise it receives the full report, freed with [`adsg_string_free`].
 *
 * # Safety
 * `base` must point to four elements; other pointers must be valid or null where allowed.
 */
enum AdsgStatus adsg_count_orbit(const struct AdsgFamily *fam,
                                 uint64_t nu,
                                 const double *base,
                                 double radius,
                                 uint64_t k_max,
                                 uint32_t max_len,
                                 bool prune,
                                 uint64_t *count,
                                 bool *certified,
                                 char **report_json);

/**
 * Number of single-generator witnesses `k ≥ nu` with `‖(α_k⁻¹, β_k⁻¹)E‖ ≤ R`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum AdsgStatus adsg_witness_count(const struct AdsgFamily *fam,
                                   uint64_t nu,
                                   double radius,
                                   uint64_t *out);

/**
 * Tuples of positive integers with sum at most `r`, `1 ≤ r ≤ 24`.
 *
 * # Safety
 * `out` must be valid.
 */
enum AdsgStatus adsg_tuple_count(uint32_t r, uint64_t *out);

/**
 * `‖g‖` for `g = (a, b; c, d)`.
 *
 * # Safety
 * `out` must be valid.
 */
enum AdsgStatus adsg_pseudo_norm(double a, double b, double c, double d, double *out);

/**
 * `ψ_m(x) = (x1 + i x2)^{−m}`.
 *
 * # Safety
 * `re` and `im` must be valid.
 */
enum AdsgStatus adsg_psi(uint32_t m,
                         double x1,
                         double x2,
                         double x3,
                         double x4,
                         double *re,
                         double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADSGAMMA_H */
