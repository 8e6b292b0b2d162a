#ifndef SKEWSTAB_H
#define SKEWSTAB_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum SkewStatus {
  SKEW_STATUS_OK = 0,
  SKEW_STATUS_NULL_POINTER = 1,
  SKEW_STATUS_TIME_ORDER = 2,
  SKEW_STATUS_NON_FINITE = 3,
  SKEW_STATUS_DIMENSION = 4,
  SKEW_STATUS_INVALID_PARAMS = 5,
  SKEW_STATUS_CONVERGENCE = 6,
  SKEW_STATUS_INVALID_UTF8 = 7,
  SKEW_STATUS_INTERNAL = 99,
} SkewStatus;

/*
 Opaque handle to a built system.
 */
typedef struct SkewSystem SkewSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Builds a gallery system. `params_json` is a JSON object of parameter
 overrides, or null for the defaults.

 # Safety
 `name` must be a NUL-terminated string, `params_json` null or
 NUL-terminated, and `out` a valid pointer.
 */
enum SkewStatus skewstab_system_new(const char *name,
                                    const char *params_json,
                                    struct SkewSystem **out);

/*
 Builds a declarative diagonal system from its JSON description.

 # Safety
 `json` must be NUL-terminated and `out` a valid pointer.
 */
enum SkewStatus skewstab_custom_system_new(const char *json, struct SkewSystem **out);

/*
 Releases a system. Null is ignored.

 # Safety
 `sys` must come from this library and not be used afterwards.
 */
void skewstab_system_free(struct SkewSystem *sys);

/*
 # Safety
 `sys` must be a live handle and `out` a valid pointer.
 */
enum SkewStatus skewstab_system_dimension(const struct SkewSystem *sys, uintptr_t *out);

/*
 Writes `Phi(t, s, x) v` to `out`. `x` is the state's shift parameter or
 point, depending on the system's semiflow; `v` and `out` hold `len`
 doubles.

 # Safety
 Pointers must be valid for `len` doubles.
 */
enum SkewStatus skewstab_apply_cocycle(const struct SkewSystem *sys,
                                       double t,
                                       double s,
                                       double x,
                                       const double *v,
                                       uintptr_t len,
                                       double *out);

/*
 Writes `Phi(t, s, x)^T v` to `out`.

 # Safety
 Pointers must be valid for `len` doubles.
 */
enum SkewStatus skewstab_apply_adjoint(const struct SkewSystem *sys,
                                       double t,
                                       double s,
                                       double x,
                                       const double *v,
                                       uintptr_t len,
                                       double *out);

/*
 Induced norm of `Phi(t, s, x)` in the system's norm.

 # Safety
 `sys` must be a live handle and `out` a valid pointer.
 */
enum SkewStatus skewstab_operator_norm(const struct SkewSystem *sys,
                                       double t,
                                       double s,
                                       double x,
                                       double *out);

/*
 New handle for the system with cocycle `e^{-alpha (t-s)} Phi(t, s, x)`.

 # Safety
 `sys` must be a live handle and `out` a valid pointer.
 */
enum SkewStatus skewstab_shift_cocycle(const struct SkewSystem *sys,
                                       double alpha,
                                       struct SkewSystem **out);

/*
 Runs both criterion panels and writes the JSON report to `out`.
 `config_json` takes the same keys as a CLI config file; null means
 defaults. `exit_code`, when not null, receives the CLI exit code the
 report implies.

 # Safety
 `sys` must be a live handle, `config_json` null or NUL-terminated, `out`
 valid, and `exit_code` null or valid.
 */
enum SkewStatus skewstab_classify_json(const struct SkewSystem *sys,
                                       const char *config_json,
                                       char **out,
                                       int32_t *exit_code);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void skewstab_string_free(char *s);

/*
 Message for the last failed call on this thread, or null.
 */
const char *skewstab_last_error(void);

const char *skewstab_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SKEWSTAB_H */
