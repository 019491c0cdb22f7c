#ifndef PERMSTAT_H
#define PERMSTAT_H

/* Generated by cbindgen from src/lib.rs; edits will be overwritten. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every function.
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  // A required pointer was null.
  PS_STATUS_NULL_POINTER = 1,
  // Invalid configuration or argument (bad alpha, too few permutations, ...).
  PS_STATUS_INVALID_ARGUMENT = 2,
  // The data cannot be tested (too few observations, zero variance, ...).
  PS_STATUS_DATA_ERROR = 3,
  // An index was outside the result.
  PS_STATUS_OUT_OF_RANGE = 4,
  // Internal failure; the message has details.
  PS_STATUS_INTERNAL = 5,
} PsStatus;

typedef enum PsTail {
  PS_TAIL_TWO = 0,
  PS_TAIL_RIGHT = 1,
  PS_TAIL_LEFT = 2,
} PsTail;

typedef enum PsCorrection {
  PS_CORRECTION_MAX = 0,
  PS_CORRECTION_BONFERRONI = 1,
  PS_CORRECTION_HOLM = 2,
  PS_CORRECTION_NONE = 3,
} PsCorrection;

typedef enum PsVar {
  PS_VAR_EQUAL = 0,
  PS_VAR_UNEQUAL = 1,
} PsVar;

typedef enum PsCorrKind {
  PS_CORR_KIND_PEARSON = 0,
  PS_CORR_KIND_SPEARMAN = 1,
  PS_CORR_KIND_RANKIT = 2,
} PsCorrKind;

typedef enum PsEffectKind {
  PS_EFFECT_KIND_COHEN = 0,
  PS_EFFECT_KIND_GLASS = 1,
  PS_EFFECT_KIND_CLIFF = 2,
  PS_EFFECT_KIND_MEAN_DIFF = 3,
  PS_EFFECT_KIND_MEDIAN_DIFF = 4,
} PsEffectKind;

// Opaque effect-size result.
typedef struct PsEffect PsEffect;

// Opaque test result.
typedef struct PsResult PsResult;

// Test settings. Fill with `ps_config_default` and adjust.
typedef struct PsConfig {
  size_t n_perm;
  uint64_t seed;
  enum PsTail tail;
  enum PsCorrection correction;
  enum PsVar var_assumption;
  double alpha;
  uint64_t exact_threshold;
} PsConfig;

// Bootstrap settings. Fill with `ps_boot_config_default` and adjust.
typedef struct PsBootConfig {
  size_t n_boot;
  uint64_t seed;
  double alpha;
  bool paired;
  bool bias_correct;
  enum PsVar var_assumption;
  // True scales Glass' delta by X's standard deviation instead of Y's.
  bool control_is_x;
} PsBootConfig;

// One variable of a test result. When `tested` is false every number is NaN.
typedef struct PsVarStat {
  bool tested;
  double statistic;
  double p;
  double p_uncorrected;
  double ci_lower;
  double ci_upper;
  double estimate;
  // NaN when the statistic has no standard error.
  double se;
} PsVarStat;

typedef struct PsEffectStat {
  bool estimated;
  double effect;
  double ci_lower;
  double ci_upper;
  double correction_factor;
} PsEffectStat;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ps_version(void);

// Message for the last failure on this thread, or NULL. The pointer stays
// valid until the next call into the library from the same thread.
const char *ps_last_error_message(void);

// Writes the library defaults into `*cfg`.
//
// # Safety
// `cfg` must be null or point to writable memory for one `PsConfig`.
enum PsStatus ps_config_default(struct PsConfig *cfg);

// # Safety
// `cfg` must be null or point to writable memory for one `PsBootConfig`.
enum PsStatus ps_boot_config_default(struct PsBootConfig *cfg);

// One-sample t-test of `x` against `mu`, or the paired test of `x - y`
// when `y` is non-null. `mu` holds 0, 1 or `n_vars` values.
//
// # Safety
// `x` (and `y` if non-null) must hold `n_obs * n_vars` doubles, `mu` must
// hold `n_mu` doubles, `cfg` must be null or valid and `out` writable.
enum PsStatus ps_ttest(const double *x,
                       const double *y,
                       size_t n_obs,
                       size_t n_vars,
                       const double *mu,
                       size_t n_mu,
                       const struct PsConfig *cfg,
                       struct PsResult **out);

// One-sample z-test with known `sigma` (1 or `n_vars` values).
//
// # Safety
// As for `ps_ttest`; `sigma` must hold `n_sigma` doubles.
enum PsStatus ps_ztest(const double *x,
                       size_t n_obs,
                       size_t n_vars,
                       const double *mu,
                       size_t n_mu,
                       const double *sigma,
                       size_t n_sigma,
                       const struct PsConfig *cfg,
                       struct PsResult **out);

// Two-sample t-test; `x` is `nx` by `n_vars`, `y` is `ny` by `n_vars`.
//
// # Safety
// Pointers must be valid for the stated sizes; `cfg` may be null.
enum PsStatus ps_ttest2(const double *x,
                        size_t nx,
                        const double *y,
                        size_t ny,
                        size_t n_vars,
                        const struct PsConfig *cfg,
                        struct PsResult **out);

// Two-sample variance-ratio test.
//
// # Safety
// As for `ps_ttest2`.
enum PsStatus ps_vartest2(const double *x,
                          size_t nx,
                          const double *y,
                          size_t ny,
                          size_t n_vars,
                          const struct PsConfig *cfg,
                          struct PsResult **out);

// Correlation test: column `v` of `x` against column `v` of `y`, or every
// pair of `x`'s columns when `y` is null.
//
// # Safety
// `x` (and `y` if non-null) must hold `n_obs * n_vars` doubles.
enum PsStatus ps_corr(const double *x,
                      const double *y,
                      size_t n_obs,
                      size_t n_vars,
                      enum PsCorrKind kind,
                      const struct PsConfig *cfg,
                      struct PsResult **out);

// One-way ANOVA; `groups[i]` is the group id of `values[i]`.
//
// # Safety
// `values` and `groups` must each hold `n` elements.
enum PsStatus ps_anova1(const double *values,
                        const uint32_t *groups,
                        size_t n,
                        const struct PsConfig *cfg,
                        struct PsResult **out);

// Number of reported variables (or variable pairs).
//
// # Safety
// `r` must be null or a live handle.
size_t ps_result_len(const struct PsResult *r);

// Copies variable `index` into `*out`.
//
// # Safety
// `r` must be a live handle and `out` writable.
enum PsStatus ps_result_get(const struct PsResult *r, size_t index, struct PsVarStat *out);

// The result as a JSON document. Free it with `ps_string_free`.
//
// # Safety
// `r` must be a live handle and `out` writable.
enum PsStatus ps_result_to_json(const struct PsResult *r, char **out);

// # Safety
// `r` must be null or a handle not yet freed.
void ps_result_free(struct PsResult *r);

// Bootstrapped effect sizes. `y` may be null for one-sample measures.
//
// # Safety
// `x` must hold `nx * n_vars` doubles, `y` (if non-null) `ny * n_vars`;
// `cfg` may be null; `out` must be writable.
enum PsStatus ps_effectsize(const double *x,
                            size_t nx,
                            const double *y,
                            size_t ny,
                            size_t n_vars,
                            enum PsEffectKind kind,
                            const struct PsBootConfig *cfg,
                            struct PsEffect **out);

// # Safety
// `r` must be null or a live handle.
size_t ps_effect_len(const struct PsEffect *r);

// # Safety
// `r` must be a live handle and `out` writable.
enum PsStatus ps_effect_get(const struct PsEffect *r, size_t index, struct PsEffectStat *out);

// # Safety
// `r` must be a live handle and `out` writable.
enum PsStatus ps_effect_to_json(const struct PsEffect *r, char **out);

// # Safety
// `r` must be null or a handle not yet freed.
void ps_effect_free(struct PsEffect *r);

// Frees a string returned by this library.
//
// # Safety
// `s` must be null or a string from `ps_*_to_json` not yet freed.
void ps_string_free(char *s);

// Copies the last error into `buf` (always NUL-terminated when `len > 0`)
// and returns the full message length, or 0 when there is none.
//
// # Safety
// `buf` must be null or writable for `len` bytes.
size_t ps_last_error_copy(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERMSTAT_H */
