#ifndef BINAUTH_H
#define BINAUTH_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes of every fallible call.
typedef enum BinauthStatus {
  BINAUTH_STATUS_OK = 0,
  BINAUTH_STATUS_NULL_POINTER = 1,
  BINAUTH_STATUS_INVALID_ARGUMENT = 2,
  BINAUTH_STATUS_GUARD_EXCEEDED = 3,
  BINAUTH_STATUS_EMPTY_BIN = 4,
  BINAUTH_STATUS_IO_ERROR = 5,
} BinauthStatus;

// Opaque enrollment code handle.
typedef struct BinauthCode BinauthCode;

// Opaque decoding metric handle.
typedef struct BinauthMetric BinauthMetric;

// Opaque source model handle.
typedef struct BinauthModel BinauthModel;

// Exponent value plus grid metadata (C-layout mirror of the library's
// result type; `value` is `+inf`-capable).
typedef struct BinauthExponent {
  double value;
  uint32_t grid_resolution;
  bool refined;
  bool converged;
} BinauthExponent;

// Estimate triple: point estimate and Wilson 95% bounds.
typedef struct BinauthEstimate {
  double p_hat;
  double lo;
  double hi;
} BinauthEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Human-readable name of a status code (static storage).
const char *binauth_status_name(enum BinauthStatus status);

// Create a doubly-symmetric-binary-source model.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum BinauthStatus binauth_model_dsbs(double crossover, struct BinauthModel **out);

// Create a model from a row-major joint table of `x_alphabet * y_alphabet`
// probabilities.
//
// # Safety
// `probs` must point to `x_alphabet * y_alphabet` readable doubles and
// `out` to a handle slot.
enum BinauthStatus binauth_model_from_joint(size_t x_alphabet,
                                            size_t y_alphabet,
                                            const double *probs,
                                            struct BinauthModel **out);

// # Safety
// `model` must be a handle from a `binauth_model_*` constructor, not yet
// freed; NULL is a no-op.
void binauth_model_free(struct BinauthModel *model);

// Matched tempered-likelihood metric with the model's own channel.
//
// # Safety
// `model` must be a live model handle, `out` a handle slot.
enum BinauthStatus binauth_metric_tempered(const struct BinauthModel *model,
                                           double beta,
                                           struct BinauthMetric **out);

// Mismatched metric with an explicit channel: `channel` holds
// `y_alphabet` rows of `x_alphabet` probabilities `P'(x|y)`.
//
// # Safety
// `channel` must point to `x_alphabet * y_alphabet` readable doubles and
// `out` to a handle slot.
enum BinauthStatus binauth_metric_mismatched(size_t x_alphabet,
                                             size_t y_alphabet,
                                             const double *channel,
                                             double beta,
                                             struct BinauthMetric **out);

// Minimum-entropy metric.
//
// # Safety
// `out` must be a valid handle slot.
enum BinauthStatus binauth_metric_min_entropy(double beta, struct BinauthMetric **out);

// β → ∞ limit of an existing metric (the base handle is copied, not
// consumed).
//
// # Safety
// `base` must be a live metric handle, `out` a handle slot.
enum BinauthStatus binauth_metric_map_limit(const struct BinauthMetric *base,
                                            struct BinauthMetric **out);

// # Safety
// `metric` must be a live metric handle; NULL is a no-op.
void binauth_metric_free(struct BinauthMetric *metric);

// Draw a random-binning enrollment code.
//
// # Safety
// `out` must be a valid handle slot.
enum BinauthStatus binauth_code_sample(uint32_t n,
                                       uint32_t x_alphabet,
                                       double r_s,
                                       double r_w,
                                       uint64_t seed,
                                       struct BinauthCode **out);

// # Safety
// `code` must be a live code handle; NULL is a no-op.
void binauth_code_free(struct BinauthCode *code);

// Number of key values of a code (0 on NULL).
//
// # Safety
// `code` must be a live code handle or NULL.
uint64_t binauth_code_num_keys(const struct BinauthCode *code);

// Number of helper values of a code (0 on NULL).
//
// # Safety
// `code` must be a live code handle or NULL.
uint64_t binauth_code_num_helpers(const struct BinauthCode *code);

// Enroll a source vector of `n` symbols; writes the key and helper
// indices.
//
// # Safety
// `symbols` must point to `len` readable bytes; `key_out` and
// `helper_out` must be writable.
enum BinauthStatus binauth_code_enroll(const struct BinauthCode *code,
                                       const uint8_t *symbols,
                                       size_t len,
                                       uint32_t *key_out,
                                       uint32_t *helper_out);

// Write a code to the binary dump format at `path` (NUL-terminated UTF-8).
//
// # Safety
// `code` must be live and `path` a NUL-terminated string.
enum BinauthStatus binauth_code_write(const struct BinauthCode *code, const char *path);

// Read a code from the binary dump format.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a handle slot.
enum BinauthStatus binauth_code_read(const char *path, struct BinauthCode **out);

// Sample the stochastic decoder once for `(y, w)`.
//
// # Safety
// All handles must be live; `y` must point to `y_len` readable bytes and
// `key_out` must be writable.
enum BinauthStatus binauth_stochastic_decode(const struct BinauthCode *code,
                                             const struct BinauthModel *model,
                                             const struct BinauthMetric *metric,
                                             const uint8_t *y,
                                             size_t y_len,
                                             uint32_t helper,
                                             uint64_t stream_seed,
                                             uint32_t *key_out);

// Exact false-reject probability of one code.
//
// # Safety
// All handles must be live and `out` writable.
enum BinauthStatus binauth_exact_fr(const struct BinauthCode *code,
                                    const struct BinauthModel *model,
                                    const struct BinauthMetric *metric,
                                    double *out);

// Exact key–helper leakage `I(S;W)` of one code, in nats.
//
// # Safety
// Handles must be live and `out` writable.
enum BinauthStatus binauth_exact_leakage(const struct BinauthCode *code,
                                         const struct BinauthModel *model,
                                         double *out);

// Random-coding false-reject exponent at helper rate `r_w`.
//
// # Safety
// Handles must be live and `out` writable.
enum BinauthStatus binauth_fr_random_exponent(const struct BinauthModel *model,
                                              const struct BinauthMetric *metric,
                                              double r_w,
                                              uint32_t grid_resolution,
                                              struct BinauthExponent *out);

// MAP-decoder false-reject exponent.
//
// # Safety
// `model` must be live and `out` writable.
enum BinauthStatus binauth_fr_map_exponent(const struct BinauthModel *model,
                                           double r_w,
                                           uint32_t grid_resolution,
                                           struct BinauthExponent *out);

// False-accept exponent, types form.
//
// # Safety
// `model` must be live and `out` writable.
enum BinauthStatus binauth_fa_exponent_types(const struct BinauthModel *model,
                                             double r_w,
                                             double r_s,
                                             uint32_t grid_resolution,
                                             struct BinauthExponent *out);

// False-accept exponent, Gallager form.
//
// # Safety
// `model` must be live and `out` writable.
enum BinauthStatus binauth_fa_exponent_gallager(const struct BinauthModel *model,
                                                double r_w,
                                                double r_s,
                                                uint32_t grid_resolution,
                                                struct BinauthExponent *out);

// Secrecy exponent at total rate `rate = r_s + r_w`.
//
// # Safety
// `model` must be live and `out` writable.
enum BinauthStatus binauth_secrecy_exponent(const struct BinauthModel *model,
                                            double rate,
                                            uint32_t grid_resolution,
                                            struct BinauthExponent *out);

// Expurgated false-reject exponent for the model's source type.
//
// # Safety
// Handles must be live and `out` writable.
enum BinauthStatus binauth_fr_expurgated_exponent(const struct BinauthModel *model,
                                                  const struct BinauthMetric *metric,
                                                  double r_w,
                                                  uint32_t grid_resolution,
                                                  struct BinauthExponent *out);

// Monte Carlo false-reject estimate (Wilson 95% interval).
//
// # Safety
// Handles must be live and `out` writable.
enum BinauthStatus binauth_estimate_fr(const struct BinauthModel *model,
                                       const struct BinauthMetric *metric,
                                       uint32_t n,
                                       double r_s,
                                       double r_w,
                                       uint32_t num_codes,
                                       uint64_t trials_per_code,
                                       uint64_t master_seed,
                                       struct BinauthEstimate *out);

// Monte Carlo attack-success (false-accept) estimate.
//
// # Safety
// `model` must be live and `out` writable.
enum BinauthStatus binauth_estimate_fa(const struct BinauthModel *model,
                                       uint32_t n,
                                       double r_s,
                                       double r_w,
                                       uint32_t num_codes,
                                       uint64_t trials_per_code,
                                       uint64_t master_seed,
                                       struct BinauthEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BINAUTH_H */
