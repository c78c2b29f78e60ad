#ifndef FRACLAP_H
#define FRACLAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible call.
typedef enum FraclapStatus {
  FRACLAP_STATUS_OK = 0,
  FRACLAP_STATUS_NULL_POINTER = 1,
  FRACLAP_STATUS_INVALID_ARGUMENT = 2,
  FRACLAP_STATUS_DOMAIN_MISMATCH = 3,
  FRACLAP_STATUS_BUFFER_TOO_SMALL = 4,
  FRACLAP_STATUS_NUMERICAL = 5,
  FRACLAP_STATUS_PANIC = 6,
} FraclapStatus;

// Opaque rectangle or interval with its Dirichlet eigenbasis.
typedef struct FraclapDomain FraclapDomain;

// Opaque band-limited field (sine coefficients on a domain).
typedef struct FraclapField FraclapField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *fraclap_last_error(void);

// Creates a `dim`-dimensional box `Π(0, lengths[i])` with mode cutoffs
// `modes[i]` and `nodes[i] >= 2 modes[i]` interior grid nodes per axis.
//
// # Safety
// `lengths`, `modes` and `nodes` must point to `dim` readable values; `out`
// must be writable.
enum FraclapStatus fraclap_domain_new(size_t dim,
                                      const double *lengths,
                                      const size_t *modes,
                                      const size_t *nodes,
                                      struct FraclapDomain **out);

// Releases a domain. NULL is ignored.
//
// # Safety
// `domain` must come from [`fraclap_domain_new`] and not have been freed.
void fraclap_domain_free(struct FraclapDomain *domain);

// Number of sine modes (length of coefficient arrays).
//
// # Safety
// `domain` must be a live handle; `out` must be writable.
enum FraclapStatus fraclap_domain_mode_count(const struct FraclapDomain *domain, size_t *out);

// Number of grid nodes (length of grid arrays).
//
// # Safety
// `domain` must be a live handle; `out` must be writable.
enum FraclapStatus fraclap_domain_grid_len(const struct FraclapDomain *domain, size_t *out);

// Dirichlet eigenvalue `λ_j` for the multi-index `index[0..dim]` (1-based per axis).
//
// # Safety
// `domain` must be a live handle; `index` must point to `dim` values; `out`
// must be writable.
enum FraclapStatus fraclap_domain_eigenvalue(const struct FraclapDomain *domain,
                                             const size_t *index,
                                             size_t dim,
                                             double *out);

// Field from `len` sine coefficients in the domain's mode order.
//
// # Safety
// `domain` must be a live handle; `coeffs` must point to `len` values; `out`
// must be writable.
enum FraclapStatus fraclap_field_new(const struct FraclapDomain *domain,
                                     const double *coeffs,
                                     size_t len,
                                     struct FraclapField **out);

// Seeded random field with coefficient variance `λ_j^{-2}`.
//
// # Safety
// `domain` must be a live handle; `out` must be writable.
enum FraclapStatus fraclap_field_random(const struct FraclapDomain *domain,
                                        uint64_t seed,
                                        uint64_t sample,
                                        struct FraclapField **out);

// Releases a field. NULL is ignored.
//
// # Safety
// `field` must come from a `fraclap_field_*` constructor and not have been freed.
void fraclap_field_free(struct FraclapField *field);

// Copies the sine coefficients into `buf`.
//
// # Safety
// `field` must be a live handle; `buf` must have room for `len` values.
enum FraclapStatus fraclap_field_coeffs(const struct FraclapField *field, double *buf, size_t len);

// Grid values of the field.
//
// # Safety
// `field` must be a live handle; `buf` must have room for `len` values.
enum FraclapStatus fraclap_field_to_grid(const struct FraclapField *field, double *buf, size_t len);

// New field `Λ^s f` (coefficients scaled by `λ_j^{s/2}`).
//
// # Safety
// `field` must be a live handle; `out` must be writable.
enum FraclapStatus fraclap_field_lambda_s(const struct FraclapField *field,
                                          double s,
                                          struct FraclapField **out);

// New field `e^{tΔ} f`, `t >= 0`.
//
// # Safety
// `field` must be a live handle; `out` must be writable.
enum FraclapStatus fraclap_field_heat(const struct FraclapField *field,
                                      double t,
                                      struct FraclapField **out);

// `‖f‖_{s,D} = (Σ λ_j^s f_j²)^{1/2}`.
//
// # Safety
// `field` must be a live handle; `out` must be writable.
enum FraclapStatus fraclap_field_sobolev_norm(const struct FraclapField *field,
                                              double s,
                                              double *out);

// Normalizing constant `c_α = α / Γ(1 - α)` of the heat representation, `0 < α < 1`.
//
// # Safety
// `out` must be writable.
enum FraclapStatus fraclap_c_alpha(double alpha, double *out);

// Grid values of `(-Δ)^α f` through the heat-semigroup quadrature with the
// domain's default time rule.
//
// # Safety
// `field` must be a live handle; `buf` must have room for `len` values.
enum FraclapStatus fraclap_frac_heat_quadrature(const struct FraclapField *field,
                                                double alpha,
                                                double *buf,
                                                size_t len);

// Grid minimum of `Φ'(f) Λ^s f - Λ^s Φ(f)` for `Φ(r) = r²/2` (`power = 2`)
// or `Φ(r) = r^power` (even `power >= 4`), `0 <= s <= 2`.
//
// # Safety
// `field` must be a live handle; `out` must be writable.
enum FraclapStatus fraclap_cordoba_min_defect(const struct FraclapField *field,
                                              uint32_t power,
                                              double s,
                                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACLAP_H */
