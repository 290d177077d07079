#ifndef FACTLAB_H
#define FACTLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_INVALID_MODULUS = 1,
  FL_STATUS_OUT_OF_RANGE = 2,
  FL_STATUS_NO_INVERSE = 3,
  FL_STATUS_PRECONDITION = 4,
  FL_STATUS_DOMAIN = 5,
  FL_STATUS_INCONSISTENCY = 6,
  FL_STATUS_BUDGET = 7,
  FL_STATUS_NOT_REPRESENTABLE = 8,
  FL_STATUS_NULL_POINTER = 9,
  FL_STATUS_BUFFER_TOO_SMALL = 10,
  FL_STATUS_PANIC = 11,
} FlStatus;

// Prime field context.
typedef struct FlFieldCtx FlFieldCtx;

// Immutable set of residues.
typedef struct FlResidueSet FlResidueSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *fl_last_error(void);

// Library version as a static NUL-terminated string.
const char *fl_version(void);

// Creates a context for the odd prime `p < 2^63`.
//
// # Safety
// `out` must be valid for writing one pointer.
enum FlStatus fl_field_new(uint64_t p, struct FlFieldCtx **out);

// # Safety
// `ctx` must be NULL or a handle from [`fl_field_new`] not yet freed.
void fl_field_free(struct FlFieldCtx *ctx);

// The modulus, or 0 for a NULL handle.
//
// # Safety
// `ctx` must be NULL or a live handle.
uint64_t fl_field_modulus(const struct FlFieldCtx *ctx);

// `n! mod p` for `n < p`.
//
// # Safety
// `ctx` must be a live handle and `out` valid for writing.
enum FlStatus fl_factorial(const struct FlFieldCtx *ctx, uint64_t n, uint64_t *out);

// `a^-1 mod p`.
//
// # Safety
// `ctx` must be a live handle and `out` valid for writing.
enum FlStatus fl_mod_inverse(const struct FlFieldCtx *ctx, uint64_t a, uint64_t *out);

// `y! (p-1-y)! mod p`, which is `1` for odd `y` and `p - 1` for even `y`.
//
// # Safety
// `ctx` must be a live handle and `out` valid for writing.
enum FlStatus fl_wilson_pair(const struct FlFieldCtx *ctx, uint64_t y, uint64_t *out);

// `|{1!, 2!, ..., (p-1)!}|`.
//
// # Safety
// `ctx` must be a live handle and `out` valid for writing.
enum FlStatus fl_factorial_residue_count(const struct FlFieldCtx *ctx, uint64_t *out);

// `{m! mod p : l < m <= l + n}` as a new set handle.
//
// # Safety
// `ctx` must be a live handle and `out` valid for writing one pointer.
enum FlStatus fl_factorial_set(const struct FlFieldCtx *ctx,
                               uint64_t l,
                               uint64_t n,
                               struct FlResidueSet **out);

// # Safety
// `set` must be NULL or a handle from this library not yet freed.
void fl_residue_set_free(struct FlResidueSet *set);

// Number of elements, or 0 for a NULL handle.
//
// # Safety
// `set` must be NULL or a live handle.
uint64_t fl_residue_set_len(const struct FlResidueSet *set);

// # Safety
// `set` must be NULL or a live handle.
bool fl_residue_set_contains(const struct FlResidueSet *set, uint64_t v);

// Copies the elements in increasing order into `buf`; `*len` receives the
// element count even when the buffer is too small.
//
// # Safety
// `set` must be a live handle, `buf` valid for `capacity` writes (or NULL
// with `capacity == 0`), and `len` valid for writing.
enum FlStatus fl_residue_set_elements(const struct FlResidueSet *set,
                                      uint64_t *buf,
                                      uintptr_t capacity,
                                      uintptr_t *len);

// `J(P_j, P_k)`, the number of zeros of `phi(P_j, P_k)` over the field,
// where `P_j(x) = (x+1)...(x+j)`.
//
// # Safety
// `ctx` must be a live handle and `out` valid for writing.
enum FlStatus fl_count_falling(const struct FlFieldCtx *ctx, uint64_t j, uint64_t k, uint64_t *out);

// Three arguments `n1, n2, n3` with `n1! n2! n3! = a (mod p)`, written to
// `factors[0..3]`.
//
// # Safety
// `ctx` must be a live handle and `factors` valid for three writes.
enum FlStatus fl_three_factorial(const struct FlFieldCtx *ctx, uint64_t a, uint64_t *factors);

// At most `k` factorial arguments, each `<= bound`, whose factorials
// multiply to `a`; the count goes to `*len`.
//
// # Safety
// `ctx` must be a live handle, `factors` valid for `capacity` writes and
// `len` valid for writing.
enum FlStatus fl_find_representation(const struct FlFieldCtx *ctx,
                                     uint64_t a,
                                     uintptr_t k,
                                     uint64_t bound,
                                     uint64_t *factors,
                                     uintptr_t capacity,
                                     uintptr_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACTLAB_H */
