#ifndef SNMONO_H
#define SNMONO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum SnmonoStatus {
  SNMONO_STATUS_OK = 0,
  SNMONO_STATUS_NULL_POINTER = 1,
  SNMONO_STATUS_INVALID_ARGUMENT = 2,
  SNMONO_STATUS_PARSE = 3,
  SNMONO_STATUS_DIMENSION_MISMATCH = 4,
  SNMONO_STATUS_NUMERIC = 5,
  SNMONO_STATUS_PANIC = 6,
} SnmonoStatus;

// Block norm selector for [`snmono_space_product`].
typedef enum SnmonoNorm {
  SNMONO_NORM_EUCLIDEAN = 0,
  SNMONO_NORM_ELL1 = 1,
  SNMONO_NORM_ELL_INF = 2,
} SnmonoNorm;

// Opaque subset of an SN space.
typedef struct SnmonoSet SnmonoSet;

// Opaque SN space.
typedef struct SnmonoSpace SnmonoSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *snmono_last_error(void);

// Library version, a static string.
const char *snmono_version(void);

// Parses a space from JSON `{"dim", "norm", "L"}`.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum SnmonoStatus snmono_space_from_json(const char *json, struct SnmonoSpace **out);

// `E × E*` over `R^n` with the given block norm.
//
// # Safety
// `out` must be a valid pointer.
enum SnmonoStatus snmono_space_product(size_t n, enum SnmonoNorm norm, struct SnmonoSpace **out);

// # Safety
// `space` must come from this library or be null.
void snmono_space_free(struct SnmonoSpace *space);

// # Safety
// `space` and `out` must be valid.
enum SnmonoStatus snmono_space_dim(const struct SnmonoSpace *space, size_t *out);

// Writes 1 to `ok` when `L` is symmetric and nonexpansive, else 0.
//
// # Safety
// `space` and `ok` must be valid.
enum SnmonoStatus snmono_space_validate(const struct SnmonoSpace *space, int32_t *ok);

// `q_L(b)`.
//
// # Safety
// `b` must point to `len` doubles; `space` and `out` must be valid.
enum SnmonoStatus snmono_space_q(const struct SnmonoSpace *space,
                                 const double *b,
                                 size_t len,
                                 double *out);

// `r_L(b)`.
//
// # Safety
// `b` must point to `len` doubles; `space` and `out` must be valid.
enum SnmonoStatus snmono_space_r(const struct SnmonoSpace *space,
                                 const double *b,
                                 size_t len,
                                 double *out);

// Parses a set from JSON; `space` is used when the JSON has no `space` key
// and may be null otherwise.
//
// # Safety
// `json` must be nul-terminated; `space` valid or null; `out` valid.
enum SnmonoStatus snmono_set_from_json(const char *json,
                                       const struct SnmonoSpace *space,
                                       struct SnmonoSet **out);

// Graph of the identity on `R^n`.
//
// # Safety
// `out` must be valid.
enum SnmonoStatus snmono_set_identity_graph(size_t n, struct SnmonoSet **out);

// # Safety
// `set` must come from this library or be null.
void snmono_set_free(struct SnmonoSet *set);

// Dimension of the ambient space.
//
// # Safety
// `set` and `out` must be valid.
enum SnmonoStatus snmono_set_dim(const struct SnmonoSet *set, size_t *out);

// `inf_{a∈A} r_L(a - c)` (best value found); the minimizer is written to
// `minimizer` (length `len`) when it is not null.
//
// # Safety
// `c` must point to `len` doubles, `minimizer` to `len` writable doubles or be null.
enum SnmonoStatus snmono_set_density_gap(const struct SnmonoSet *set,
                                         const double *c,
                                         size_t len,
                                         uint64_t seed,
                                         double *gap,
                                         double *minimizer);

// Density gaps at `count` probes stored row by row (`count × dim`). Writes
// 1 to `quasidense` when every gap is at most `tol`, and the largest gap.
//
// # Safety
// `probes` must point to `count * dim` doubles; out pointers must be valid.
enum SnmonoStatus snmono_set_certify(const struct SnmonoSet *set,
                                     const double *probes,
                                     size_t count,
                                     size_t dim,
                                     double tol,
                                     uint64_t seed,
                                     int32_t *quasidense,
                                     double *max_gap);

// `Φ_A(b)`.
//
// # Safety
// `b` must point to `len` doubles; `set` and `out` must be valid.
enum SnmonoStatus snmono_set_phi(const struct SnmonoSet *set,
                                 const double *b,
                                 size_t len,
                                 double *out);

// Runs the command line with `argc` arguments (the first is the program
// name) and writes its exit code. Output goes to stdout or `--out`.
//
// # Safety
// `argv` must point to `argc` nul-terminated strings.
enum SnmonoStatus snmono_cli_run(size_t argc, const char *const *argv, int32_t *code);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library or be null.
void snmono_string_free(char *s);

// Serializes a set to JSON; release with [`snmono_string_free`].
//
// # Safety
// `set` and `out` must be valid.
enum SnmonoStatus snmono_set_to_json(const struct SnmonoSet *set, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNMONO_H */
