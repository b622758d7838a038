#ifndef SPURIOUSNESS_H
#define SPURIOUSNESS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SpurStatus {
  SPUR_STATUS_OK = 0,
  SPUR_STATUS_NULL_POINTER = 1,
  SPUR_STATUS_INVALID_ARGUMENT = 2,
  SPUR_STATUS_INVALID_DISTRIBUTION = 3,
  SPUR_STATUS_IO = 4,
  SPUR_STATUS_PARSE = 5,
  SPUR_STATUS_SOLVER = 6,
  SPUR_STATUS_PANIC = 7,
} SpurStatus;

// Which source the unique information is attributed to.
typedef enum SpurSource {
  // `Uni(Y; F | B)`.
  SPUR_SOURCE_CORE = 0,
  // `Uni(Y; B | F)`.
  SPUR_SOURCE_SPURIOUS = 1,
} SpurSource;

// Opaque joint pmf over `(Y, F, B)`.
typedef struct SpurJoint SpurJoint;

// Decomposition terms in bits; negative round-off is clamped to 0.
typedef struct SpurPid {
  double uni_b_given_f;
  double uni_f_given_b;
  double redundancy;
  double synergy;
  double total_mi;
  // Largest duality gap of the two solves.
  double gap;
  size_t iterations;
  bool converged;
} SpurPid;

typedef struct SpurBlackwell {
  bool sufficient;
  // ℓ1 residual of the best garbling found.
  double residual;
} SpurBlackwell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *spur_version(void);

// Message of the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *spur_last_error(void);

// Builds a joint from `mass[(y·nf + f)·nb + b]` with `dims = {ny, nf, nb}`.
// Mass off by more than round-off from 1 is rejected.
//
// # Safety
// `dims` must point to 3 values, `mass` to `len` values and `out` to
// writable storage for one pointer.
enum SpurStatus spur_joint_new(const size_t *dims,
                               const double *mass,
                               size_t len,
                               struct SpurJoint **out);

// Loads a joint from a `y,f,b,p` CSV file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SpurStatus spur_joint_load(const char *path, struct SpurJoint **out);

// Releases a joint; null is ignored.
//
// # Safety
// `joint` must come from this library and not be used afterwards.
void spur_joint_free(struct SpurJoint *joint);

// Writes `{ny, nf, nb}`.
//
// # Safety
// `joint` must be a live handle and `dims` writable for 3 values.
enum SpurStatus spur_joint_dims(const struct SpurJoint *joint, size_t *dims);

// Unique information of `source` in bits. A solve that stops before the
// gap reaches `tolerance` is reported as `SpurStatus::Solver`.
//
// # Safety
// `joint` must be a live handle and `bits` writable.
enum SpurStatus spur_unique_information(const struct SpurJoint *joint,
                                        enum SpurSource source,
                                        double tolerance,
                                        double *bits);

// Four-term decomposition in bits. Non-convergence is reported through
// `SpurPid::converged`, not as an error.
//
// # Safety
// `joint` must be a live handle and `out` writable.
enum SpurStatus spur_pid_decompose(const struct SpurJoint *joint,
                                   double tolerance,
                                   struct SpurPid *out);

// Decides whether `F` is Blackwell sufficient for `B`. When `garbling` is
// non-null the best channel found is written row-major as `nf × nb` values;
// `garbling_len` must then be at least `nf·nb`.
//
// # Safety
// `joint` must be a live handle, `out` writable, and `garbling` either null
// or writable for `garbling_len` values.
enum SpurStatus spur_blackwell_sufficient(const struct SpurJoint *joint,
                                          double tolerance,
                                          struct SpurBlackwell *out,
                                          double *garbling,
                                          size_t garbling_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPURIOUSNESS_H */
