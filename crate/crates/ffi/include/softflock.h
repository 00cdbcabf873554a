#ifndef SOFTFLOCK_H
#define SOFTFLOCK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every fallible function.
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_UTF8 = 2,
  SF_STATUS_CONFIG = 3,
  SF_STATUS_SCENARIO_VIOLATION = 4,
  SF_STATUS_INVALID_COMMAND = 5,
  SF_STATUS_CONTRACT_VIOLATION = 6,
  SF_STATUS_BUFFER_TOO_SMALL = 7,
  SF_STATUS_PANIC = 8,
  SF_STATUS_INTERNAL = 9,
} SfStatus;

// Opaque simulation handle.
typedef struct SfSimulation SfSimulation;

// One agent as seen from C.
typedef struct SfAgent {
  double x;
  double y;
  double heading;
} SfAgent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` as a NUL-terminated
// string, truncating if needed. Returns the buffer size required to hold the
// whole message including the terminator, or 0 when there is no message.
//
// # Safety
// `buf` must be null or point to at least `len` writable bytes.
size_t sf_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *sf_version(void);

// Builds a simulation from a JSON run config. The config's control mode is
// ignored: the caller chooses a control for each step.
//
// # Safety
// `config_json` must be a valid NUL-terminated string and `out` a valid
// pointer. On success `*out` owns a handle that must be released with
// [`sf_simulation_free`].
enum SfStatus sf_simulation_new(const char *config_json, struct SfSimulation **out);

// Releases a handle. Null is accepted and ignored.
//
// # Safety
// `sim` must be null or a handle from [`sf_simulation_new`] not yet freed.
void sf_simulation_free(struct SfSimulation *sim);

// Current tick, or 0 for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
uint64_t sf_simulation_tick(const struct SfSimulation *sim);

// Number of ordinary agents, or 0 for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
size_t sf_simulation_agent_count(const struct SfSimulation *sim);

// Copies agents 1..=n into `buf`. `*written` receives the agent count; when
// `len` is smaller than that, nothing is copied and `BufferTooSmall` is returned.
//
// # Safety
// `buf` must point to `len` writable `SfAgent` slots (it may be null when
// `len` is 0) and `written` must be valid.
enum SfStatus sf_simulation_agents(const struct SfSimulation *sim,
                                   struct SfAgent *buf,
                                   size_t len,
                                   size_t *written);

// Writes the shill into `*shill` and sets `*present`; `*shill` is untouched
// when there is no shill.
//
// # Safety
// All pointers must be valid.
enum SfStatus sf_simulation_shill(const struct SfSimulation *sim,
                                  struct SfAgent *shill,
                                  bool *present);

// Spread of the current headings, `pi - min heading`.
//
// # Safety
// All pointers must be valid.
enum SfStatus sf_simulation_delta(const struct SfSimulation *sim, double *out);

// Advances one tick keeping whatever shill is in place.
//
// # Safety
// `sim` must be a live handle.
enum SfStatus sf_simulation_step(struct SfSimulation *sim);

// Removes the shill; later steps run the free flock.
//
// # Safety
// `sim` must be a live handle.
enum SfStatus sf_simulation_clear_shill(struct SfSimulation *sim);

// Advances one tick with the shill placed by the u_beta law.
//
// # Safety
// `sim` must be a live handle.
enum SfStatus sf_simulation_step_ubeta(struct SfSimulation *sim, double beta);

// Advances one tick with a manually placed shill.
//
// # Safety
// `sim` must be a live handle.
enum SfStatus sf_simulation_step_manual(struct SfSimulation *sim,
                                        double x,
                                        double y,
                                        double heading);

// Writes eta(k) for a flock of `n` into `*out`.
//
// # Safety
// `out` must be valid.
enum SfStatus sf_eta(size_t k, size_t n, double beta, double epsilon, double *out);

// Writes the n-tick decrease bound eta(n) into `*out`.
//
// # Safety
// `out` must be valid.
enum SfStatus sf_delta_bound(size_t n, double beta, double epsilon, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOFTFLOCK_H */
