#ifndef VANAUTH_H
#define VANAUTH_H

/* C interface to the node-authentication simulator.
 *
 * Every entry point returns a status code; out-parameters are written only
 * on VANAUTH_OK. Strings returned by accessors belong to the object that
 * produced them and stay valid until that object is freed. Error details
 * for the most recent failing call are kept per thread and can be read
 * with vanauth_last_error().
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vanauth_status {
    VANAUTH_OK = 0,
    VANAUTH_ERR_INTERNAL = 1,     /* defect in the library, not the input */
    VANAUTH_ERR_CONFIG = 2,       /* unusable scenario text or file */
    VANAUTH_ERR_INVARIANT = 3,    /* a simulation self-check failed */
    VANAUTH_ERR_CORRUPT_TRACE = 4,/* trace file fails its integrity checks */
    VANAUTH_ERR_BAD_ARGUMENT = 5  /* null pointer or out-of-domain argument */
} vanauth_status;

typedef struct vanauth_scenario vanauth_scenario;
typedef struct vanauth_report vanauth_report;

const char* vanauth_version(void);

/* Message for the most recent failure on the calling thread, empty after
 * a success. The pointer stays valid until the thread's next API call. */
const char* vanauth_last_error(void);

/* --- scenarios --------------------------------------------------------- */

vanauth_status vanauth_scenario_parse(const char* text, vanauth_scenario** out);
vanauth_status vanauth_scenario_load(const char* path, vanauth_scenario** out);

/* Overrides applied after loading, ahead of vanauth_run. */
vanauth_status vanauth_scenario_set_seed(vanauth_scenario* sc, uint64_t seed);
vanauth_status vanauth_scenario_set_variant(vanauth_scenario* sc, const char* variant);

uint64_t vanauth_scenario_seed(const vanauth_scenario* sc);
const char* vanauth_scenario_variant(const vanauth_scenario* sc);

void vanauth_scenario_free(vanauth_scenario* sc);

/* --- running and replaying --------------------------------------------- */

/* Runs the scenario to completion. The report carries the event trace
 * (NDJSON), the folded metrics as JSON, and the metrics as a text table. */
vanauth_status vanauth_run(const vanauth_scenario* sc, vanauth_report** out);

/* Re-derives the metrics from a previously written trace. The report's
 * trace accessor returns the empty string. */
vanauth_status vanauth_replay(const char* trace_text, vanauth_report** out);
vanauth_status vanauth_replay_file(const char* path, vanauth_report** out);

/* Measures identification cost, anonymity-set sizes, and key-collision
 * rates for a key pool, without running a road simulation. */
vanauth_status vanauth_keytree_bench(const uint32_t* branching, size_t levels,
                                     uint32_t keyring_k, uint32_t population,
                                     uint64_t trials, uint64_t seed,
                                     vanauth_report** out);

/* --- reports ------------------------------------------------------------ */

const char* vanauth_report_trace(const vanauth_report* r);
const char* vanauth_report_json(const vanauth_report* r);
const char* vanauth_report_table(const vanauth_report* r);

void vanauth_report_free(vanauth_report* r);

#ifdef __cplusplus
}
#endif

#endif /* VANAUTH_H */
