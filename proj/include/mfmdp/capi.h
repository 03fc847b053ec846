#ifndef MFMDP_CAPI_H
#define MFMDP_CAPI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Shared-library interface for the mean-field MDP toolkit. Every entry point
 * takes a JSON run configuration and hands back a freshly allocated summary
 * JSON string; artifacts (CSV tables, study directories) are written under
 * the configuration's output directory.
 *
 * Return codes: 0 success; 1 failure (inspect mfmdp_last_error_name);
 * 2 hard model-assumption violation (nonnegativity or row sums).
 */

#define MFMDP_OK 0
#define MFMDP_ERR 1
#define MFMDP_ERR_ASSUMPTION 2

const char* mfmdp_version(void);

/* Stable error-class name and human-readable message of the most recent
 * failure on this thread; empty strings if the last call succeeded. The
 * returned pointers stay valid until the next mfmdp_* call on the thread. */
const char* mfmdp_last_error_name(void);
const char* mfmdp_last_error_message(void);

/* Frees strings returned through out parameters. */
void mfmdp_string_free(char* s);

/* Fills defaults and normalizes a run configuration without executing it. */
int mfmdp_resolve_config(const char* config_json, const char* command, char** out_resolved);

int mfmdp_validate(const char* config_json, char** out_summary);
int mfmdp_simulate(const char* config_json, char** out_summary);
int mfmdp_exact(const char* config_json, char** out_summary);
int mfmdp_limit(const char* config_json, char** out_summary);
int mfmdp_optimize(const char* config_json, char** out_summary);
int mfmdp_study(const char* config_json, char** out_summary);
int mfmdp_replicate_figures(const char* config_json, char** out_summary);

/* Opaque model handle for embedding. */
typedef struct mfmdp_model mfmdp_model;

/* params_json: JSON object of parameter overrides (may be NULL or "{}"). */
int mfmdp_model_create(const char* name, const char* params_json, mfmdp_model** out);
void mfmdp_model_free(mfmdp_model* model);

/* Assumption report as JSON; returns MFMDP_ERR_ASSUMPTION when a hard check
 * fails (the report is still produced). */
int mfmdp_model_validate(const mfmdp_model* model, char** out_report_json);

/* States, action grids, parameters, horizon. */
int mfmdp_model_info(const mfmdp_model* model, char** out_info_json);

#ifdef __cplusplus
}
#endif

#endif /* MFMDP_CAPI_H */
