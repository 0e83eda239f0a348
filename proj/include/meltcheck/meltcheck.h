// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

/* C interface to the meltcheck metamorphic testing pipeline.
 *
 * Strings returned through `char**` out-parameters are heap allocated and
 * must be released with mc_free(). On failure a function returns a nonzero
 * mc_status and mc_last_error() describes the failure as a JSON object
 * {"code": "...", "message": "..."} for the calling thread.
 */
#ifndef MELTCHECK_MELTCHECK_H
#define MELTCHECK_MELTCHECK_H

#include <stdint.h>

#if defined(MELTCHECK_BUILDING)
#define MC_API __attribute__((visibility("default")))
#else
#define MC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mc_status {
  MC_OK = 0,
  MC_ERR_INVALID_ARGUMENT = 1,
  MC_ERR_IO = 2,
  MC_ERR_CORPUS = 3,
  MC_ERR_BACKEND = 4,
  MC_ERR_ADAPTER = 5,
  MC_ERR_OVERFLOW = 6,
  MC_ERR_NOT_FOUND = 7,
  MC_ERR_CONFLICT = 8,
  MC_ERR_INTERNAL = 9
} mc_status;

typedef struct mc_context mc_context;
typedef struct mc_server mc_server;

MC_API const char* mc_version(void);
MC_API const char* mc_status_name(mc_status status);
MC_API void mc_free(char* p);

/* JSON error of the last failed call on this thread, or NULL. */
MC_API const char* mc_last_error(void);

/* "trace", "debug", "info", "warn", "error" or "off". Logs go to stderr. */
MC_API mc_status mc_set_log_level(const char* level);

/* `config_json` is a run configuration document; relative paths in it are
 * resolved against `base_dir` (may be NULL for the working directory). */
MC_API mc_status mc_context_create(const char* config_json, const char* base_dir, mc_context** out);
MC_API void mc_context_destroy(mc_context* ctx);
/* Effective configuration after defaults, as JSON. */
MC_API mc_status mc_context_config(mc_context* ctx, char** config_json);

/* Pipeline stages. Each writes a JSON summary to *summary_json. */
MC_API mc_status mc_plan(mc_context* ctx, char** summary_json);
MC_API mc_status mc_melt(mc_context* ctx, char** summary_json);
MC_API mc_status mc_caption(mc_context* ctx, char** summary_json);
MC_API mc_status mc_check(mc_context* ctx, char** summary_json);
MC_API mc_status mc_audit_gt(mc_context* ctx, char** summary_json);
MC_API mc_status mc_run(mc_context* ctx, char** summary_json);
/* `verdicts_path` may be NULL to use the output directory's verdicts.jsonl. */
MC_API mc_status mc_precision(mc_context* ctx, const char* verdicts_path, char** stats_json);

/* COCO instances (+ optional captions, may be NULL) -> corpus manifest. */
MC_API mc_status mc_import_coco(const char* instances_json, const char* captions_json,
                                const char* image_dir, const char* manifest_out, char** report_json);

/* Pair count for m meltable objects; max_depth <= 0 means unlimited. */
MC_API mc_status mc_count_pairs(uint32_t m, int32_t max_depth, uint64_t* out);

/* "92.17%" style precision, or "undefined" when labeled == 0. */
MC_API mc_status mc_format_precision(uint64_t erroneous, uint64_t labeled, char** out);

/* Serves the triage API over the context's output directory. port 0 picks
 * a free port; static_dir may be NULL. */
MC_API mc_status mc_server_start(mc_context* ctx, const char* bind, int port, const char* static_dir,
                                 mc_server** out);
MC_API int mc_server_port(const mc_server* server);
MC_API void mc_server_wait(mc_server* server);
MC_API void mc_server_stop(mc_server* server);
MC_API void mc_server_destroy(mc_server* server);

#ifdef __cplusplus
}
#endif

#endif /* MELTCHECK_MELTCHECK_H */
