#ifndef PAIRVAL_H
#define PAIRVAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(PAIRVAL_BUILDING)
#define PV_API __attribute__((visibility("default")))
#else
#define PV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pv_status {
    PV_OK = 0,
    PV_ERR_INVALID_ARGUMENT = 1,
    PV_ERR_IO = 2,
    PV_ERR_PARSE = 3,
    PV_ERR_DIMENSION_MISMATCH = 4,
    PV_ERR_DUPLICATE_ID = 5,
    PV_ERR_UNSUPPORTED_FORMAT = 6,
    PV_ERR_STALE_CACHE = 7,
    PV_ERR_DEGENERATE_DATA = 8,
    PV_ERR_NOT_FITTED = 9,
    PV_ERR_NUMERIC = 10,
    PV_ERR_CONFLICT = 11,
    PV_ERR_NOT_FOUND = 12,
    PV_ERR_STATE = 13,
    PV_ERR_INTERNAL = 99
} pv_status;

PV_API const char* pv_version(void);
PV_API const char* pv_status_name(pv_status status);
/* Message of the last failing call on this thread; empty when none. */
PV_API const char* pv_last_error(void);
/* Releases strings and buffers returned by this library. */
PV_API void pv_free(void* ptr);

/* 8-bit images, 1 (gray) or 3 (RGB) interleaved channels. */
typedef struct pv_image pv_image;

PV_API pv_status pv_image_load(const char* path, pv_image** out);
PV_API pv_status pv_image_create(int width, int height, int channels, const uint8_t* samples, pv_image** out);
PV_API pv_status pv_image_save(const pv_image* image, const char* path);
PV_API pv_status pv_image_info(const pv_image* image, int* width, int* height, int* channels);
PV_API void pv_image_free(pv_image* image);

/* One image-level metric on the grayscale versions of a and b. `name` is one of
   psnr, ssim, mse, tsi, ws, kl, hist_int, hist_cor, vif, cs, cpl, sss.
   `params_json` may be NULL for defaults. */
PV_API pv_status pv_metric(const char* name, const pv_image* a, const pv_image* b, const char* params_json,
                           double* out);

/* Runs a command (synth, metrics, al-run, baseline, grid, pareto, rq2,
   correlate, serve) on a JSON request; *result_json receives a summary that
   the caller releases with pv_free. */
PV_API pv_status pv_command(const char* name, const char* request_json, char** result_json);
/* Asks a running `serve` command to shut down. Safe to call from a signal handler. */
PV_API void pv_serve_stop(void);

/* Interactive labeling session bound to a checkpoint file. */
typedef struct pv_session pv_session;

PV_API pv_status pv_session_open(const char* request_json, pv_session** out);
PV_API void pv_session_close(pv_session* session);
PV_API pv_status pv_session_status(pv_session* session, char** json);
/* *json is "null" when no pair is waiting for a label. */
PV_API pv_status pv_session_next(pv_session* session, char** json);
/* *http_status is 200, 400 or 409; *json holds the reply body. */
PV_API pv_status pv_session_submit(pv_session* session, const char* pair_id, const char* label, int* http_status,
                                   char** json);
/* Waits for a pending retrain. Returns PV_ERR_STATE on timeout. */
PV_API pv_status pv_session_wait(pv_session* session, int timeout_ms);
/* Routes one HTTP-style request through the labeling API. */
PV_API pv_status pv_session_request(pv_session* session, const char* method, const char* path, const char* body,
                                    int* http_status, char** content_type, char** response, size_t* response_len);

#ifdef __cplusplus
}
#endif

#endif
