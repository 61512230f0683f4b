/* contrailkit C interface.
 *
 * Every function returns a ck_status. On failure the thread-local message
 * from ck_last_error() describes what went wrong. Objects are opaque handles
 * released with their matching *_free function; strings returned through
 * char** are released with ck_string_free.
 */
#ifndef CONTRAILKIT_H
#define CONTRAILKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CK_API __declspec(dllexport)
#else
#define CK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ck_status {
  CK_OK = 0,
  CK_INVALID_ARGUMENT = 1,
  CK_SHAPE_MISMATCH = 2,
  CK_CORRUPT_RECORD = 3,
  CK_TRUNCATED = 4,
  CK_IO = 5,
  CK_NOT_FOUND = 6,
  CK_UNDEFINED = 7,
  CK_INTERNAL = 99
} ck_status;

CK_API const char* ck_last_error(void);
CK_API const char* ck_version(void);
CK_API void ck_string_free(char* s);

/* ---- rasters (float values plus a missing flag per pixel) ---- */

typedef struct ck_raster ck_raster;

CK_API ck_status ck_raster_create(int width, int height, const float* values, const uint8_t* missing,
                                  ck_raster** out);
CK_API ck_status ck_raster_load(const char* path, ck_raster** out);
CK_API ck_status ck_raster_save(const ck_raster* r, const char* path);
CK_API void ck_raster_free(ck_raster* r);
CK_API int ck_raster_width(const ck_raster* r);
CK_API int ck_raster_height(const ck_raster* r);
CK_API const float* ck_raster_values(const ck_raster* r);
CK_API const uint8_t* ck_raster_missing(const ck_raster* r);

/* ---- ingest ---- */

typedef struct ck_ash_bounds {
  double red_lo, red_hi;
  double green_lo, green_hi;
  double blue_lo, blue_hi;
} ck_ash_bounds;

CK_API ck_ash_bounds ck_ash_bounds_default(void);
CK_API ck_status ck_render_ash_png(const ck_raster* bt12, const ck_raster* bt11, const ck_raster* bt8,
                                   const ck_ash_bounds* bounds, const char* png_path);

/* Reads a record file and returns a JSON summary ({"records": n, ...}). */
CK_API ck_status ck_records_verify(const char* path, char** json_out);

/* ---- detector ---- */

typedef struct ck_mannstein_params {
  int n_orientations;
  int kernel_len;
  int kernel_width;
  double btd_threshold;
  double response_threshold;
  int min_component_px;
  int background_window;
} ck_mannstein_params;

CK_API ck_mannstein_params ck_mannstein_params_default(void);
/* Overrides fields of *params from a JSON object with the same field names. */
CK_API ck_status ck_mannstein_params_from_json(const char* json, ck_mannstein_params* params);
CK_API ck_status ck_btd(const ck_raster* bt11, const ck_raster* bt12, ck_raster** out);
/* mask_out receives a 0/1 raster; passed_out is 1 when any pixel survives. */
CK_API ck_status ck_mannstein_screen(const ck_raster* btd, const ck_mannstein_params* params,
                                     ck_raster** mask_out, int* passed_out);

/* ---- linearize ---- */

typedef struct ck_segment {
  double r0, c0, r1, c1;
  double angle_deg;
  double length_px;
} ck_segment;

typedef struct ck_linearize_params {
  double width_tol;
  int min_component_px;
  double angle_tol;
  double lateral_tol;
  double gap_tol;
} ck_linearize_params;

typedef struct ck_segments ck_segments;

CK_API ck_linearize_params ck_linearize_params_default(void);
CK_API ck_status ck_linearize(const ck_raster* prob, double threshold, const ck_linearize_params* params,
                              ck_segments** out);
CK_API ck_status ck_segments_from_jsonl(const char* text, ck_segments** out);
CK_API ck_status ck_segments_load(const char* path, ck_segments** out);
CK_API ck_status ck_segments_to_jsonl(const ck_segments* s, char** out);
CK_API size_t ck_segments_count(const ck_segments* s);
CK_API ck_status ck_segments_get(const ck_segments* s, size_t i, ck_segment* out);
CK_API void ck_segments_free(ck_segments* s);

/* ---- metrics ---- */

typedef enum ck_match_mode { CK_MATCH_GREEDY = 0, CK_MATCH_OPTIMAL = 1 } ck_match_mode;
typedef enum ck_distance_mode { CK_DIST_PRED_TO_GT = 0, CK_DIST_SYMMETRIC = 1 } ck_distance_mode;

typedef struct ck_match_params {
  double angle_tol_deg;
  double dist_tol_km;
  double km_per_pixel;
  double sample_step_px;
  ck_match_mode mode;
  ck_distance_mode distance;
} ck_match_params;

CK_API ck_match_params ck_match_params_default(void);

/* Pooled pixel PR curve and AUC over n (prediction, ground truth) pairs;
 * ground truth rasters are read as value >= 0.5. JSON:
 * {"auc": a, "points": [{"threshold","precision","recall","tp","fp","fn"}]}. */
CK_API ck_status ck_eval_pixel(const ck_raster* const* preds, const ck_raster* const* gts, size_t n,
                               int n_thresholds, char** json_out);

/* Per-contrail PR at each threshold. */
CK_API ck_status ck_eval_contrail(const ck_raster* prob, const ck_segments* gt, const double* thresholds,
                                  size_t n_thresholds, const ck_match_params* match,
                                  const ck_linearize_params* lin, char** json_out);

CK_API ck_status ck_match(const ck_segments* pred, const ck_segments* gt, const ck_match_params* match,
                          char** json_out);

CK_API ck_status ck_eval_relaxed(const ck_raster* pred, const ck_raster* gt, double rho, double* precision,
                                 double* recall);

/* Directory reports: *.btg predictions in pred_dir paired by file stem with
 * ground truth in gt_dir (.btg rasters, or .jsonl segments for contrail).
 * The JSON report holds the pooled result plus a per-image breakdown. */
CK_API ck_status ck_report_pixel(const char* pred_dir, const char* gt_dir, int n_thresholds, char** json_out);
CK_API ck_status ck_report_contrail(const char* pred_dir, const char* gt_dir, int n_thresholds,
                                    const ck_match_params* match, const ck_linearize_params* lin,
                                    char** json_out);
CK_API ck_status ck_report_relaxed(const char* pred_dir, const char* gt_dir, double rho, double threshold,
                                   char** json_out);

/* Quorum aggregation of n binary rasters; out receives a 0/1 raster. */
CK_API ck_status ck_aggregate_labels(const ck_raster* const* masks, size_t n, int quorum, ck_raster** out);

/* ---- sampler ---- */

/* policy_json may be NULL for defaults; seed overrides any seed in it.
 * Writes the kept rows to out_csv and reports counts. */
CK_API ck_status ck_sample(const char* features_csv, const char* policy_json, uint64_t seed,
                           const char* out_csv, size_t* n_in, size_t* n_kept);

/* ---- coverage ---- */

/* by: "hour", "doy", "gridbox", "zenith" or "cloud". */
CK_API ck_status ck_coverage_report(const char* detections_dir, double threshold, const char* by,
                                    char** csv_out);
CK_API ck_status ck_coverage_fraction(const ck_raster* prob, double threshold, double* pct);
CK_API double ck_solar_zenith(double lat, double lon, double epoch_s);
CK_API double ck_local_hour(double utc_hour, double lon);

/* ---- flight environment ---- */

typedef struct ck_density_params {
  double sigma0_px;
  double growth_px_per_s;
  double duration_s;
  double step_s;
} ck_density_params;

CK_API ck_density_params ck_density_params_default(void);

/* "YYYY-MM-DDTHH:MM:SS[Z]" UTC to epoch seconds. */
CK_API ck_status ck_parse_iso8601(const char* text, double* epoch_s);

/* Advects every waypoint in tracks_csv through the wind file and renders
 * the density at epoch time `at` on a size x size UTM patch centred at
 * (lat, lon) with pixel_m spacing. */
CK_API ck_status ck_flight_density(const char* wind_path, const char* tracks_csv, double at, double lat,
                                   double lon, int size, double pixel_m, const ck_density_params* params,
                                   ck_raster** density_out, size_t* track_count);

/* ---- annotation service ---- */

typedef struct ck_store ck_store;

CK_API ck_status ck_store_open(const char* root, ck_store** out);
CK_API void ck_store_free(ck_store* s);
/* task_json: {"task_id", "frame_times": [8 epoch seconds], "labelers": [...]};
 * frame_pngs: 8 paths; overlay_png may be NULL. */
CK_API ck_status ck_store_add_task(ck_store* s, const char* task_json, const char* const* frame_pngs,
                                   const char* overlay_png);
/* Blocks serving HTTP until the process exits. */
CK_API ck_status ck_store_serve(ck_store* s, const char* host, int port);

#ifdef __cplusplus
}
#endif

#endif
