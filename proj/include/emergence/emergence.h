#ifndef EMERGENCE_EMERGENCE_H
#define EMERGENCE_EMERGENCE_H

/* C interface of the emergence library. Strings returned through char**
 * are owned by the caller and released with em_string_free. On failure the
 * output pointers are left untouched and em_last_error() describes the
 * problem (per thread). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EM_API __declspec(dllexport)
#else
#define EM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum em_status {
    EM_OK = 0,
    EM_ERR_CONFIG = 1,
    EM_ERR_DOMAIN = 2,
    EM_ERR_IO = 3,
    EM_ERR_NUMERICAL = 4,
    EM_ERR_ARGUMENT = 5,
    EM_ERR_INTERNAL = 6
} em_status;

typedef enum em_verdict {
    EM_VERDICT_RESPECTED = 0,
    EM_VERDICT_VIOLATED = 1,
    EM_VERDICT_INAPPLICABLE = 2
} em_verdict;

typedef struct em_scenario em_scenario;

EM_API const char* em_version(void);
EM_API const char* em_last_error(void);
EM_API void em_string_free(char* s);

/* Directory for persisted uniform-cube CDF tables; NULL or "" disables. */
EM_API em_status em_set_cdf_cache_dir(const char* dir);

EM_API em_status em_scenario_create(const char* config_json, em_scenario** out);
EM_API void em_scenario_destroy(em_scenario* s);

/* certified: operator hypotheses hold; applicable: the theorem bound applies too. */
EM_API em_status em_scenario_status(const em_scenario* s, int* certified, int* applicable);
EM_API em_status em_scenario_trials(const em_scenario* s, uint64_t* trials);

EM_API em_status em_constants_json(const em_scenario* s, char** out);
EM_API em_status em_check_json(const em_scenario* s, char** out);

/* Trace CSV of one trial plus a JSON report of the trial and its envelope checks. */
EM_API em_status em_simulate(const em_scenario* s, uint64_t trial, char** trace_csv, char** report_json);

/* n = 0 uses the trial count of the config. */
EM_API em_status em_montecarlo_json(const em_scenario* s, uint64_t n, char** out, em_verdict* verdict);

/* n = 0 uses the trial count of each grid point's config. */
EM_API em_status em_sweep_csv(const char* config_json, const char* grid_json, uint64_t n, char** out);

/* values: k x d row-major. euclidean != 0 selects the plain inner product. */
EM_API em_status em_quotient_norm(const double* values, size_t k, size_t d, int euclidean, double* out);

/* Positive zero of z^s - c1 z^q - c2. */
EM_API em_status em_positive_root(double s, double q, double c1, double c2, double* out);

/* P(||H|| <= x) in dimension m; kind is "zero", "ball", "cube" or "gaussian"
 * and param the radius, edge or sigma. */
EM_API em_status em_norm_cdf(const char* kind, double param, size_t m, double x, double* out);

#ifdef __cplusplus
}
#endif

#endif
