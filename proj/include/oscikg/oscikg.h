#ifndef OSCIKG_OSCIKG_H
#define OSCIKG_OSCIKG_H

/*
 * C interface to the oscillatory Klein-Gordon integrators.
 *
 * Every function returns an oscikg_status. On failure the message is kept in
 * thread-local storage and read back with oscikg_last_error(). Strings handed
 * out by the library are released with oscikg_string_free(); handles with
 * their matching *_free function. Free functions accept NULL.
 */

#include <stddef.h>

#if defined(_WIN32)
#  ifdef OSCIKG_BUILDING_LIBRARY
#    define OSCIKG_API __declspec(dllexport)
#  else
#    define OSCIKG_API __declspec(dllimport)
#  endif
#else
#  define OSCIKG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum oscikg_status {
  OSCIKG_OK = 0,
  OSCIKG_ERR_ARGUMENT = 1,  /* NULL pointer or out-of-range argument */
  OSCIKG_ERR_CONFIG = 2,    /* invalid configuration or preset */
  OSCIKG_ERR_NUMERICAL = 3, /* integration produced non-finite values */
  OSCIKG_ERR_IO = 4,
  OSCIKG_ERR_INTERNAL = 5
} oscikg_status;

typedef struct oscikg_config oscikg_config;
typedef struct oscikg_state oscikg_state;
typedef struct oscikg_report oscikg_report;

OSCIKG_API const char* oscikg_version(void);

/* Message of the last failure on this thread ("" if none). */
OSCIKG_API const char* oscikg_last_error(void);
/* JSON pointer of the offending config value after OSCIKG_ERR_CONFIG, else "". */
OSCIKG_API const char* oscikg_last_error_pointer(void);
/* Step index after OSCIKG_ERR_NUMERICAL, else -1. */
OSCIKG_API long oscikg_last_error_step(void);

OSCIKG_API void oscikg_string_free(char* s);

/* ---- configurations ---------------------------------------------------- */

OSCIKG_API oscikg_status oscikg_config_from_json(const char* json, oscikg_config** out);

/* overrides_json may be NULL or an object with any of
 * "omega", "epsilon", "sigma", "modes", "steps". */
OSCIKG_API oscikg_status oscikg_config_from_preset(const char* name, const char* overrides_json,
                                                   oscikg_config** out);
OSCIKG_API oscikg_status oscikg_preset_json(const char* name, const char* overrides_json, char** out_json);
/* Newline-separated preset names. */
OSCIKG_API oscikg_status oscikg_preset_names(char** out);

OSCIKG_API oscikg_status oscikg_config_to_json(const oscikg_config* cfg, char** out_json);

/* Binds the sweep placeholder, or the single component's frequency. */
OSCIKG_API oscikg_status oscikg_config_set_omega(oscikg_config* cfg, double omega);
OSCIKG_API oscikg_status oscikg_config_set_steps(oscikg_config* cfg, const long* steps, size_t count);
OSCIKG_API oscikg_status oscikg_config_set_modes(oscikg_config* cfg, int modes);
/* One or more of gamma1, gamma2, reference, comma separated. */
OSCIKG_API oscikg_status oscikg_config_set_schemes(oscikg_config* cfg, const char* schemes);
OSCIKG_API oscikg_status oscikg_config_set_jobs(oscikg_config* cfg, int jobs);
OSCIKG_API oscikg_status oscikg_config_set_norm_s(oscikg_config* cfg, double s);
OSCIKG_API oscikg_status oscikg_config_set_cache_dir(oscikg_config* cfg, const char* dir);

/* Smallest step count over [t0, T] that keeps h sqrt(c) |k|_max below
 * 2 sqrt(3). Fewer steps are allowed but may amplify the highest modes. */
OSCIKG_API oscikg_status oscikg_config_min_stable_steps(const oscikg_config* cfg, long* out);

OSCIKG_API void oscikg_config_free(oscikg_config* cfg);

/* ---- single integrations ----------------------------------------------- */

/* scheme NULL picks the config's first scheme; n_steps 0 picks its largest
 * step count. */
OSCIKG_API oscikg_status oscikg_run(const oscikg_config* cfg, const char* scheme, long n_steps,
                                    oscikg_state** out);

OSCIKG_API size_t oscikg_state_size(const oscikg_state* st);
OSCIKG_API double oscikg_state_time(const oscikg_state* st);
/* Copies psi / psi_t into out, which holds at least oscikg_state_size() doubles. */
OSCIKG_API oscikg_status oscikg_state_psi(const oscikg_state* st, double* out, size_t capacity);
OSCIKG_API oscikg_status oscikg_state_dpsi(const oscikg_state* st, double* out, size_t capacity);
OSCIKG_API oscikg_status oscikg_state_write_snapshot(const oscikg_state* st, const char* path);
/* {"scheme", "n_steps", "h", "t", "modes", "dim", "psi_l2", "psi_rms", "runtime_s"} */
OSCIKG_API oscikg_status oscikg_state_summary_json(const oscikg_state* st, char** out_json);
OSCIKG_API void oscikg_state_free(oscikg_state* st);

/* ---- studies ----------------------------------------------------------- */

/* Convergence study for every configured scheme against one shared reference. */
OSCIKG_API oscikg_status oscikg_converge(const oscikg_config* cfg, oscikg_report** out);
/* Frequency sweep over the config's sweep omegas for every configured scheme. */
OSCIKG_API oscikg_status oscikg_sweep(const oscikg_config* cfg, oscikg_report** out);

OSCIKG_API size_t oscikg_report_rows(const oscikg_report* rep);
OSCIKG_API oscikg_status oscikg_report_csv(const oscikg_report* rep, char** out_csv);
OSCIKG_API oscikg_status oscikg_report_table(const oscikg_report* rep, char** out_text);
OSCIKG_API void oscikg_report_free(oscikg_report* rep);

#ifdef __cplusplus
}
#endif

#endif
