/* C interface to the return-forecasting benchmark.
 *
 * All functions are synchronous. Objects returned as pointers are owned by
 * the caller and released with the matching *_free function. Failures return
 * a status code (or NULL) and leave a message in ftsb_last_error(), which is
 * thread-local and valid until the next failing call on the same thread.
 */
#ifndef FTSBENCH_H
#define FTSBENCH_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ftsb_status {
    FTSB_OK = 0,
    FTSB_ERR_INVALID_ARGUMENT = 1,
    FTSB_ERR_PARSE = 2,
    FTSB_ERR_IO = 3,
    FTSB_ERR_NUMERIC = 4,
    FTSB_ERR_INTERNAL = 5
} ftsb_status;

typedef struct ftsb_config ftsb_config;
typedef struct ftsb_report ftsb_report;

const char* ftsb_version(void);
const char* ftsb_status_name(ftsb_status status);

/* Message and status of the most recent failure on this thread; set by every
 * call that returns a non-OK status or NULL. */
const char* ftsb_last_error(void);
ftsb_status ftsb_last_status(void);

/* Frees strings returned by ftsb_config_json and ftsb_report_to_json. */
void ftsb_string_free(char* s);

ftsb_config* ftsb_config_default(void);
ftsb_config* ftsb_config_load(const char* path);
ftsb_config* ftsb_config_from_json(const char* json_text);

/* Dotted keys as in the config file ("seed", "lstm.epochs", "models"). */
ftsb_status ftsb_config_set(ftsb_config* config, const char* key, const char* value);
char* ftsb_config_json(const ftsb_config* config);
void ftsb_config_free(ftsb_config* config);

/* Runs every enabled model. When emit_artifacts is nonzero the report,
 * summary, timing, and plot files are written into the configured output
 * directory. On success *out_report receives the result. */
ftsb_status ftsb_run(const ftsb_config* config, int emit_artifacts, ftsb_report** out_report);

char* ftsb_report_to_json(const ftsb_report* report);
int ftsb_report_entry_count(const ftsb_report* report);
const char* ftsb_report_entry_name(const ftsb_report* report, int index);
const char* ftsb_report_entry_summary(const ftsb_report* report, int index);
const char* ftsb_report_entry_notice(const ftsb_report* report, int index);
/* Returns 1 and stores the test RMSE when the entry ran, 0 otherwise. */
int ftsb_report_entry_rmse(const ftsb_report* report, int index, double* out_rmse);
void ftsb_report_free(ftsb_report* report);

/* Writes prices.csv, news.jsonl, and manifest.json for a synthetic price and
 * headline fixture into dir. */
ftsb_status ftsb_gen_fixture(int n_days, uint64_t seed, const char* dir);

/* Runs the fast invariant suite, one line per check on stdout; returns the
 * number of failed checks. */
int ftsb_self_check(void);

#ifdef __cplusplus
}
#endif

#endif /* FTSBENCH_H */
