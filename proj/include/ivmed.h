/* ivmed: complier interventional direct/indirect effect estimation.
 *
 * C interface over the estimation core. All functions return IVMED_OK or an
 * error code; ivmed_last_error() describes the most recent failure on the
 * calling thread. Handles are opaque and owned by the caller via the
 * matching *_destroy function.
 */
#ifndef IVMED_H
#define IVMED_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ivmed_dataset ivmed_dataset;
typedef struct ivmed_reports ivmed_reports;

enum {
    IVMED_OK = 0,
    IVMED_E_ARGUMENT = 1,
    IVMED_E_VALIDATION = 2,
    IVMED_E_ESTIMATION = 3,
    IVMED_E_IO = 4,
    IVMED_E_INTERNAL = 5
};

/* per-report status */
enum { IVMED_REPORT_OK = 0, IVMED_REPORT_WEAK_INSTRUMENT = 1 };

const char* ivmed_version(void);
const char* ivmed_last_error(void);

/* w is row-major n x n_w; l may be NULL (single-instrument data). */
int ivmed_dataset_create(int64_t n, int32_t n_w, const double* w, const char* const* w_names,
                         const double* a, const double* z, const double* l, const double* m,
                         const double* y, ivmed_dataset** out);
void ivmed_dataset_destroy(ivmed_dataset* d);

/* estimands: names like "CIDE"; all must belong to one setting.
 * scenario: registry name ("all_correct", ...) or NULL for all_correct.
 * learner_overrides: NULL or "mu=intercept_only;q=logistic_main". */
int ivmed_estimate(const ivmed_dataset* d, const char* const* estimands, int32_t n_estimands,
                   const char* scenario, const char* learner_overrides, int32_t folds,
                   uint64_t seed, double alpha, double clip, ivmed_reports** out);

int32_t ivmed_reports_count(const ivmed_reports* r);
int ivmed_report_status(const ivmed_reports* r, int32_t idx);
const char* ivmed_report_estimand(const ivmed_reports* r, int32_t idx);
const char* ivmed_report_message(const ivmed_reports* r, int32_t idx);
double ivmed_report_psi(const ivmed_reports* r, int32_t idx);
double ivmed_report_se(const ivmed_reports* r, int32_t idx);
double ivmed_report_ci_lower(const ivmed_reports* r, int32_t idx);
double ivmed_report_ci_upper(const ivmed_reports* r, int32_t idx);
double ivmed_report_numerator(const ivmed_reports* r, int32_t idx);
double ivmed_report_denominator(const ivmed_reports* r, int32_t idx);
/* borrows a pointer into the report; valid until the reports handle dies */
int ivmed_report_eif(const ivmed_reports* r, int32_t idx, const double** values, int64_t* len);
void ivmed_reports_destroy(ivmed_reports* r);

/* golden oracle constants for "single" or "double"; caller frees *out_text */
int ivmed_oracle_fixtures(const char* setting, char** out_text);

/* run a simulation plan (flat key=value text); format "csv" or "json";
 * returns the emitted table in *out_table (caller frees) */
int ivmed_simulate(const char* plan_text, const char* format, int32_t jobs, char** out_table);

void ivmed_string_destroy(char* s);

#ifdef __cplusplus
}
#endif

#endif /* IVMED_H */
