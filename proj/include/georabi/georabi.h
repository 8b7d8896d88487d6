/* georabi C API: experiment runner for geometrical Rabi transition
 * simulations. Opaque handles + integer status codes; every out-string is
 * heap-allocated and must be released with grb_string_free().
 *
 * Status codes: 0 ok, 2 config error, 3 validity violated, 4 numerical or
 * model failure, 5 usage error.
 */
#ifndef GEORABI_GEORABI_H
#define GEORABI_GEORABI_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GEORABI_API __declspec(dllexport)
#else
#define GEORABI_API __attribute__((visibility("default")))
#endif

enum {
  GRB_OK = 0,
  GRB_ERR_CONFIG = 2,
  GRB_ERR_VALIDITY = 3,
  GRB_ERR_NUMERIC = 4,
  GRB_ERR_USAGE = 5
};

typedef struct grb_experiment grb_experiment;
typedef struct grb_results grb_results;

GEORABI_API const char *grb_version(void);

/* Experiment lifecycle. On failure a message is placed in *error (when
 * non-NULL) and a nonzero status returned. */
GEORABI_API int grb_experiment_from_json(const char *json_text, grb_experiment **out,
                                         char **error);
GEORABI_API int grb_experiment_from_preset(const char *name, grb_experiment **out, char **error);
/* dotted_path like "run.cycles"; value is JSON (bare words become strings). */
GEORABI_API int grb_experiment_override(grb_experiment *exp, const char *dotted_path,
                                        const char *json_value, char **error);
GEORABI_API int grb_experiment_canonical_json(const grb_experiment *exp, char **out_json,
                                              char **error);
GEORABI_API void grb_experiment_free(grb_experiment *exp);

/* command: spectrum | evolve | gamma | sweep | lambda | check. */
GEORABI_API int grb_experiment_run(const grb_experiment *exp, const char *command,
                                   grb_results **out, char **error);

GEORABI_API int grb_results_table_count(const grb_results *res);
GEORABI_API const char *grb_results_table_name(const grb_results *res, int index);
/* CSV bytes for one table; stamped != 0 adds a generation-time header line. */
GEORABI_API int grb_results_table_csv(const grb_results *res, const char *name, int stamped,
                                      char **out_csv, char **error);

GEORABI_API int grb_results_scalar_count(const grb_results *res);
GEORABI_API const char *grb_results_scalar_name(const grb_results *res, int index);
GEORABI_API int grb_results_scalar(const grb_results *res, const char *name, double *out_value);

GEORABI_API int grb_results_note_count(const grb_results *res);
GEORABI_API const char *grb_results_note(const grb_results *res, int index);

/* 0 ok, 1 marginal, 2 violated. */
GEORABI_API int grb_results_validity(const grb_results *res);
GEORABI_API void grb_results_free(grb_results *res);

GEORABI_API void grb_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* GEORABI_GEORABI_H */
