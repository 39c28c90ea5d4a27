/* C interface to the rplan library. Every call returns a status; on failure the message is
 * available from rplan_last_error() on the calling thread until its next call. Strings handed
 * out by the library are released with rplan_string_free. */
#ifndef RPLAN_RPLAN_H
#define RPLAN_RPLAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RPLAN_API __declspec(dllexport)
#else
#define RPLAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rplan_status {
    RPLAN_OK = 0,
    RPLAN_ERR_INVALID_ARGUMENT = 1,
    RPLAN_ERR_APPEND_TO_TERMINAL = 2,
    RPLAN_ERR_MAX_LENGTH_EXCEEDED = 3,
    RPLAN_ERR_PARSE = 4,
    RPLAN_ERR_INVALID_PUZZLE = 5,
    RPLAN_ERR_OPERAND_MISSING = 6,
    RPLAN_ERR_DIVISION_BY_ZERO = 7,
    RPLAN_ERR_RESULT_MISMATCH = 8,
    RPLAN_ERR_TERMINAL_POOL = 9,
    RPLAN_ERR_IO = 10,
    RPLAN_ERR_SCHEMA = 11,
    RPLAN_ERR_EMPTY_QUERY = 12,
    RPLAN_ERR_UNKNOWN_PRODUCT = 13,
    RPLAN_ERR_NO_VALID_ACTIONS = 14,
    RPLAN_ERR_MISSING_ACTION = 15,
    RPLAN_ERR_POLICY = 16,
    RPLAN_ERR_REMOTE = 17,
    RPLAN_ERR_TIMEOUT = 18,
    RPLAN_ERR_DIMENSION_MISMATCH = 19,
    RPLAN_ERR_EMPTY_DATASET = 20,
    RPLAN_ERR_DIVERGENCE = 21,
    RPLAN_ERR_MISSING_PRICE = 22,
    RPLAN_ERR_SCORE_PARSE = 23,
    RPLAN_ERR_CONTRACT = 24,
    RPLAN_ERR_NEGATIVE_CONSTRUCTION = 25,
    RPLAN_ERR_CONFIG = 26,
    RPLAN_ERR_INTERNAL = 100
} rplan_status;

typedef struct rplan_config rplan_config;
typedef struct rplan_model rplan_model;

typedef struct rplan_run_options {
    int has_seed;
    uint64_t seed;
    const char* out; /* NULL: use the config's `out` */
} rplan_run_options;

RPLAN_API const char* rplan_version(void);
RPLAN_API const char* rplan_status_name(rplan_status status);
RPLAN_API const char* rplan_last_error(void);
/* Process exit code for a status: 0 ok, 2 configuration error, 3 anything else. */
RPLAN_API int rplan_exit_code(rplan_status status);

/* 0 errors, 1 warnings, 2 info, 3 debug. */
RPLAN_API void rplan_set_log_level(int level);
typedef void (*rplan_log_fn)(int level, const char* message, void* user);
/* NULL restores logging to stderr. */
RPLAN_API void rplan_set_log_callback(rplan_log_fn fn, void* user);

RPLAN_API rplan_status rplan_config_load(const char* path, rplan_config** out);
RPLAN_API rplan_status rplan_config_parse(const char* text, const char* base_dir, rplan_config** out);
/* "section.key=value" */
RPLAN_API rplan_status rplan_config_set(rplan_config* config, const char* assignment);
/* TOML text of the current tree. */
RPLAN_API rplan_status rplan_config_snapshot(const rplan_config* config, char** out);
RPLAN_API void rplan_config_free(rplan_config* config);

/* `summary` (optional) receives the text the CLI prints. */
RPLAN_API rplan_status rplan_synthesize(const rplan_config* config, const rplan_run_options* options, char** summary);
RPLAN_API rplan_status rplan_train(const rplan_config* config, const rplan_run_options* options, char** summary);
RPLAN_API rplan_status rplan_eval_rm(const rplan_config* config, const rplan_run_options* options, char** summary);
RPLAN_API rplan_status rplan_plan(const rplan_config* config, const rplan_run_options* options, char** summary);
/* Run directories come from `run_dirs` and, when `config` is given, its `report.runs` list. */
RPLAN_API rplan_status rplan_report(const rplan_config* config, const char* const* run_dirs, size_t count,
                                    const char* out, char** summary);

RPLAN_API void rplan_string_free(char* s);

RPLAN_API rplan_status rplan_model_load(const char* path, rplan_model** out);
/* Scores one serialized trajectory (a JSONL line). */
RPLAN_API rplan_status rplan_model_score(const rplan_model* model, const char* trajectory_json, double* out);
RPLAN_API void rplan_model_free(rplan_model* model);

/* `witness` (optional) receives the solution steps, one per line, or NULL when unsolvable. */
RPLAN_API rplan_status rplan_game24_solve(int a, int b, int c, int d, int* solvable, char** witness);
RPLAN_API rplan_status rplan_judge_parse_score(const char* reply, double* out);
/* `problem` receives NULL for a valid trajectory, otherwise a description. */
RPLAN_API rplan_status rplan_trajectory_validate(const char* trajectory_json, size_t max_actions, char** problem);

#ifdef __cplusplus
}
#endif

#endif
