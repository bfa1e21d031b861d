#ifndef AUTOASM_AUTOASM_H
#define AUTOASM_AUTOASM_H

/* C interface to the autoasm synthesis library.
 *
 * Every fallible call returns an aa_status. On failure the message of the
 * last error on the calling thread is available from aa_last_error().
 * Strings handed out through char** parameters are owned by the caller and
 * released with aa_string_free(). Handles are released with their *_free
 * function; passing NULL to any *_free function is a no-op. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(AUTOASM_BUILDING_LIBRARY)
#    define AA_API __declspec(dllexport)
#  else
#    define AA_API __declspec(dllimport)
#  endif
#else
#  define AA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aa_status {
  AA_OK = 0,
  AA_ERR_INVALID_ARGUMENT = 1,
  AA_ERR_SYNTAX = 2,
  AA_ERR_CONSTRAINT = 3,
  AA_ERR_ILLEGAL_INSTRUCTION = 4,
  AA_ERR_RAM_DISABLED = 5,
  AA_ERR_CONFIG_MISMATCH = 6,
  AA_ERR_DEGENERATE_TASK = 7,
  AA_ERR_UNKNOWN_TASK = 8,
  AA_ERR_SHAPE_MISMATCH = 9,
  AA_ERR_IO = 10,
  AA_ERR_CORRUPT_FILE = 11,
  AA_ERR_VERSION_MISMATCH = 12,
  AA_ERR_MISSING_GOLD = 13,
  AA_ERR_MISSING_CHECKPOINT = 14,
  AA_ERR_NO_LEGAL_EXPANSION = 15,
  AA_ERR_INTERNAL = 99
} aa_status;

typedef struct aa_program aa_program;
typedef struct aa_pool aa_pool;
typedef struct aa_engine aa_engine;

AA_API const char* aa_version(void);
AA_API const char* aa_status_name(aa_status status);
/* Message of the most recent failure on this thread, "" if none. */
AA_API const char* aa_last_error(void);
AA_API void aa_string_free(char* s);

/* ---- programs ---------------------------------------------------------- */

/* One instruction per line or separated by ';', AT&T operand order. */
AA_API aa_status aa_program_parse(const char* text, aa_program** out);
AA_API void aa_program_free(aa_program* prog);
AA_API size_t aa_program_length(const aa_program* prog);
AA_API aa_status aa_program_format(const aa_program* prog, char** out);

/* Executes on 4 registers and, when ram_in is not NULL, 4 RAM slots.
 * ram_out may be NULL. */
AA_API aa_status aa_program_run(const aa_program* prog, const int32_t regs_in[4], const int32_t* ram_in,
                                int32_t regs_out[4], int32_t* ram_out);

/* ---- task pools -------------------------------------------------------- */

typedef struct aa_pool_config {
  int64_t count;
  int32_t program_length;
  int32_t num_registers;
  int32_t ram_enabled;
  int32_t pairs_per_task;
  int32_t init_low;
  int32_t init_high;
  uint64_t seed;
} aa_pool_config;

AA_API void aa_pool_config_default(aa_pool_config* config);
AA_API aa_status aa_pool_generate(const aa_pool_config* config, aa_pool** out, int64_t* duplicates_dropped);
AA_API aa_status aa_pool_load(const char* path, aa_pool** out);
AA_API aa_status aa_pool_save(const aa_pool* pool, const char* path);
AA_API int64_t aa_pool_size(const aa_pool* pool);
/* Size, configuration and weight histogram. */
AA_API aa_status aa_pool_describe(const aa_pool* pool, char** out);
AA_API void aa_pool_free(aa_pool* pool);

/* ---- artifacts --------------------------------------------------------- */

AA_API aa_status aa_checkpoint_describe(const char* path, char** out);
/* Describes a checkpoint or a pool file, whichever `path` holds. */
AA_API aa_status aa_inspect(const char* path, char** out);

/* ---- training ---------------------------------------------------------- */

/* Receives one human-readable progress line at a time. */
typedef void (*aa_progress_fn)(const char* line, void* user);

/* Imitation pretraining followed (unless pretrain_only) by the RL epoch loop.
 * config_json may be NULL for defaults; unknown keys are rejected. Writes
 * policy_imitation.ckpt, imitation.json, and unless pretrain_only also
 * policy.ckpt, value.ckpt, metrics.csv and pool_final.jsonl under out_dir. */
AA_API aa_status aa_train(const char* pool_path, const char* out_dir, const char* config_json, int32_t pretrain_only,
                          aa_progress_fn progress, void* user);

/* ---- search ------------------------------------------------------------ */

typedef struct aa_search_options {
  double epsilon;
  double gamma;
  int32_t max_depth;
  int32_t rollout_limit;
  int32_t simulations_per_move;
  int32_t expansion_width;
  uint64_t seed;
} aa_search_options;

AA_API void aa_search_options_default(aa_search_options* options);

/* value_path may be NULL, in which case the distance heuristic is used. */
AA_API aa_status aa_engine_load(const char* policy_path, const char* value_path, aa_engine** out);
AA_API void aa_engine_free(aa_engine* engine);
/* Observable cells per state: registers, then RAM when enabled. */
AA_API int32_t aa_engine_cells(const aa_engine* engine);

/* inputs and outputs hold `pairs` states of aa_engine_cells() values each.
 * On return *solved is 1 and *out holds a verified program, or *solved is 0
 * and *out is NULL. */
AA_API aa_status aa_engine_search(const aa_engine* engine, const int32_t* inputs, const int32_t* outputs,
                                  int32_t pairs, const aa_search_options* options, aa_program** out,
                                  int32_t* solved);

/* ---- benchmark --------------------------------------------------------- */

typedef struct aa_bench_options {
  const char* suite_path;        /* NULL: built-in suite */
  const char* baselines;         /* comma separated, NULL: all four */
  const char* imitation_policy;  /* supervised policy */
  const char* reinforce_policy;  /* RL policy */
  const char* policy;            /* autoassemblet policy */
  const char* value;             /* autoassemblet value */
  const char* out_dir;           /* NULL: no files written */
  int32_t sample_budget;
  aa_search_options search;
  uint64_t seed;
  int32_t jobs;
} aa_bench_options;

AA_API void aa_bench_options_default(aa_bench_options* options);
/* Runs the requested baselines; writes report.csv, report.txt and
 * outcomes.jsonl (one record per baseline and task) to out_dir and returns the
 * text report in *report. */
AA_API aa_status aa_bench(const aa_bench_options* options, char** report);
AA_API aa_status aa_suite_write(const char* path, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
