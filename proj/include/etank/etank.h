#ifndef ETANK_ETANK_H
#define ETANK_ETANK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ETANK_API __declspec(dllexport)
#elif defined(__GNUC__)
#define ETANK_API __attribute__((visibility("default")))
#else
#define ETANK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum etank_status {
  ETANK_OK = 0,
  ETANK_ERR_ARGUMENT = 1, /* null pointer, short buffer, bad handle use */
  ETANK_ERR_CONFIG = 2,   /* invalid config, checkpoint or run directory */
  ETANK_ERR_DIVERGED = 3, /* training produced a non-finite value */
  ETANK_ERR_IO = 4,
  ETANK_ERR_DOMAIN = 5, /* numeric precondition violated */
  ETANK_ERR_INTERNAL = 6
} etank_status;

typedef struct etank_env etank_env;
typedef struct etank_policy etank_policy;

/* Message of the last failed call on this thread; "" after a success. */
ETANK_API const char* etank_last_error(void);
/* 1-based config line of the last ETANK_ERR_CONFIG, 0 when unknown. */
ETANK_API int etank_last_error_line(void);
/* State dump directory of the last ETANK_ERR_DIVERGED, "" otherwise. */
ETANK_API const char* etank_last_dump_path(void);
ETANK_API const char* etank_version(void);

/* Strings returned through `char** out` are owned by the caller. */
ETANK_API void etank_free_string(char* s);

/* Canonical config JSON with its content hash:
 * {"hash": "...", "config": {...}}. `overrides` holds "path=value" strings. */
ETANK_API etank_status etank_config_resolve(const char* config_path, const char* const* overrides,
                                            size_t n_overrides, char** out_json);

/* ---- environment --------------------------------------------------------- */

typedef struct etank_step {
  double reward;
  int terminal;
  int truncated;
  double beta;
  double beta_dot;
  double commanded_torque;
  double applied_torque;
  double external_torque;
  double tank_level;
  double tank_spent;
  int gated;
  int depleted;
} etank_step;

/* Pendulum with the wrapper and force field named in the config text. */
ETANK_API etank_status etank_env_create(const char* config_json, etank_env** out);
ETANK_API void etank_env_destroy(etank_env* env);
ETANK_API size_t etank_env_observation_size(const etank_env* env);
/* `obs` must hold etank_env_observation_size() values. */
ETANK_API etank_status etank_env_reset(etank_env* env, uint64_t seed, double* obs, size_t obs_len);
ETANK_API etank_status etank_env_step(etank_env* env, double torque, etank_step* step, double* obs,
                                      size_t obs_len);

/* ---- policy -------------------------------------------------------------- */

ETANK_API etank_status etank_policy_load(const char* checkpoint_path, etank_policy** out);
ETANK_API void etank_policy_destroy(etank_policy* policy);
ETANK_API size_t etank_policy_observation_size(const etank_policy* policy);
/* Deterministic (mean) torque. */
ETANK_API etank_status etank_policy_act(const etank_policy* policy, const double* obs,
                                        size_t obs_len, double* torque);

/* ---- experiments (results as JSON) ---------------------------------------- */

typedef void (*etank_log_fn)(const char* line, void* user);

/* Trains every seed of the config under `run_root` (NULL: $ETANK_RUN_ROOT or "runs"). */
ETANK_API etank_status etank_train(const char* config_path, const char* const* overrides,
                                   size_t n_overrides, const char* run_root, etank_log_fn log,
                                   void* user, char** out_json);
ETANK_API etank_status etank_estimate_task_energy(const char* checkpoint_path, int episodes,
                                                  uint64_t seed, char** out_json);
/* `options_json` keys, all optional: wrapper {kind, e0, epsilon}, force_field
 * {magnitude, profile}, episodes, seed, final_window, steps_dir. */
ETANK_API etank_status etank_evaluate(const char* checkpoint_path, const char* options_json,
                                      char** out_json);
ETANK_API etank_status etank_compare(const char* const* run_dirs, size_t n_runs, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
