#include "etank/etank.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "etank/error.hpp"
#include "etank/experiment.hpp"

using json = nlohmann::json;

struct etank_env {
  std::unique_ptr<etank::Environment> env;
  bool started = false;
};

struct etank_policy {
  etank::LoadedPolicy loaded;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_dump;
thread_local int g_line = 0;

etank_status fail(etank_status status, const std::string& message) {
  g_error = message;
  return status;
}

// Runs `body`, mapping exceptions to status codes and recording the message.
template <class F>
etank_status guarded(F&& body) {
  g_error.clear();
  g_dump.clear();
  g_line = 0;
  try {
    return body();
  } catch (const etank::ConfigError& e) {
    g_line = e.line();
    return fail(ETANK_ERR_CONFIG, e.what());
  } catch (const etank::TrainingDiverged& e) {
    g_dump = e.dump_path();
    return fail(ETANK_ERR_DIVERGED, e.what());
  } catch (const etank::IoError& e) {
    return fail(ETANK_ERR_IO, e.what());
  } catch (const etank::DomainError& e) {
    return fail(ETANK_ERR_DOMAIN, e.what());
  } catch (const std::exception& e) {
    return fail(ETANK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ETANK_ERR_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json number(double v) {
  // JSON has no infinity; the config format spells it "inf".
  return std::isfinite(v) ? json(v) : json(etank::format_double(v));
}

std::vector<std::string> collect(const char* const* items, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (items[i] == nullptr) throw etank::DomainError("null string in list");
    out.emplace_back(items[i]);
  }
  return out;
}

etank::LoadedPolicy load(const char* path) {
  try {
    return etank::load_policy(path);
  } catch (const etank::IoError& e) {
    // A missing or unreadable checkpoint is a usage error, like a bad config.
    throw etank::ConfigError(e.what());
  }
}

json eval_json(const etank::EvalReport& r) {
  json episodes = json::array();
  for (const auto& e : r.episodes) {
    episodes.push_back({{"return", e.episode_return},
                        {"length", e.length},
                        {"energy_spent", e.energy_spent},
                        {"depleted", e.depleted},
                        {"gated_steps", e.gated_steps},
                        {"final_error", e.final_error}});
  }
  return {{"episodes", episodes},
          {"mean_return", r.mean_return},
          {"mean_final_error", r.mean_final_error},
          {"mean_energy", r.mean_energy},
          {"max_energy", r.max_energy},
          {"depleted_episodes", r.depleted_episodes}};
}

}  // namespace

extern "C" {

const char* etank_last_error(void) { return g_error.c_str(); }
int etank_last_error_line(void) { return g_line; }
const char* etank_last_dump_path(void) { return g_dump.c_str(); }
const char* etank_version(void) { return "0.1.0"; }

void etank_free_string(char* s) { std::free(s); }

etank_status etank_config_resolve(const char* config_path, const char* const* overrides,
                                  size_t n_overrides, char** out_json) {
  return guarded([&] {
    if (config_path == nullptr || out_json == nullptr || (n_overrides > 0 && !overrides)) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    const auto config = etank::load_config(config_path, collect(overrides, n_overrides));
    const json out = {{"hash", etank::content_hash(config)},
                      {"config", json::parse(etank::to_json(config))}};
    *out_json = dup_string(out.dump(2));
    return ETANK_OK;
  });
}

etank_status etank_env_create(const char* config_json, etank_env** out) {
  return guarded([&] {
    if (config_json == nullptr || out == nullptr) return fail(ETANK_ERR_ARGUMENT, "null argument");
    const auto config = etank::parse_config(config_json);
    auto handle = std::make_unique<etank_env>();
    handle->env = etank::make_environment(config, config.wrapper, config.force_field);
    *out = handle.release();
    return ETANK_OK;
  });
}

void etank_env_destroy(etank_env* env) { delete env; }

size_t etank_env_observation_size(const etank_env* env) {
  return env == nullptr ? 0 : env->env->observation_size();
}

etank_status etank_env_reset(etank_env* env, uint64_t seed, double* obs, size_t obs_len) {
  return guarded([&] {
    if (env == nullptr || obs == nullptr) return fail(ETANK_ERR_ARGUMENT, "null argument");
    if (obs_len < env->env->observation_size()) {
      return fail(ETANK_ERR_ARGUMENT, "observation buffer too small");
    }
    etank::Rng rng = etank::make_rng(seed);
    const auto o = env->env->reset(rng);
    std::copy(o.begin(), o.end(), obs);
    env->started = true;
    return ETANK_OK;
  });
}

etank_status etank_env_step(etank_env* env, double torque, etank_step* step, double* obs,
                            size_t obs_len) {
  return guarded([&] {
    if (env == nullptr || step == nullptr || obs == nullptr) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    if (!env->started) return fail(ETANK_ERR_ARGUMENT, "step before reset");
    if (obs_len < env->env->observation_size()) {
      return fail(ETANK_ERR_ARGUMENT, "observation buffer too small");
    }
    const etank::StepResult r = env->env->step(torque);
    std::copy(r.obs.begin(), r.obs.end(), obs);
    *step = etank_step{};
    step->reward = r.reward;
    step->terminal = r.terminal;
    step->truncated = r.truncated;
    step->beta = r.info.beta;
    step->beta_dot = r.info.beta_dot;
    step->commanded_torque = r.info.commanded_torque;
    step->applied_torque = r.info.applied_torque;
    step->external_torque = r.info.external_torque;
    if (r.tank) {
      step->tank_level = r.tank->level;
      step->tank_spent = r.tank->spent;
      step->gated = r.tank->gated;
      step->depleted = r.tank->depleted;
    }
    return ETANK_OK;
  });
}

etank_status etank_policy_load(const char* checkpoint_path, etank_policy** out) {
  return guarded([&] {
    if (checkpoint_path == nullptr || out == nullptr) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    auto handle = std::make_unique<etank_policy>();
    handle->loaded = load(checkpoint_path);
    *out = handle.release();
    return ETANK_OK;
  });
}

void etank_policy_destroy(etank_policy* policy) { delete policy; }

size_t etank_policy_observation_size(const etank_policy* policy) {
  return policy == nullptr ? 0 : policy->loaded.checkpoint.obs_dim;
}

etank_status etank_policy_act(const etank_policy* policy, const double* obs, size_t obs_len,
                              double* torque) {
  return guarded([&] {
    if (policy == nullptr || obs == nullptr || torque == nullptr) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    const auto& ck = policy->loaded.checkpoint;
    if (obs_len != ck.obs_dim) return fail(ETANK_ERR_ARGUMENT, "observation size mismatch");
    *torque = etank::deterministic_torque(ck.actor, std::span<const double>(obs, obs_len),
                                          ck.torque_limit);
    return ETANK_OK;
  });
}

etank_status etank_train(const char* config_path, const char* const* overrides,
                         size_t n_overrides, const char* run_root, etank_log_fn log, void* user,
                         char** out_json) {
  return guarded([&] {
    if (config_path == nullptr || out_json == nullptr || (n_overrides > 0 && !overrides)) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    const auto config = etank::load_config(config_path, collect(overrides, n_overrides));
    etank::LogSink sink;
    if (log != nullptr) sink = [&](const std::string& line) { log(line.c_str(), user); };
    const std::string root = run_root != nullptr ? run_root : etank::default_run_root();
    const etank::TrainReport r = etank::run_training(config, root, sink);
    json seeds = json::array();
    for (const auto& s : r.seeds) {
      seeds.push_back({{"seed", s.seed},
                       {"dir", s.dir},
                       {"best_epoch", s.best_epoch},
                       {"best_eval_return", s.best_eval_return},
                       {"final_epoch_return", s.final_epoch_return},
                       {"max_episode_energy", s.max_episode_energy},
                       {"depletions", s.depletions},
                       {"wall_seconds", s.wall_seconds}});
    }
    const json out = {{"run_dir", r.run_dir}, {"hash", r.hash}, {"seeds", seeds}};
    *out_json = dup_string(out.dump(2));
    return ETANK_OK;
  });
}

etank_status etank_estimate_task_energy(const char* checkpoint_path, int episodes, uint64_t seed,
                                        char** out_json) {
  return guarded([&] {
    if (checkpoint_path == nullptr || out_json == nullptr) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    const auto policy = load(checkpoint_path);
    const etank::TaskEnergyReport r = etank::estimate_task_energy(policy, episodes, seed);
    const json out = {{"e_star", r.e_star}, {"episode_energy", r.episode_energy}};
    *out_json = dup_string(out.dump(2));
    return ETANK_OK;
  });
}

etank_status etank_evaluate(const char* checkpoint_path, const char* options_json,
                            char** out_json) {
  return guarded([&] {
    if (checkpoint_path == nullptr || out_json == nullptr) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    const auto options = etank::parse_eval_options(options_json ? options_json : "");
    const auto policy = load(checkpoint_path);
    json out = eval_json(etank::evaluate_policy(policy, options));
    out["wrapper"] = {{"kind", etank::to_string(options.wrapper.kind)},
                      {"e0", number(options.wrapper.e0)}};
    *out_json = dup_string(out.dump(2));
    return ETANK_OK;
  });
}

etank_status etank_compare(const char* const* run_dirs, size_t n_runs, char** out_json) {
  return guarded([&] {
    if (out_json == nullptr || (n_runs > 0 && !run_dirs)) {
      return fail(ETANK_ERR_ARGUMENT, "null argument");
    }
    const etank::CompareReport r = etank::compare_runs(collect(run_dirs, n_runs));
    const json out = {{"runs", r.runs},
                      {"mean_return", r.mean_return},
                      {"std_return", r.std_return},
                      {"plateau_return", r.plateau_return},
                      {"energy_ratio", number(r.energy_ratio)},
                      {"difference_std", r.difference_std}};
    *out_json = dup_string(out.dump(2));
    return ETANK_OK;
  });
}

}  // extern "C"
