#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "etank/checkpoint.hpp"
#include "etank/env.hpp"
#include "etank/passivize.hpp"
#include "etank/sac.hpp"

namespace etank {

inline constexpr int kConfigFormatVersion = 1;

enum class WrapperKind { None, InferenceTank, ExtendedTermination, ExtendedState };
const char* to_string(WrapperKind kind);

struct WrapperSpec {
  WrapperKind kind = WrapperKind::None;
  double e0 = kUnboundedBudget;
  double epsilon = kDefaultTankEpsilon;
};

// Everything that determines a training run. The content hash covers the
// canonical JSON form, so two configs with the same effective values share it.
struct ExperimentConfig {
  std::string name = "run";
  SacConfig sac;
  PendulumParams pendulum;
  int max_steps = kDefaultEpisodeSteps;
  ResetDistribution reset;
  WrapperSpec wrapper;
  ForceField force_field;
  int eval_episodes = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

// Parses the versioned JSON config. Unknown keys, wrong types and out-of-range
// values raise ConfigError carrying the 1-based line of the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// `overrides` are "dotted.path=json-value" strings applied to the file before
// parsing, e.g. "sac.epochs=10" or "wrapper.kind=\"extended_termination\"".
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

// Canonical JSON: every field present, keys sorted.
std::string to_json(const ExperimentConfig& config);
// Git-style blob SHA-1 of the canonical JSON, lowercase hex.
std::string content_hash(const ExperimentConfig& config);
std::string git_blob_sha1(const std::string& content);

// Plant, optional force field outside any tank wrapper, then the wrapper.
// `None` gets an unbounded inference tank so the energy spent is always metered.
std::unique_ptr<Environment> make_environment(const ExperimentConfig& config,
                                              const WrapperSpec& wrapper,
                                              const ForceField& field);

// Shortest decimal form that parses back to the same double; "inf"/"-inf"/"nan".
std::string format_double(double value);

// Run output root: $ETANK_RUN_ROOT if set, else "runs".
std::string default_run_root();

struct SeedSummary {
  std::uint64_t seed = 0;
  std::string dir;
  int best_epoch = -1;
  double best_eval_return = 0.0;
  double final_epoch_return = 0.0;
  double max_episode_energy = 0.0;
  int depletions = 0;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::string run_dir;
  std::string hash;
  std::vector<SeedSummary> seeds;
};

using LogSink = std::function<void(const std::string&)>;

// Trains every seed and writes <root>/<name>-<hash12>/seed_<n>/{epochs.csv,
// episodes.csv, checkpoint_best.bin, checkpoint_final.bin, manifest.json} plus
// config.json at the run level. TrainingDiverged propagates with its dump path.
TrainReport run_training(const ExperimentConfig& config, const std::string& root,
                         const LogSink& log = {});

// A deterministic policy restored from a checkpoint along with its experiment.
struct LoadedPolicy {
  Checkpoint checkpoint;
  ExperimentConfig config;
};
LoadedPolicy load_policy(const std::string& checkpoint_path);

struct TaskEnergyReport {
  double e_star = 0.0;
  std::vector<double> episode_energy;  // final energy spent per episode
};

// Ungated evaluation: the tank only meters. Throws DomainError for episodes < 1.
TaskEnergyReport estimate_task_energy(const LoadedPolicy& policy, int episodes,
                                      std::uint64_t seed);

struct EvalOptions {
  WrapperSpec wrapper;  // None or InferenceTank
  ForceField force_field;
  int episodes = 100;
  std::uint64_t seed = 0;
  int final_window = 100;  // steps averaged for the final position error
  std::string steps_dir;   // per-episode step CSVs are written here when non-empty
};

struct EpisodeEval {
  double episode_return = 0.0;
  int length = 0;
  double energy_spent = 0.0;
  bool depleted = false;
  int gated_steps = 0;
  double final_error = 0.0;  // mean of 1 - sin(beta) over the final window
};

struct EvalReport {
  std::vector<EpisodeEval> episodes;
  double mean_return = 0.0;
  double mean_final_error = 0.0;
  double mean_energy = 0.0;
  double max_energy = 0.0;
  int depleted_episodes = 0;
};

// JSON object with optional keys wrapper {kind, e0, epsilon}, force_field
// {magnitude, profile}, episodes, seed, final_window, steps_dir.
EvalOptions parse_eval_options(const std::string& text);

EvalReport evaluate_policy(const LoadedPolicy& policy, const EvalOptions& options);

// Column header of the per-episode step CSV.
inline constexpr const char* kStepCsvHeader =
    "k,beta,beta_dot,w,w_bar,reward,e_k,e_hat_k,gated,depleted,term_cause";

struct RunCurves {
  std::string dir;
  std::string name;
  WrapperSpec wrapper;
  std::vector<std::vector<double>> epoch_return;  // [seed][epoch]
  std::vector<double> max_episode_energy;         // per seed, over all training episodes
};

// Reads a run directory written by run_training. Throws ConfigError on a
// missing or malformed schema.
RunCurves read_run(const std::string& run_dir);

struct CompareReport {
  std::vector<std::string> runs;
  // [run][epoch] mean and std of the epoch return across seeds, aligned on the
  // shortest run.
  std::vector<std::vector<double>> mean_return;
  std::vector<std::vector<double>> std_return;
  std::vector<double> plateau_return;  // mean of the last five aligned epochs
  // Max training episode energy of the first run over the reference of the
  // second: its e0, or its own max energy when it has no finite budget.
  double energy_ratio = 0.0;
  // Standard deviation over epochs of the per-epoch mean difference between
  // the first two runs; zero for a run compared with itself.
  double difference_std = 0.0;
};

CompareReport compare_runs(const std::vector<std::string>& run_dirs);

}  // namespace etank
