#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etank/env.hpp"
#include "etank/neural.hpp"
#include "etank/rng.hpp"

namespace etank {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Pendulum column of the published hyperparameter table plus the SAC defaults
// the table leaves open.
struct SacConfig {
  double actor_lr = 0.005;
  double critic_lr = 0.005;
  double soft_update_coefficient = 0.003;
  int batch_size = 256;
  int epochs = 200;
  int steps_per_epoch = 2500;
  int steps_per_trajectory = 500;
  int steps_before_training = 2500;
  int target_update_period = 5;
  int gradient_steps_per_epoch = 500;
  std::vector<int> hidden_sizes{256, 256};
  double discount = 0.99;
  int replay_capacity = 1'000'000;
  std::optional<double> entropy_lr;  // defaults to actor_lr
  double initial_log_alpha = 0.0;
  int eval_episodes_per_epoch = 2;   // deterministic episodes used to pick the best actor
  std::uint64_t seed = 0;

  double effective_entropy_lr() const { return entropy_lr.value_or(actor_lr); }
  // Throws DomainError when a field is out of range.
  void validate() const;
};

struct Transition {
  std::vector<double> obs;
  double action = 0.0;  // squashed action in [-1, 1]; torque = action * torque_limit
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;   // absorbing: no bootstrap
  bool truncated = false;  // time limit: bootstraps
};

// Column-per-sample view of a minibatch.
struct Batch {
  Matrix obs;
  Matrix actions;      // 1 x B
  Vector rewards;
  Matrix next_obs;
  Vector not_terminal; // 1 - terminal
  std::size_t size() const { return static_cast<std::size_t>(rewards.size()); }
};

// Fixed-capacity FIFO of transitions with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim);

  void add(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  Transition at(std::size_t index) const;

  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  Batch gather(std::span<const std::size_t> indices) const;
  Batch sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::uint64_t inserted_ = 0;
  std::vector<double> obs_, next_obs_, actions_, rewards_;
  std::vector<std::uint8_t> terminal_, truncated_;
};

// log pi(tanh(u)) for a Gaussian pre-squash sample u, including the
// change-of-variables term; finite for every finite u.
double squashed_log_prob(double u, double mean, double log_std);

struct ActionSample {
  double torque = 0.0;    // N m
  double action = 0.0;    // in [-1, 1]
  double log_prob = 0.0;  // of `action`
};

ActionSample sample_action(const NetworkParams& actor, std::span<const double> obs,
                           double torque_limit, Rng& rng);
// Mean action, squashed and scaled.
double deterministic_torque(const NetworkParams& actor, std::span<const double> obs,
                            double torque_limit);

struct CriticLoss {
  double loss1 = 0.0;
  double loss2 = 0.0;
  Vector target;
  Gradients grad1;
  Gradients grad2;
};

// Mean squared Bellman error of both critics against
// y = r + discount * (1 - terminal) * (min target Q(s', a') - alpha log pi(a'|s')),
// with a' = tanh(mean + std * next_noise) drawn from the current actor.
CriticLoss critic_loss_and_gradients(const NetworkParams& actor, const NetworkParams& q1,
                                     const NetworkParams& q2, const NetworkParams& q1_target,
                                     const NetworkParams& q2_target, double alpha,
                                     double discount, const Batch& batch,
                                     const Matrix& next_noise);

struct ActorLoss {
  double loss = 0.0;
  double mean_log_prob = 0.0;
  Gradients grad;
};

// mean(alpha log pi(a|s) - min(Q1, Q2)(s, a)) with a = tanh(mean + std * noise).
ActorLoss actor_loss_and_gradients(const NetworkParams& actor, const NetworkParams& q1,
                                   const NetworkParams& q2, double alpha, const Matrix& obs,
                                   const Matrix& noise);

struct AlphaLoss {
  double loss = 0.0;
  double gradient = 0.0;  // w.r.t. log alpha
};

// -alpha * (mean log pi + target_entropy), alpha = exp(log_alpha).
AlphaLoss alpha_loss_and_gradient(double log_alpha, double mean_log_prob, double target_entropy);

struct ScalarAdam {
  double first = 0.0;
  double second = 0.0;
  std::int64_t step = 0;

  double apply(double value, double gradient, double learning_rate, const AdamHyper& hyper = {});
};

struct UpdateStats {
  double critic_loss = 0.0;  // mean of both critics
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // -mean log pi on the batch
};

class SacAgent {
 public:
  SacAgent(std::size_t obs_dim, double torque_limit, const SacConfig& config, Rng& init_rng);

  ActionSample act(std::span<const double> obs, Rng& rng) const;
  double act_deterministic(std::span<const double> obs) const;

  UpdateStats critic_update(const Batch& batch, Rng& rng);
  UpdateStats actor_and_alpha_update(const Batch& batch, Rng& rng);
  // Both updates, then a target refresh every `target_update_period` calls.
  UpdateStats update(const Batch& batch, Rng& rng);

  double alpha() const;
  bool all_finite() const;
  std::size_t obs_dim() const { return obs_dim_; }
  double torque_limit() const { return torque_limit_; }
  const SacConfig& config() const { return config_; }

  NetworkParams actor;
  NetworkParams q1, q2;
  NetworkParams q1_target, q2_target;
  double log_alpha = 0.0;
  ScalarAdam alpha_adam;
  std::int64_t gradient_steps = 0;
  double target_entropy = -1.0;

 private:
  std::size_t obs_dim_;
  double torque_limit_;
  SacConfig config_;
};

// Applies theta_target <- (1 - tau) theta_target + tau theta to both critic targets.
void soft_update(SacAgent& agent, double tau);

enum class TerminationCause { None, Truncated, Depleted };
const char* to_string(TerminationCause cause);

struct EpisodeRecord {
  int episode = 0;
  int epoch = 0;
  double episode_return = 0.0;
  int length = 0;
  double energy_spent = 0.0;  // final energy spent of the episode
  bool depleted = false;
  TerminationCause cause = TerminationCause::None;
};

struct EpochLog {
  int epoch = 0;
  std::int64_t env_steps = 0;
  double epoch_return = 0.0;        // reward summed over the epoch's steps
  int episodes_completed = 0;
  double mean_episode_return = 0.0; // over episodes that ended in this epoch
  double max_episode_energy = 0.0;
  double mean_episode_energy = 0.0;
  int depletions = 0;
  double alpha = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;
  double eval_return = 0.0;         // mean deterministic return, used for the best checkpoint
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const EpisodeRecord&)> on_episode;
  // Hard cap on per-episode energy spent; any step exceeding it aborts training.
  double energy_cap = std::numeric_limits<double>::infinity();
  // Where a diagnostic dump is written if training diverges (empty: no dump).
  std::string dump_dir;
};

struct TrainResult {
  SacAgent final_agent;
  SacAgent best_agent;  // highest deterministic evaluation return
  int best_epoch = -1;
  double best_eval_return = 0.0;
  std::vector<EpochLog> epochs;
  std::vector<EpisodeRecord> episodes;
};

// Off-policy SAC loop: each epoch collects `steps_per_epoch` transitions
// (uniform random actions until `steps_before_training`), then runs
// `gradient_steps_per_epoch` updates once the replay holds enough data.
// Throws TrainingDiverged on a non-finite loss or parameter.
TrainResult train(const EnvFactory& make_env, const SacConfig& config,
                  const TrainHooks& hooks = {});

// Deterministic-policy episode return on a fresh environment.
struct EpisodeSummary {
  double episode_return = 0.0;
  int length = 0;
  double energy_spent = 0.0;
  bool depleted = false;
};
EpisodeSummary run_deterministic_episode(Environment& env, const NetworkParams& actor, Rng& rng);

}  // namespace etank
