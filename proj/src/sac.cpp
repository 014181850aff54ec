#include "etank/sac.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "etank/checkpoint.hpp"
#include "etank/error.hpp"
#include "etank/tank.hpp"

namespace etank {
namespace {

const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2) without cancellation.
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

// Actor output rows: mean, raw log std. log std is clamped; `mask` is 1 where
// the clamp is inactive and the gradient flows.
struct PolicyHead {
  Matrix mean;
  Matrix log_std;
  Matrix mask;
};

PolicyHead split_head(const Matrix& out) {
  PolicyHead h;
  h.mean = out.row(0);
  const Matrix raw = out.row(1);
  h.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  h.mask = ((raw.array() >= kLogStdMin) && (raw.array() <= kLogStdMax)).cast<double>();
  return h;
}

Matrix as_column(std::span<const double> obs) {
  Matrix x(static_cast<Eigen::Index>(obs.size()), 1);
  for (std::size_t i = 0; i < obs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = obs[i];
  return x;
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  }
  return m;
}

void check_actor_input(const NetworkParams& actor, std::size_t obs_size) {
  if (static_cast<std::size_t>(actor.input_size()) != obs_size) {
    throw DomainError("observation has " + std::to_string(obs_size) +
                      " entries, actor expects " + std::to_string(actor.input_size()));
  }
}

}  // namespace

void SacConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string(name) + " must be positive");
    }
  };
  positive(actor_lr, "actor_lr");
  positive(critic_lr, "critic_lr");
  positive(soft_update_coefficient, "soft_update_coefficient");
  positive(batch_size, "batch_size");
  positive(epochs, "epochs");
  positive(steps_per_epoch, "steps_per_epoch");
  positive(steps_per_trajectory, "steps_per_trajectory");
  positive(steps_before_training, "steps_before_training");
  positive(target_update_period, "target_update_period");
  positive(gradient_steps_per_epoch, "gradient_steps_per_epoch");
  positive(discount, "discount");
  positive(replay_capacity, "replay_capacity");
  positive(effective_entropy_lr(), "entropy_lr");
  if (soft_update_coefficient > 1.0) {
    throw DomainError("soft_update_coefficient must be in (0, 1]");
  }
  if (discount > 1.0) {
    throw DomainError("discount must be in (0, 1]");
  }
  if (steps_per_epoch % steps_per_trajectory != 0) {
    throw DomainError("steps_per_epoch must be a multiple of steps_per_trajectory");
  }
  if (hidden_sizes.empty()) {
    throw DomainError("hidden_sizes must list at least one layer");
  }
  for (int h : hidden_sizes) positive(h, "hidden layer size");
  if (eval_episodes_per_epoch < 0) {
    throw DomainError("eval_episodes_per_epoch must be non-negative");
  }
}

// --- replay -------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim)
    : capacity_(capacity), obs_dim_(obs_dim) {
  if (capacity_ == 0 || obs_dim_ == 0) {
    throw DomainError("replay buffer needs positive capacity and observation size");
  }
}

void ReplayBuffer::add(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_) {
    throw DomainError("transition observation size does not match the replay buffer");
  }
  if (t.terminal && t.truncated) {
    throw DomainError("a transition cannot be both terminal and truncated");
  }
  if (size_ < capacity_) {
    // Grow lazily; the full capacity is rarely reached at desk scale.
    obs_.insert(obs_.end(), t.obs.begin(), t.obs.end());
    next_obs_.insert(next_obs_.end(), t.next_obs.begin(), t.next_obs.end());
    actions_.push_back(t.action);
    rewards_.push_back(t.reward);
    terminal_.push_back(t.terminal);
    truncated_.push_back(t.truncated);
    ++size_;
  } else {
    std::copy(t.obs.begin(), t.obs.end(), obs_.begin() + next_ * obs_dim_);
    std::copy(t.next_obs.begin(), t.next_obs.end(), next_obs_.begin() + next_ * obs_dim_);
    actions_[next_] = t.action;
    rewards_[next_] = t.reward;
    terminal_[next_] = t.terminal;
    truncated_[next_] = t.truncated;
  }
  next_ = (next_ + 1) % capacity_;
  ++inserted_;
}

Transition ReplayBuffer::at(std::size_t index) const {
  if (index >= size_) {
    throw DomainError("replay index out of range");
  }
  Transition t;
  t.obs.assign(obs_.begin() + index * obs_dim_, obs_.begin() + (index + 1) * obs_dim_);
  t.next_obs.assign(next_obs_.begin() + index * obs_dim_,
                    next_obs_.begin() + (index + 1) * obs_dim_);
  t.action = actions_[index];
  t.reward = rewards_[index];
  t.terminal = terminal_[index] != 0;
  t.truncated = truncated_[index] != 0;
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) {
    throw DomainError("sampling from an empty replay buffer");
  }
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const auto d = static_cast<Eigen::Index>(obs_dim_);
  Batch b;
  b.obs.resize(d, n);
  b.next_obs.resize(d, n);
  b.actions.resize(1, n);
  b.rewards.resize(n);
  b.not_terminal.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const std::size_t i = indices[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < d; ++r) {
      b.obs(r, c) = obs_[i * obs_dim_ + static_cast<std::size_t>(r)];
      b.next_obs(r, c) = next_obs_[i * obs_dim_ + static_cast<std::size_t>(r)];
    }
    b.actions(0, c) = actions_[i];
    b.rewards(c) = rewards_[i];
    b.not_terminal(c) = terminal_[i] ? 0.0 : 1.0;
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  const auto idx = sample_indices(batch_size, rng);
  return gather(idx);
}

// --- policy -------------------------------------------------------------

double squashed_log_prob(double u, double mean, double log_std) {
  const double z = (u - mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - kHalfLogTwoPi - log_one_minus_tanh_sq(u);
}

ActionSample sample_action(const NetworkParams& actor, std::span<const double> obs,
                           double torque_limit, Rng& rng) {
  check_actor_input(actor, obs.size());
  const PolicyHead head = split_head(forward(actor, as_column(obs)));
  std::normal_distribution<double> n(0.0, 1.0);
  const double mean = head.mean(0, 0);
  const double log_std = head.log_std(0, 0);
  const double u = mean + std::exp(log_std) * n(rng);
  ActionSample s;
  s.action = std::tanh(u);
  s.torque = torque_limit * s.action;
  s.log_prob = squashed_log_prob(u, mean, log_std);
  return s;
}

double deterministic_torque(const NetworkParams& actor, std::span<const double> obs,
                            double torque_limit) {
  check_actor_input(actor, obs.size());
  const Matrix out = forward(actor, as_column(obs));
  return torque_limit * std::tanh(out(0, 0));
}

// --- losses -------------------------------------------------------------

CriticLoss critic_loss_and_gradients(const NetworkParams& actor, const NetworkParams& q1,
                                     const NetworkParams& q2, const NetworkParams& q1_target,
                                     const NetworkParams& q2_target, double alpha,
                                     double discount, const Batch& batch,
                                     const Matrix& next_noise) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (next_noise.rows() != 1 || next_noise.cols() != n) {
    throw DomainError("next-action noise must be 1 x batch");
  }

  const PolicyHead next = split_head(forward(actor, batch.next_obs));
  Matrix next_u = next.mean + (next.log_std.array().exp() * next_noise.array()).matrix();
  Matrix next_a = next_u.array().tanh().matrix();
  Vector next_log_prob(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    next_log_prob(c) = squashed_log_prob(next_u(0, c), next.mean(0, c), next.log_std(0, c));
  }
  const Matrix next_input = stack_rows(batch.next_obs, next_a);
  const Matrix tq1 = forward(q1_target, next_input);
  const Matrix tq2 = forward(q2_target, next_input);

  CriticLoss out;
  out.target.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double soft_value = std::min(tq1(0, c), tq2(0, c)) - alpha * next_log_prob(c);
    out.target(c) = batch.rewards(c) + discount * batch.not_terminal(c) * soft_value;
  }

  const Matrix input = stack_rows(batch.obs, batch.actions);
  ForwardCache c1, c2;
  const Matrix v1 = forward(q1, input, &c1);
  const Matrix v2 = forward(q2, input, &c2);
  const Matrix err1 = v1 - out.target.transpose();
  const Matrix err2 = v2 - out.target.transpose();
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss1 = err1.squaredNorm() * inv_n;
  out.loss2 = err2.squaredNorm() * inv_n;
  out.grad1 = backward(q1, c1, 2.0 * inv_n * err1);
  out.grad2 = backward(q2, c2, 2.0 * inv_n * err2);
  return out;
}

ActorLoss actor_loss_and_gradients(const NetworkParams& actor, const NetworkParams& q1,
                                   const NetworkParams& q2, double alpha, const Matrix& obs,
                                   const Matrix& noise) {
  const Eigen::Index n = obs.cols();
  if (noise.rows() != 1 || noise.cols() != n) {
    throw DomainError("action noise must be 1 x batch");
  }
  ForwardCache actor_cache;
  const PolicyHead head = split_head(forward(actor, obs, &actor_cache));
  const Matrix std_dev = head.log_std.array().exp().matrix();
  const Matrix u = head.mean + std_dev.cwiseProduct(noise);
  const Matrix a = u.array().tanh().matrix();

  const Matrix input = stack_rows(obs, a);
  ForwardCache c1, c2;
  const Matrix v1 = forward(q1, input, &c1);
  const Matrix v2 = forward(q2, input, &c2);

  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix g1 = Matrix::Zero(1, n);
  Matrix g2 = Matrix::Zero(1, n);
  double loss = 0.0;
  double log_prob_sum = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double lp = squashed_log_prob(u(0, c), head.mean(0, c), head.log_std(0, c));
    log_prob_sum += lp;
    const bool first = v1(0, c) <= v2(0, c);
    loss += alpha * lp - (first ? v1(0, c) : v2(0, c));
    (first ? g1 : g2)(0, c) = -inv_n;
  }

  // dL/da through whichever critic is the minimum for each sample.
  const Eigen::Index action_row = obs.rows();
  const Gradients b1 = backward(q1, c1, g1);
  const Gradients b2 = backward(q2, c2, g2);
  const Matrix dl_da = b1.input.row(action_row) + b2.input.row(action_row);

  Matrix head_grad(2, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double ac = a(0, c);
    // d log pi / du = 2 tanh(u) with the noise held fixed.
    const double dl_du = dl_da(0, c) * (1.0 - ac * ac) + alpha * inv_n * 2.0 * ac;
    head_grad(0, c) = dl_du;
    head_grad(1, c) =
        head.mask(0, c) * (dl_du * std_dev(0, c) * noise(0, c) - alpha * inv_n);
  }

  ActorLoss out;
  out.loss = loss * inv_n;
  out.mean_log_prob = log_prob_sum * inv_n;
  out.grad = backward(actor, actor_cache, head_grad);
  return out;
}

AlphaLoss alpha_loss_and_gradient(double log_alpha, double mean_log_prob,
                                  double target_entropy) {
  const double alpha = std::exp(log_alpha);
  const double slack = mean_log_prob + target_entropy;
  return {-alpha * slack, -alpha * slack};
}

double ScalarAdam::apply(double value, double gradient, double learning_rate,
                         const AdamHyper& hyper) {
  ++step;
  first = hyper.beta1 * first + (1.0 - hyper.beta1) * gradient;
  second = hyper.beta2 * second + (1.0 - hyper.beta2) * gradient * gradient;
  const double t = static_cast<double>(step);
  const double m_hat = first / (1.0 - std::pow(hyper.beta1, t));
  const double v_hat = second / (1.0 - std::pow(hyper.beta2, t));
  return value - learning_rate * m_hat / (std::sqrt(v_hat) + hyper.eps);
}

// --- agent --------------------------------------------------------------

SacAgent::SacAgent(std::size_t obs_dim, double torque_limit, const SacConfig& config,
                   Rng& init_rng)
    : obs_dim_(obs_dim), torque_limit_(torque_limit), config_(config) {
  config_.validate();
  if (obs_dim_ == 0 || !(torque_limit_ > 0.0)) {
    throw DomainError("agent needs a positive observation size and torque limit");
  }
  const int in = static_cast<int>(obs_dim_);
  std::vector<int> actor_sizes{in};
  std::vector<int> critic_sizes{in + 1};
  for (int h : config_.hidden_sizes) {
    actor_sizes.push_back(h);
    critic_sizes.push_back(h);
  }
  actor_sizes.push_back(2);
  critic_sizes.push_back(1);
  actor = NetworkParams(actor_sizes, Activation::Relu, init_rng, 0.01);
  q1 = NetworkParams(critic_sizes, Activation::Relu, init_rng);
  q2 = NetworkParams(critic_sizes, Activation::Relu, init_rng);
  q1_target = q1;
  q2_target = q2;
  log_alpha = config_.initial_log_alpha;
}

ActionSample SacAgent::act(std::span<const double> obs, Rng& rng) const {
  return sample_action(actor, obs, torque_limit_, rng);
}

double SacAgent::act_deterministic(std::span<const double> obs) const {
  return deterministic_torque(actor, obs, torque_limit_);
}

double SacAgent::alpha() const { return std::exp(log_alpha); }

bool SacAgent::all_finite() const {
  return actor.all_finite() && q1.all_finite() && q2.all_finite() && q1_target.all_finite() &&
         q2_target.all_finite() && std::isfinite(log_alpha);
}

UpdateStats SacAgent::critic_update(const Batch& batch, Rng& rng) {
  const Matrix noise = standard_normal(1, static_cast<Eigen::Index>(batch.size()), rng);
  const CriticLoss loss = critic_loss_and_gradients(actor, q1, q2, q1_target, q2_target, alpha(),
                                                    config_.discount, batch, noise);
  adam_step(q1, loss.grad1, config_.critic_lr);
  adam_step(q2, loss.grad2, config_.critic_lr);
  UpdateStats s;
  s.critic_loss = 0.5 * (loss.loss1 + loss.loss2);
  s.alpha = alpha();
  return s;
}

UpdateStats SacAgent::actor_and_alpha_update(const Batch& batch, Rng& rng) {
  const Matrix noise = standard_normal(1, static_cast<Eigen::Index>(batch.size()), rng);
  const ActorLoss loss = actor_loss_and_gradients(actor, q1, q2, alpha(), batch.obs, noise);
  const AlphaLoss a_loss = alpha_loss_and_gradient(log_alpha, loss.mean_log_prob, target_entropy);
  adam_step(actor, loss.grad, config_.actor_lr);
  log_alpha = alpha_adam.apply(log_alpha, a_loss.gradient, config_.effective_entropy_lr());
  UpdateStats s;
  s.actor_loss = loss.loss;
  s.alpha_loss = a_loss.loss;
  s.entropy = -loss.mean_log_prob;
  s.alpha = alpha();
  return s;
}

UpdateStats SacAgent::update(const Batch& batch, Rng& rng) {
  UpdateStats s = critic_update(batch, rng);
  const UpdateStats a = actor_and_alpha_update(batch, rng);
  s.actor_loss = a.actor_loss;
  s.alpha_loss = a.alpha_loss;
  s.entropy = a.entropy;
  s.alpha = a.alpha;
  ++gradient_steps;
  if (gradient_steps % config_.target_update_period == 0) {
    soft_update(*this, config_.soft_update_coefficient);
  }
  return s;
}

void soft_update(SacAgent& agent, double tau) {
  soft_update(agent.q1_target, agent.q1, tau);
  soft_update(agent.q2_target, agent.q2, tau);
}

const char* to_string(TerminationCause cause) {
  switch (cause) {
    case TerminationCause::Truncated:
      return "truncated";
    case TerminationCause::Depleted:
      return "depleted";
    case TerminationCause::None:
      break;
  }
  return "none";
}

// --- training loop ------------------------------------------------------

EpisodeSummary run_deterministic_episode(Environment& env, const NetworkParams& actor, Rng& rng) {
  EpisodeSummary s;
  std::vector<double> obs = env.reset(rng);
  const double limit = env.params().torque_limit;
  for (;;) {
    const StepResult r = env.step(deterministic_torque(actor, obs, limit));
    s.episode_return += r.reward;
    ++s.length;
    if (r.tank) {
      s.energy_spent = r.tank->spent;
      s.depleted = s.depleted || r.tank->depleted;
    } else {
      s.energy_spent += std::max(0.0, r.info.applied_torque * r.info.delta_beta);
    }
    obs = r.obs;
    if (r.terminal || r.truncated) break;
  }
  return s;
}

namespace {

[[noreturn]] void diverged(const SacAgent& agent, const TrainHooks& hooks, int epoch,
                           const UpdateStats& stats) {
  std::string dump;
  if (!hooks.dump_dir.empty()) {
    std::filesystem::create_directories(hooks.dump_dir);
    dump = (std::filesystem::path(hooks.dump_dir) / "diverged_state.bin").string();
    save_agent_checkpoint(dump, agent, "{}", "");
    std::ofstream info(std::filesystem::path(hooks.dump_dir) / "diverged_state.txt");
    info << "epoch " << epoch << "\ngradient_steps " << agent.gradient_steps << "\ncritic_loss "
         << stats.critic_loss << "\nactor_loss " << stats.actor_loss << "\nalpha " << stats.alpha
         << "\nlog_alpha " << agent.log_alpha << '\n';
  }
  throw TrainingDiverged("non-finite loss or parameter at epoch " + std::to_string(epoch) +
                             ", gradient step " + std::to_string(agent.gradient_steps),
                         dump);
}

}  // namespace

TrainResult train(const EnvFactory& make_env, const SacConfig& config, const TrainHooks& hooks) {
  config.validate();
  std::unique_ptr<Environment> env = make_env();
  std::unique_ptr<Environment> eval_env = make_env();
  const double limit = env->params().torque_limit;
  const std::size_t obs_dim = env->observation_size();

  Rng init_rng = make_rng(config.seed, 1);
  Rng env_rng = make_rng(config.seed, 2);
  Rng action_rng = make_rng(config.seed, 3);
  Rng update_rng = make_rng(config.seed, 4);

  SacAgent agent(obs_dim, limit, config, init_rng);
  TrainResult result{agent, agent, -1, 0.0, {}, {}};
  ReplayBuffer replay(static_cast<std::size_t>(config.replay_capacity), obs_dim);
  std::uniform_real_distribution<double> warmup(-1.0, 1.0);

  std::vector<double> obs = env->reset(env_rng);
  EpisodeRecord episode;
  double episode_energy = 0.0;
  std::int64_t env_steps = 0;
  int episode_index = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    double energy_sum = 0.0;
    double return_sum = 0.0;

    for (int s = 0; s < config.steps_per_epoch; ++s) {
      double action = 0.0;
      if (env_steps < config.steps_before_training) {
        action = warmup(action_rng);
      } else {
        action = agent.act(obs, action_rng).action;
      }
      const StepResult r = env->step(limit * action);
      ++env_steps;

      if (r.tank) {
        episode_energy = r.tank->spent;
        episode.depleted = episode.depleted || r.tank->depleted;
      } else {
        episode_energy += std::max(0.0, r.info.applied_torque * r.info.delta_beta);
      }
      if (episode_energy > hooks.energy_cap) {
        throw DomainError("episode energy " + std::to_string(episode_energy) +
                          " exceeds the budget " + std::to_string(hooks.energy_cap));
      }

      replay.add({obs, action, r.reward, r.obs, r.terminal, r.truncated && !r.terminal});
      log.epoch_return += r.reward;
      episode.episode_return += r.reward;
      ++episode.length;
      obs = r.obs;

      if (r.terminal || r.truncated) {
        episode.episode = episode_index++;
        episode.epoch = epoch;
        episode.energy_spent = episode_energy;
        episode.cause = r.terminal ? TerminationCause::Depleted : TerminationCause::Truncated;
        result.episodes.push_back(episode);
        if (hooks.on_episode) hooks.on_episode(episode);

        ++log.episodes_completed;
        return_sum += episode.episode_return;
        energy_sum += episode.energy_spent;
        log.max_episode_energy = std::max(log.max_episode_energy, episode.energy_spent);
        if (episode.depleted) ++log.depletions;

        episode = EpisodeRecord{};
        episode_energy = 0.0;
        obs = env->reset(env_rng);
      }
    }

    if (replay.size() >= static_cast<std::size_t>(config.steps_before_training) &&
        replay.size() >= static_cast<std::size_t>(config.batch_size)) {
      double critic_sum = 0.0, actor_sum = 0.0, entropy_sum = 0.0;
      for (int g = 0; g < config.gradient_steps_per_epoch; ++g) {
        const Batch batch = replay.sample(static_cast<std::size_t>(config.batch_size), update_rng);
        const UpdateStats stats = agent.update(batch, update_rng);
        if (!std::isfinite(stats.critic_loss) || !std::isfinite(stats.actor_loss) ||
            !std::isfinite(stats.alpha)) {
          diverged(agent, hooks, epoch, stats);
        }
        critic_sum += stats.critic_loss;
        actor_sum += stats.actor_loss;
        entropy_sum += stats.entropy;
      }
      if (!agent.all_finite()) {
        diverged(agent, hooks, epoch, {});
      }
      const double n = config.gradient_steps_per_epoch;
      log.critic_loss = critic_sum / n;
      log.actor_loss = actor_sum / n;
      log.entropy = entropy_sum / n;
    }

    log.env_steps = env_steps;
    log.alpha = agent.alpha();
    if (log.episodes_completed > 0) {
      log.mean_episode_return = return_sum / log.episodes_completed;
      log.mean_episode_energy = energy_sum / log.episodes_completed;
    }

    if (config.eval_episodes_per_epoch > 0) {
      Rng eval_rng = make_rng(config.seed, 5);
      double total = 0.0;
      for (int e = 0; e < config.eval_episodes_per_epoch; ++e) {
        total += run_deterministic_episode(*eval_env, agent.actor, eval_rng).episode_return;
      }
      log.eval_return = total / config.eval_episodes_per_epoch;
    } else {
      log.eval_return = log.epoch_return;
    }
    if (result.best_epoch < 0 || log.eval_return > result.best_eval_return) {
      result.best_epoch = epoch;
      result.best_eval_return = log.eval_return;
      result.best_agent = agent;
    }

    result.epochs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
  }
  result.final_agent = std::move(agent);
  return result;
}

}  // namespace etank
