#include "etank/env.hpp"

#include <algorithm>
#include <cmath>

#include "etank/error.hpp"

namespace etank {

double pendulum_reward(double beta, double beta_dot, double torque) {
  return 1.0 / (1.0 + std::abs(std::sin(beta) - 1.0) + 0.1 * std::abs(std::tanh(beta_dot)) +
                0.01 * std::abs(torque));
}

std::vector<double> pendulum_observation(const PendulumState& state) {
  return {std::sin(state.beta), std::cos(state.beta), std::tanh(state.beta_dot)};
}

PendulumEnv::PendulumEnv(PendulumParams params, int max_steps, ResetDistribution reset)
    : params_(params), max_steps_(max_steps), reset_(reset) {
  params_.validate();
  if (max_steps_ < 1) {
    throw DomainError("episode length must be positive");
  }
  if (!(reset_.stddev >= 0.0)) {
    throw DomainError("reset standard deviation must be non-negative");
  }
}

std::vector<double> PendulumEnv::reset(Rng& rng) {
  double beta = reset_.mean;
  if (reset_.stddev > 0.0) {
    std::normal_distribution<double> angle(reset_.mean, reset_.stddev);
    beta = angle(rng);
  }
  set_state({beta, 0.0});
  return pendulum_observation(state_);
}

void PendulumEnv::set_state(const PendulumState& state) {
  if (!std::isfinite(state.beta) || !std::isfinite(state.beta_dot)) {
    throw DomainError("non-finite pendulum state");
  }
  state_ = state;
  steps_ = 0;
  done_ = false;
}

StepResult PendulumEnv::step(double action_torque, double external_torque) {
  if (!std::isfinite(action_torque)) {
    throw DomainError("non-finite action");
  }
  if (done_) {
    throw DomainError("step on a finished episode; call reset first");
  }
  const double applied = std::clamp(action_torque, -params_.torque_limit, params_.torque_limit);
  const IntervalResult interval =
      simulate_control_interval(state_, applied, external_torque, params_);

  StepResult out;
  out.info.commanded_torque = applied;
  out.info.applied_torque = applied;
  out.info.external_torque = external_torque;
  out.info.delta_beta = interval.state.beta - state_.beta;
  out.info.beta = interval.state.beta;
  out.info.beta_dot = interval.state.beta_dot;
  out.info.injected_energy = interval.injected_energy;
  out.info.external_energy = interval.external_energy;
  out.info.dissipated_energy = interval.dissipated_energy;

  state_ = interval.state;
  ++steps_;
  out.obs = pendulum_observation(state_);
  out.reward = pendulum_reward(state_.beta, state_.beta_dot, applied);
  out.truncated = steps_ >= max_steps_;
  done_ = out.truncated;
  return out;
}

EnvironmentWrapper::EnvironmentWrapper(std::unique_ptr<Environment> inner)
    : inner_(std::move(inner)) {
  if (!inner_) {
    throw DomainError("wrapper needs an inner environment");
  }
}

}  // namespace etank
