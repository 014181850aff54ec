#pragma once

#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "etank/dynamics.hpp"
#include "etank/rng.hpp"

namespace etank {

inline constexpr int kDefaultEpisodeSteps = 500;

// Per-step physical record of one control interval.
struct StepInfo {
  double commanded_torque = 0.0;  // clamped to the actuator limit, before any gate
  double applied_torque = 0.0;    // what the plant received
  double external_torque = 0.0;   // disturbance, invisible to the agent
  double beta = 0.0;              // post-step
  double beta_dot = 0.0;          // post-step
  double delta_beta = 0.0;        // beta_{k+1} - beta_k
  double injected_energy = 0.0;   // actuator work quadrature
  double external_energy = 0.0;   // disturbance work quadrature
  double dissipated_energy = 0.0; // friction loss quadrature
};

// Present on steps produced by a tank wrapper.
struct TankReport {
  double level = 0.0;
  double fraction = 1.0;
  double spent = 0.0;
  double initial = 0.0;
  bool gated = false;     // applied torque differs from the commanded one
  bool depleted = false;
  double overdraw = 0.0;  // energy drawn beyond the level by the floored final update
};

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
  StepInfo info;
  std::optional<TankReport> tank;
};

// Reward of the swing-up task; in (0, 1], equal to 1 only upright at rest with
// zero torque.
double pendulum_reward(double beta, double beta_dot, double torque);

std::vector<double> pendulum_observation(const PendulumState& state);

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::vector<double> reset(Rng& rng) = 0;
  // `action_torque` is in N m; `external_torque` is the disturbance channel.
  virtual StepResult step(double action_torque, double external_torque = 0.0) = 0;

  virtual std::size_t observation_size() const = 0;
  virtual const PendulumState& plant_state() const = 0;
  virtual const PendulumParams& params() const = 0;
  // True when every reachable reward is > 0.
  virtual bool reward_strictly_positive() const = 0;
};

struct ResetDistribution {
  double mean = -std::numbers::pi / 2.0;
  double stddev = 0.05 * std::numbers::pi;
};

class PendulumEnv final : public Environment {
 public:
  explicit PendulumEnv(PendulumParams params = {}, int max_steps = kDefaultEpisodeSteps,
                       ResetDistribution reset = {});

  std::vector<double> reset(Rng& rng) override;
  StepResult step(double action_torque, double external_torque = 0.0) override;

  std::size_t observation_size() const override { return 3; }
  const PendulumState& plant_state() const override { return state_; }
  const PendulumParams& params() const override { return params_; }
  bool reward_strictly_positive() const override { return true; }

  // Places the plant in an arbitrary state and restarts the step counter.
  void set_state(const PendulumState& state);
  int steps_taken() const { return steps_; }
  int max_steps() const { return max_steps_; }

 private:
  PendulumParams params_;
  int max_steps_;
  ResetDistribution reset_;
  PendulumState state_{-std::numbers::pi / 2.0, 0.0};
  int steps_ = 0;
  bool done_ = false;
};

// Forwards everything to the wrapped environment.
class EnvironmentWrapper : public Environment {
 public:
  explicit EnvironmentWrapper(std::unique_ptr<Environment> inner);

  std::vector<double> reset(Rng& rng) override { return inner_->reset(rng); }
  StepResult step(double action_torque, double external_torque = 0.0) override {
    return inner_->step(action_torque, external_torque);
  }
  std::size_t observation_size() const override { return inner_->observation_size(); }
  const PendulumState& plant_state() const override { return inner_->plant_state(); }
  const PendulumParams& params() const override { return inner_->params(); }
  bool reward_strictly_positive() const override { return inner_->reward_strictly_positive(); }

  Environment& inner() { return *inner_; }

 protected:
  std::unique_ptr<Environment> inner_;
};

}  // namespace etank
