#pragma once

#include <memory>

#include "etank/env.hpp"
#include "etank/tank.hpp"

namespace etank {

// Inference passivization: the commanded torque goes through the tank gate, the
// tank is drained by the gated torque's work, and the episode keeps running
// with a detached controller after depletion. An unbounded budget only meters
// the energy spent.
class InferenceTankEnv final : public EnvironmentWrapper {
 public:
  InferenceTankEnv(std::unique_ptr<Environment> inner, double e0,
                   double epsilon = kDefaultTankEpsilon);

  std::vector<double> reset(Rng& rng) override;
  StepResult step(double action_torque, double external_torque = 0.0) override;

  const TankState& tank() const { return tank_; }

 private:
  double e0_;
  double epsilon_;
  TankState tank_;
};

// Passive training, Extended Termination: no gate; the episode ends with a true
// terminal as soon as the tank level falls below epsilon.
class ExtendedTerminationEnv final : public EnvironmentWrapper {
 public:
  // Throws DomainError if the inner environment can emit non-positive rewards.
  ExtendedTerminationEnv(std::unique_ptr<Environment> inner, double e0,
                         double epsilon = kDefaultTankEpsilon);

  std::vector<double> reset(Rng& rng) override;
  StepResult step(double action_torque, double external_torque = 0.0) override;

  const TankState& tank() const { return tank_; }

 private:
  double e0_;
  double epsilon_;
  TankState tank_;
  bool done_ = false;
};

// Passive training, Extended State: gated like inference and the normalized
// tank level is appended to the observation.
class ExtendedStateEnv final : public EnvironmentWrapper {
 public:
  ExtendedStateEnv(std::unique_ptr<Environment> inner, double e0,
                   double epsilon = kDefaultTankEpsilon);

  std::vector<double> reset(Rng& rng) override;
  StepResult step(double action_torque, double external_torque = 0.0) override;
  std::size_t observation_size() const override { return inner_->observation_size() + 1; }

  const TankState& tank() const { return tank_; }

 private:
  double e0_;
  double epsilon_;
  TankState tank_;
};

enum class ForceProfile {
  Constant,         // delta = +magnitude
  VelocityAligned,  // delta = -magnitude * sign(beta_dot), opposes the motion
};

struct ForceField {
  double magnitude = 0.0;  // N m, >= 0
  ForceProfile profile = ForceProfile::VelocityAligned;

  // Disturbance torque for the state at the start of a control step.
  double torque(const PendulumState& state) const;
};

// Adds a disturbance torque at the joint. It bypasses the agent and any tank.
class ForceFieldEnv final : public EnvironmentWrapper {
 public:
  ForceFieldEnv(std::unique_ptr<Environment> inner, ForceField field);

  StepResult step(double action_torque, double external_torque = 0.0) override;

  const ForceField& field() const { return field_; }

 private:
  ForceField field_;
};

std::unique_ptr<Environment> inference_wrap(std::unique_ptr<Environment> env, double e0,
                                            double epsilon = kDefaultTankEpsilon);
std::unique_ptr<Environment> training_wrap_extended_termination(
    std::unique_ptr<Environment> env, double e0, double epsilon = kDefaultTankEpsilon);
std::unique_ptr<Environment> training_wrap_extended_state(std::unique_ptr<Environment> env,
                                                          double e0,
                                                          double epsilon = kDefaultTankEpsilon);
std::unique_ptr<Environment> apply_force_field(std::unique_ptr<Environment> env, ForceField field);

}  // namespace etank
