#include "etank/passivize.hpp"

#include <algorithm>
#include <cmath>

#include "etank/error.hpp"

namespace etank {
namespace {

double clamp_torque(const Environment& env, double torque) {
  if (!std::isfinite(torque)) {
    throw DomainError("non-finite action");
  }
  const double limit = env.params().torque_limit;
  return std::clamp(torque, -limit, limit);
}

// Drains the tank by the work of `applied` over the realized displacement.
TankState drain(const TankState& tank, double applied, double delta_beta) {
  const double de = delta_energy(std::span(&applied, 1), std::span(&delta_beta, 1), tank.mode);
  return update(tank, de);
}

TankReport report(const TankState& tank, bool gated) {
  return {tank.level,   tank.fraction(), tank.spent,    tank.initial,
          gated,        tank.depleted,   tank.overdraw};
}

}  // namespace

InferenceTankEnv::InferenceTankEnv(std::unique_ptr<Environment> inner, double e0, double epsilon)
    : EnvironmentWrapper(std::move(inner)),
      e0_(e0),
      epsilon_(epsilon),
      tank_(TankState::full(e0, epsilon)) {}

std::vector<double> InferenceTankEnv::reset(Rng& rng) {
  tank_ = TankState::full(e0_, epsilon_);
  return inner_->reset(rng);
}

StepResult InferenceTankEnv::step(double action_torque, double external_torque) {
  const double commanded = clamp_torque(*this, action_torque);
  // The gate reads the level at the start of the step.
  const double applied = gate(tank_, commanded);
  StepResult out = inner_->step(applied, external_torque);
  tank_ = drain(tank_, applied, out.info.delta_beta);
  out.info.commanded_torque = commanded;
  out.tank = report(tank_, applied != commanded);
  return out;
}

ExtendedTerminationEnv::ExtendedTerminationEnv(std::unique_ptr<Environment> inner, double e0,
                                               double epsilon)
    : EnvironmentWrapper(std::move(inner)),
      e0_(e0),
      epsilon_(epsilon),
      tank_(TankState::full(e0, epsilon)) {
  if (!inner_->reward_strictly_positive()) {
    throw DomainError(
        "extended termination requires a strictly positive reward: otherwise early depletion "
        "can raise the return");
  }
}

std::vector<double> ExtendedTerminationEnv::reset(Rng& rng) {
  tank_ = TankState::full(e0_, epsilon_);
  done_ = false;
  return inner_->reset(rng);
}

StepResult ExtendedTerminationEnv::step(double action_torque, double external_torque) {
  if (done_) {
    throw DomainError("step on a terminated episode; call reset first");
  }
  const double commanded = clamp_torque(*this, action_torque);
  StepResult out = inner_->step(commanded, external_torque);
  tank_ = drain(tank_, commanded, out.info.delta_beta);
  if (tank_.level < tank_.epsilon) {
    tank_.depleted = true;
    out.terminal = true;
    out.truncated = false;
  }
  done_ = out.terminal || out.truncated;
  out.tank = report(tank_, false);
  return out;
}

ExtendedStateEnv::ExtendedStateEnv(std::unique_ptr<Environment> inner, double e0, double epsilon)
    : EnvironmentWrapper(std::move(inner)),
      e0_(e0),
      epsilon_(epsilon),
      tank_(TankState::full(e0, epsilon)) {}

std::vector<double> ExtendedStateEnv::reset(Rng& rng) {
  tank_ = TankState::full(e0_, epsilon_);
  std::vector<double> obs = inner_->reset(rng);
  obs.push_back(tank_.fraction());
  return obs;
}

StepResult ExtendedStateEnv::step(double action_torque, double external_torque) {
  const double commanded = clamp_torque(*this, action_torque);
  const double applied = gate(tank_, commanded);
  StepResult out = inner_->step(applied, external_torque);
  tank_ = drain(tank_, applied, out.info.delta_beta);
  out.info.commanded_torque = commanded;
  out.obs.push_back(tank_.fraction());
  out.tank = report(tank_, applied != commanded);
  return out;
}

double ForceField::torque(const PendulumState& state) const {
  switch (profile) {
    case ForceProfile::Constant:
      return magnitude;
    case ForceProfile::VelocityAligned:
      if (state.beta_dot > 0.0) return -magnitude;
      if (state.beta_dot < 0.0) return magnitude;
      return 0.0;
  }
  return 0.0;
}

ForceFieldEnv::ForceFieldEnv(std::unique_ptr<Environment> inner, ForceField field)
    : EnvironmentWrapper(std::move(inner)), field_(field) {
  if (!(field_.magnitude >= 0.0) || !std::isfinite(field_.magnitude)) {
    throw DomainError("force field magnitude must be non-negative and finite");
  }
}

StepResult ForceFieldEnv::step(double action_torque, double external_torque) {
  return inner_->step(action_torque, external_torque + field_.torque(plant_state()));
}

std::unique_ptr<Environment> inference_wrap(std::unique_ptr<Environment> env, double e0,
                                            double epsilon) {
  return std::make_unique<InferenceTankEnv>(std::move(env), e0, epsilon);
}

std::unique_ptr<Environment> training_wrap_extended_termination(std::unique_ptr<Environment> env,
                                                                double e0, double epsilon) {
  return std::make_unique<ExtendedTerminationEnv>(std::move(env), e0, epsilon);
}

std::unique_ptr<Environment> training_wrap_extended_state(std::unique_ptr<Environment> env,
                                                          double e0, double epsilon) {
  return std::make_unique<ExtendedStateEnv>(std::move(env), e0, epsilon);
}

std::unique_ptr<Environment> apply_force_field(std::unique_ptr<Environment> env,
                                               ForceField field) {
  return std::make_unique<ForceFieldEnv>(std::move(env), field);
}

}  // namespace etank
