#include "etank/tank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "etank/error.hpp"

namespace etank {

TankState TankState::full(double e0, double epsilon, RefillMode mode) {
  if (std::isnan(e0) || e0 < 0.0) {
    throw DomainError("initial tank energy must be non-negative");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("tank epsilon must be non-negative and finite");
  }
  TankState tank;
  tank.level = e0;
  tank.initial = e0;
  tank.epsilon = epsilon;
  tank.mode = mode;
  tank.depleted = e0 < epsilon;
  return tank;
}

double TankState::fraction() const {
  if (unbounded()) {
    return 1.0;
  }
  if (initial <= 0.0) {
    return 0.0;
  }
  return std::clamp(level / initial, 0.0, 1.0);
}

double delta_energy(std::span<const double> torque, std::span<const double> displacement,
                    RefillMode mode) {
  if (torque.size() != displacement.size()) {
    throw DomainError("torque and displacement lengths differ (" + std::to_string(torque.size()) +
                      " vs " + std::to_string(displacement.size()) + ")");
  }
  double work = 0.0;
  for (std::size_t i = 0; i < torque.size(); ++i) {
    if (!std::isfinite(torque[i]) || !std::isfinite(displacement[i])) {
      throw DomainError("non-finite torque or displacement");
    }
    work += torque[i] * displacement[i];
  }
  if (mode == RefillMode::NoRefill) {
    return std::max(0.0, work);
  }
  return work;
}

TankState update(TankState tank, double de) {
  if (!std::isfinite(de)) {
    throw DomainError("non-finite energy increment");
  }
  if (tank.mode == RefillMode::NoRefill && de < 0.0) {
    throw DomainError("negative energy increment in NoRefill mode");
  }
  if (de > tank.level) {
    tank.overdraw = de - tank.level;
    // Everything that was left is gone; assign rather than accumulate so
    // rounding cannot report more than the initial budget.
    tank.spent = std::isfinite(tank.initial) ? tank.initial : tank.spent + tank.level;
    tank.level = 0.0;
    tank.depleted = true;
    return tank;
  }
  tank.level -= de;
  tank.spent = std::min(tank.spent + de, tank.initial);
  if (tank.level < tank.epsilon) {
    tank.depleted = true;
  }
  return tank;
}

double gate(const TankState& tank, double torque) {
  return tank.level >= tank.epsilon ? torque : 0.0;
}

std::vector<double> gate(const TankState& tank, std::span<const double> torque) {
  if (tank.level >= tank.epsilon) {
    return {torque.begin(), torque.end()};
  }
  return std::vector<double>(torque.size(), 0.0);
}

double task_energy(std::span<const double> episode_spent) {
  if (episode_spent.empty()) {
    throw DomainError("task energy needs at least one episode");
  }
  return *std::max_element(episode_spent.begin(), episode_spent.end());
}

double continuous_tank_oracle(std::span<const std::vector<double>> position_trace,
                              std::span<const double> torque, double v0) {
  if (!(v0 >= 0.0)) {
    throw DomainError("tank energy must be non-negative");
  }
  // Carry x_c^2 rather than x_c so a zero-power interval returns v0 bit-exactly.
  double x_c_sq = 2.0 * v0;
  for (std::size_t i = 0; i + 1 < position_trace.size(); ++i) {
    const auto& q0 = position_trace[i];
    const auto& q1 = position_trace[i + 1];
    if (q0.size() != torque.size() || q1.size() != torque.size()) {
      throw DomainError("position trace and torque lengths differ");
    }
    // With qdot constant over the substep, d(x_c^2)/dt = -2 w^T qdot integrates
    // to x_c^2 - 2 w^T (q1 - q0).
    double power_integral = 0.0;
    for (std::size_t j = 0; j < torque.size(); ++j) {
      power_integral += torque[j] * (q1[j] - q0[j]);
    }
    x_c_sq -= 2.0 * power_integral;
    if (x_c_sq < 0.0) {
      throw DomainError("continuous tank reached zero: interconnection is singular");
    }
  }
  return 0.5 * x_c_sq;
}

}  // namespace etank
