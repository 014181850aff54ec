#pragma once

#include <limits>
#include <span>
#include <vector>

namespace etank {

inline constexpr double kDefaultTankEpsilon = 1e-3;  // J
inline constexpr double kUnboundedBudget = std::numeric_limits<double>::infinity();

enum class RefillMode {
  NoRefill,       // negative mechanical work never flows back into the tank
  RefillAllowed,  // the lossless continuous-time tank, sampled exactly
};

// Discrete virtual energy tank. An infinite `initial` budget turns the tank into
// a pure energy meter: the gate never closes but `spent` is still accumulated.
struct TankState {
  double level = 0.0;    // e_k
  double initial = 0.0;  // e_0
  double spent = 0.0;    // energy that has exited the tank since reset
  double epsilon = kDefaultTankEpsilon;
  RefillMode mode = RefillMode::NoRefill;
  // Set once the level drops below epsilon or an update overdraws the tank.
  bool depleted = false;
  // Energy requested beyond the remaining level by the final, floored update.
  double overdraw = 0.0;

  static TankState full(double e0, double epsilon = kDefaultTankEpsilon,
                        RefillMode mode = RefillMode::NoRefill);

  bool unbounded() const { return initial == kUnboundedBudget; }
  // level / initial in [0, 1]; 1 for an unbounded tank.
  double fraction() const;
};

// w^T dq for NoRefill clipped at zero. Throws DomainError on length mismatch or
// non-finite entries.
double delta_energy(std::span<const double> torque, std::span<const double> displacement,
                    RefillMode mode);

// e <- e - de, spent <- spent + de. A request larger than the level empties the
// tank exactly and flags depletion. Negative de is rejected in NoRefill mode.
TankState update(TankState tank, double de);

// Passes the torque through while level >= epsilon, zero otherwise.
std::vector<double> gate(const TankState& tank, std::span<const double> torque);
double gate(const TankState& tank, double torque);

// Maximum final energy spent over ungated evaluation episodes.
double task_energy(std::span<const double> episode_spent);

// Continuous-time tank driven through the power-preserving interconnection with
// the robot: x_c' = -(w^T / x_c) qdot, V_c = x_c^2 / 2. The robot velocity is
// piecewise constant on the substep grid of `position_trace` (one n-vector per
// grid point), on which the tank state is integrated exactly. Returns V_c at the
// last grid point. Throws DomainError if x_c reaches zero (singular interconnection).
double continuous_tank_oracle(std::span<const std::vector<double>> position_trace,
                              std::span<const double> torque, double v0);

}  // namespace etank
