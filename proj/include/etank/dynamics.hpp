#pragma once

#include <vector>

namespace etank {

enum class Integrator {
  // Implicit midpoint with a discrete gradient of the potential. The per-substep
  // energy balance E' - E = (tau + delta) * dbeta - friction * dbeta^2 / dt holds
  // to solver precision.
  DiscreteGradient,
  // Velocity first, then position from the new velocity.
  SemiImplicitEuler,
};

// Uniform rod of mass `mass` and length `length` pivoted at one end.
struct PendulumParams {
  double mass = 1.0;            // kg
  double length = 1.0;          // m
  double friction = 0.1;        // N m s / rad
  double gravity = 9.81;        // m / s^2
  double torque_limit = 2.5;    // N m
  double control_period = 0.02; // s (50 Hz)
  int substeps_per_control = 10;
  Integrator integrator = Integrator::DiscreteGradient;

  double inertia() const { return mass * length * length / 3.0; }
  // Coefficient of cos(beta) in the gravity torque.
  double gravity_torque() const { return 0.5 * mass * gravity * length; }
  double substep_dt() const { return control_period / substeps_per_control; }

  // Throws DomainError when any physical invariant is violated.
  void validate() const;
};

// beta = 0 is the rod pointing horizontally right, beta = pi/2 upright. beta is
// never wrapped.
struct PendulumState {
  double beta = 0.0;
  double beta_dot = 0.0;

  friend bool operator==(const PendulumState&, const PendulumState&) = default;
};

// Continuous-time angular acceleration of the rod.
double angular_acceleration(const PendulumState& state, double applied_torque,
                            double external_torque, const PendulumParams& params);

// Total mechanical energy, zero at the hanging rest state.
double mechanical_energy(const PendulumState& state, const PendulumParams& params);

PendulumState substep(const PendulumState& state, double applied_torque, double external_torque,
                      double dt, const PendulumParams& params);

// Substep grid of one control interval: positions[0..N], and the velocity that
// moved the rod across each substep (N entries).
struct IntervalTrace {
  std::vector<double> positions;
  std::vector<double> velocities;
  double dt = 0.0;
};

struct IntervalResult {
  PendulumState state;
  double injected_energy = 0.0;   // quadrature of applied_torque * beta_dot
  double dissipated_energy = 0.0; // quadrature of friction * beta_dot^2
  double external_energy = 0.0;   // quadrature of external_torque * beta_dot
};

// Holds both torques constant over `params.substeps_per_control` substeps. The
// quadratures use the same velocities that advance the position, so the injected
// energy equals applied_torque * (beta_end - beta_start) up to rounding.
IntervalResult simulate_control_interval(const PendulumState& state, double applied_torque,
                                         double external_torque, const PendulumParams& params,
                                         IntervalTrace* trace = nullptr);

}  // namespace etank
