#include "etank/dynamics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "etank/error.hpp"

namespace etank {
namespace {

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw DomainError(std::string("non-finite ") + what);
  }
}

// sin(x) / x with a series near zero.
double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

double sinc_derivative(double x) {
  if (std::abs(x) < 1e-4) {
    return -x / 3.0 + x * x * x / 30.0;
  }
  return (x * std::cos(x) - std::sin(x)) / (x * x);
}

struct SubstepOutcome {
  PendulumState state;
  double velocity;  // velocity that carried beta across the substep
};

SubstepOutcome semi_implicit_euler(const PendulumState& s, double torque, double dt,
                                   const PendulumParams& p) {
  const double acc =
      (torque - p.friction * s.beta_dot - p.gravity_torque() * std::cos(s.beta)) / p.inertia();
  const double beta_dot = s.beta_dot + dt * acc;
  return {{s.beta + dt * beta_dot, beta_dot}, beta_dot};
}

// Solves for the displacement D of
//   I (w1 - w0) / h = u - d * wm - k * (sin(b + D) - sin b) / D,   wm = D / h,
//   w1 = 2 wm - w0,
// written as F(D) = 2 I (D / h - w0) + h k cos(b + D/2) sinc(D/2) + d D - h u = 0.
SubstepOutcome discrete_gradient(const PendulumState& s, double torque, double dt,
                                 const PendulumParams& p) {
  const double inertia = p.inertia();
  const double k = p.gravity_torque();
  const double d = p.friction;
  const double b = s.beta;
  const double w0 = s.beta_dot;

  auto residual = [&](double disp) {
    return 2.0 * inertia * (disp / dt - w0) + dt * k * std::cos(b + 0.5 * disp) * sinc(0.5 * disp) +
           d * disp - dt * torque;
  };
  auto slope = [&](double disp) {
    const double half = 0.5 * disp;
    const double dgrad =
        -0.5 * std::sin(b + half) * sinc(half) + 0.5 * std::cos(b + half) * sinc_derivative(half);
    return 2.0 * inertia / dt + d + dt * k * dgrad;
  };

  double disp = semi_implicit_euler(s, torque, dt, p).velocity * dt;
  for (int iter = 0; iter < 50; ++iter) {
    const double step = residual(disp) / slope(disp);
    disp -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(disp) ||
        step == 0.0) {
      break;
    }
  }
  const double mean_velocity = disp / dt;
  return {{b + disp, 2.0 * mean_velocity - w0}, mean_velocity};
}

SubstepOutcome advance(const PendulumState& s, double applied, double external, double dt,
                       const PendulumParams& p) {
  require_finite(s.beta, "beta");
  require_finite(s.beta_dot, "beta_dot");
  require_finite(applied, "applied torque");
  require_finite(external, "external torque");
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw DomainError("substep dt must be positive and finite");
  }
  const double torque = applied + external;
  switch (p.integrator) {
    case Integrator::SemiImplicitEuler:
      return semi_implicit_euler(s, torque, dt, p);
    case Integrator::DiscreteGradient:
      break;
  }
  return discrete_gradient(s, torque, dt, p);
}

}  // namespace

void PendulumParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string(name) + " must be positive and finite");
    }
  };
  positive(mass, "mass");
  positive(length, "length");
  positive(gravity, "gravity");
  positive(torque_limit, "torque_limit");
  positive(control_period, "control_period");
  if (!(friction >= 0.0) || !std::isfinite(friction)) {
    throw DomainError("friction must be non-negative and finite");
  }
  if (substeps_per_control < 1) {
    throw DomainError("substeps_per_control must be a positive integer");
  }
}

double angular_acceleration(const PendulumState& state, double applied_torque,
                            double external_torque, const PendulumParams& params) {
  require_finite(state.beta, "beta");
  require_finite(state.beta_dot, "beta_dot");
  require_finite(applied_torque, "applied torque");
  require_finite(external_torque, "external torque");
  return (applied_torque + external_torque - params.friction * state.beta_dot -
          params.gravity_torque() * std::cos(state.beta)) /
         params.inertia();
}

double mechanical_energy(const PendulumState& state, const PendulumParams& params) {
  require_finite(state.beta, "beta");
  require_finite(state.beta_dot, "beta_dot");
  return 0.5 * params.inertia() * state.beta_dot * state.beta_dot +
         params.gravity_torque() * (1.0 + std::sin(state.beta));
}

PendulumState substep(const PendulumState& state, double applied_torque, double external_torque,
                      double dt, const PendulumParams& params) {
  return advance(state, applied_torque, external_torque, dt, params).state;
}

IntervalResult simulate_control_interval(const PendulumState& state, double applied_torque,
                                         double external_torque, const PendulumParams& params,
                                         IntervalTrace* trace) {
  const double dt = params.substep_dt();
  const int n = params.substeps_per_control;
  if (trace != nullptr) {
    trace->dt = dt;
    trace->positions.assign(1, state.beta);
    trace->velocities.clear();
    trace->positions.reserve(n + 1);
    trace->velocities.reserve(n);
  }

  IntervalResult out;
  out.state = state;
  double displacement_integral = 0.0;
  double dissipation_integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const SubstepOutcome next = advance(out.state, applied_torque, external_torque, dt, params);
    displacement_integral += next.velocity * dt;
    dissipation_integral += next.velocity * next.velocity * dt;
    out.state = next.state;
    if (trace != nullptr) {
      trace->positions.push_back(next.state.beta);
      trace->velocities.push_back(next.velocity);
    }
  }
  // Torques are constant over the interval and factor out of the integrals.
  out.injected_energy = applied_torque * displacement_integral;
  out.external_energy = external_torque * displacement_integral;
  out.dissipated_energy = params.friction * dissipation_integral;
  return out;
}

}  // namespace etank
