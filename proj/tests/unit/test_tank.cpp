#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "etank/dynamics.hpp"
#include "etank/error.hpp"
#include "etank/rng.hpp"
#include "etank/tank.hpp"

using namespace etank;

namespace {

double de1(double w, double dq, RefillMode mode) {
  const std::vector<double> wv{w}, dqv{dq};
  return delta_energy(wv, dqv, mode);
}

}  // namespace

TEST_CASE("delta_energy in both modes") {
  CHECK(de1(0.0, 0.3, RefillMode::NoRefill) == 0.0);
  CHECK(de1(2.0, 0.15, RefillMode::NoRefill) == doctest::Approx(0.3));
  CHECK(de1(2.0, 0.15, RefillMode::RefillAllowed) == doctest::Approx(0.3));
  CHECK(de1(2.0, -0.15, RefillMode::NoRefill) == 0.0);
  CHECK(de1(2.0, -0.15, RefillMode::RefillAllowed) == doctest::Approx(-0.3));

  const std::vector<double> w{1.0, -2.0, 0.5}, dq{0.1, 0.2, 0.4};
  CHECK(delta_energy(w, dq, RefillMode::RefillAllowed) == doctest::Approx(-0.1));
  const std::vector<double> short_dq{0.1};
  CHECK_THROWS_AS(delta_energy(w, short_dq, RefillMode::NoRefill), DomainError);
  const std::vector<double> nan_dq{0.1, NAN, 0.0};
  CHECK_THROWS_AS(delta_energy(w, nan_dq, RefillMode::NoRefill), DomainError);
}

TEST_CASE("update arithmetic, identity and flooring") {
  TankState t = TankState::full(10.0);
  t = update(t, 0.3);
  CHECK(t.level == doctest::Approx(9.7));
  CHECK(t.spent == doctest::Approx(0.3));
  CHECK_FALSE(t.depleted);

  const TankState same = update(t, 0.0);
  CHECK(same.level == t.level);
  CHECK(same.spent == t.spent);

  TankState low = TankState::full(10.0);
  low = update(low, 9.8);
  low = update(low, 0.5);
  CHECK(low.level == 0.0);
  CHECK(low.spent == 10.0);
  CHECK(low.depleted);
  CHECK(low.overdraw == doctest::Approx(0.3));

  CHECK_THROWS_AS(update(TankState::full(1.0), -0.1), DomainError);
  CHECK_THROWS_AS(update(TankState::full(1.0), NAN), DomainError);
  CHECK_THROWS_AS(TankState::full(-1.0), DomainError);
}

TEST_CASE("refill mode accepts negative increments") {
  TankState t = TankState::full(5.0, kDefaultTankEpsilon, RefillMode::RefillAllowed);
  t = update(t, 1.0);
  t = update(t, -0.4);
  CHECK(t.level == doctest::Approx(4.4));
}

TEST_CASE("gate passes at or above epsilon and zeroes below") {
  TankState t = TankState::full(5.0);
  CHECK(gate(t, 1.2) == 1.2);
  t.level = 0.0005;
  CHECK(gate(t, 1.2) == 0.0);
  t.level = t.epsilon;
  CHECK(gate(t, 1.2) == 1.2);

  const std::vector<double> w{1.0, -3.0};
  t.level = 0.0;
  CHECK(gate(t, w) == std::vector<double>{0.0, 0.0});
  for (double level : {0.0, 0.0009, 0.001, 2.0}) {
    t.level = level;
    const auto once = gate(t, w);
    CHECK(gate(t, once) == once);
  }
}

TEST_CASE("task energy is the maximum") {
  const std::vector<double> a{3.1, 2.8, 3.4};
  CHECK(task_energy(a) == 3.4);
  const std::vector<double> one{5.0};
  CHECK(task_energy(one) == 5.0);
  CHECK_THROWS_AS(task_energy(std::vector<double>{}), DomainError);
}

TEST_CASE("unbounded tank meters energy but never gates") {
  TankState t = TankState::full(kUnboundedBudget);
  CHECK(t.unbounded());
  for (int i = 0; i < 100; ++i) t = update(t, 1.5);
  CHECK(t.spent == doctest::Approx(150.0));
  CHECK(gate(t, 2.0) == 2.0);
  CHECK(t.fraction() == 1.0);
  CHECK_FALSE(t.depleted);
}

TEST_CASE("continuous oracle: zero torque and constant torque") {
  const std::vector<std::vector<double>> trace{{0.0}, {0.1}, {0.25}, {0.3}};
  CHECK(continuous_tank_oracle(trace, std::vector<double>{0.0}, 4.0) == 4.0);
  CHECK(continuous_tank_oracle(trace, std::vector<double>{1.5}, 4.0) ==
        doctest::Approx(4.0 - 1.5 * 0.3).epsilon(1e-15));
  CHECK_THROWS_AS(continuous_tank_oracle(trace, std::vector<double>{100.0}, 1.0), DomainError);
}

// Clipping negative work can only withdraw more: the NoRefill level sits at or
// below the lossless level at every step, i.e. its dissipation margin dominates.
TEST_CASE("NoRefill withdraws at least as much as RefillAllowed pathwise") {
  const PendulumParams p;
  Rng rng = make_rng(31);
  std::uniform_real_distribution<double> torque(-2.5, 2.5);
  for (int episode = 0; episode < 20; ++episode) {
    PendulumState s{-std::numbers::pi / 2, 0.0};
    TankState no = TankState::full(50.0);
    TankState re = TankState::full(50.0, kDefaultTankEpsilon, RefillMode::RefillAllowed);
    double previous_spent = 0.0;
    for (int k = 0; k < 500; ++k) {
      const double w = torque(rng);
      const IntervalResult r = simulate_control_interval(s, w, 0.0, p);
      const std::vector<double> wv{w}, dq{r.state.beta - s.beta};
      no = update(no, delta_energy(wv, dq, RefillMode::NoRefill));
      re = update(re, delta_energy(wv, dq, RefillMode::RefillAllowed));
      CHECK(no.level <= re.level + 1e-12);
      CHECK(no.spent >= previous_spent);
      CHECK(no.level + no.spent == doctest::Approx(no.initial).epsilon(1e-12));
      CHECK(no.level >= 0.0);
      CHECK(no.level <= no.initial);
      previous_spent = no.spent;
      s = r.state;
    }
  }
}
