#include <cmath>
#include <numbers>

#include "doctest.h"
#include "etank/env.hpp"
#include "etank/error.hpp"

using namespace etank;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("reward reference values") {
  CHECK(pendulum_reward(kPi / 2, 0.0, 0.0) == 1.0);
  CHECK(pendulum_reward(-kPi / 2, 0.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // 1 / (2 + 0.1 tanh(1) + 0.02), tanh(1) = 0.7615941559557649
  CHECK(pendulum_reward(0.0, 1.0, 2.0) == doctest::Approx(0.477062952636106).epsilon(1e-13));
  CHECK(pendulum_reward(kPi / 2 + 2 * kPi, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pendulum_reward(kPi / 2, 0.1, 0.0) < 1.0);
  CHECK(pendulum_reward(kPi / 2, 0.0, -0.1) < 1.0);
  CHECK(pendulum_reward(0.3, 1e6, -1e6) > 0.0);
}

TEST_CASE("observation lies on the unit circle with bounded rate") {
  for (double beta : {-7.0, -kPi / 2, 0.0, 1.3, 25.0}) {
    for (double rate : {-50.0, 0.0, 0.7}) {
      const auto o = pendulum_observation({beta, rate});
      REQUIRE(o.size() == 3);
      CHECK(std::abs(o[0] * o[0] + o[1] * o[1] - 1.0) <= 1e-12);
      CHECK(std::abs(o[2]) <= 1.0);
    }
  }
}

TEST_CASE("degenerate reset lands exactly at the hang") {
  PendulumEnv env({}, 500, ResetDistribution{-kPi / 2, 0.0});
  Rng rng = make_rng(0);
  const auto o = env.reset(rng);
  CHECK(env.plant_state().beta == -kPi / 2);
  CHECK(env.plant_state().beta_dot == 0.0);
  CHECK(o[0] == -1.0);
  CHECK(std::abs(o[1]) < 1e-15);
  CHECK(o[2] == 0.0);
}

TEST_CASE("reset distribution moments over 1e5 draws") {
  PendulumEnv env;
  Rng rng = make_rng(123);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto o = env.reset(rng);
    CHECK(o[2] == 0.0);
    const double b = env.plant_state().beta;
    sum += b;
    sum_sq += b * b;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(mean + kPi / 2) <= 0.01);
  CHECK(std::abs(stddev / (0.05 * kPi) - 1.0) <= 0.05);
}

TEST_CASE("episode bookkeeping: truncation at the step limit, never terminal") {
  PendulumEnv env;
  Rng rng = make_rng(4);
  env.reset(rng);
  std::uniform_real_distribution<double> act(-5.0, 5.0);
  for (int k = 1; k <= 500; ++k) {
    const StepResult r = env.step(act(rng));
    CHECK_FALSE(r.terminal);
    CHECK(r.truncated == (k == 500));
    CHECK(r.reward > 0.0);
    CHECK(r.reward <= 1.0);
  }
  CHECK_THROWS_AS(env.step(0.0), DomainError);
  env.reset(rng);
  CHECK(env.steps_taken() == 0);
}

TEST_CASE("action clamp, reward on the post-step state, and zero-policy hang") {
  PendulumEnv env;
  env.set_state({-kPi / 2, 0.0});
  const StepResult r = env.step(7.0);
  CHECK(r.info.applied_torque == 2.5);
  CHECK(r.info.commanded_torque == 2.5);
  CHECK(r.reward == pendulum_reward(r.info.beta, r.info.beta_dot, 2.5));
  CHECK(r.info.beta == env.plant_state().beta);

  env.set_state({-kPi / 2, 0.0});
  for (int k = 0; k < 200; ++k) {
    const StepResult z = env.step(0.0);
    CHECK(z.reward == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(env.step(NAN), DomainError);
}

TEST_CASE("same seed gives an identical episode trace") {
  auto trace = [](std::uint64_t seed) {
    PendulumEnv env;
    Rng rng = make_rng(seed);
    env.reset(rng);
    std::vector<double> out;
    std::uniform_real_distribution<double> act(-2.5, 2.5);
    for (int k = 0; k < 500; ++k) {
      const StepResult r = env.step(act(rng));
      out.push_back(r.info.beta);
      out.push_back(r.reward);
    }
    return out;
  };
  CHECK(trace(7) == trace(7));
  CHECK(trace(7) != trace(8));
}

TEST_CASE("constructor validation") {
  CHECK_THROWS_AS(PendulumEnv({}, 0), DomainError);
  PendulumParams bad;
  bad.torque_limit = 0.0;
  CHECK_THROWS_AS(PendulumEnv{bad}, DomainError);
  CHECK_THROWS_AS(PendulumEnv({}, 500, ResetDistribution{0.0, -1.0}), DomainError);
}
