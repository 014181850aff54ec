#include <cmath>
#include <numeric>

#include "doctest.h"
#include "etank/error.hpp"
#include "etank/passivize.hpp"
#include "etank/sac.hpp"
#include "finite_difference.hpp"

using namespace etank;
using etank::testing::max_relative_error;
using etank::testing::numeric_gradient;

namespace {

struct TinyProblem {
  NetworkParams actor, q1, q2, q1_target, q2_target;
  Batch batch;
  Matrix noise, next_noise;
};

TinyProblem make_problem(Activation act, std::uint64_t seed, int batch_size = 6) {
  Rng rng = make_rng(seed);
  TinyProblem p;
  // Larger output scale than the training init so the policy head is not ~0.
  p.actor = NetworkParams({3, 8, 8, 2}, act, rng, 0.5);
  p.q1 = NetworkParams({4, 8, 8, 1}, act, rng);
  p.q2 = NetworkParams({4, 8, 8, 1}, act, rng);
  p.q1_target = NetworkParams({4, 8, 8, 1}, act, rng);
  p.q2_target = NetworkParams({4, 8, 8, 1}, act, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto b = static_cast<Eigen::Index>(batch_size);
  p.batch.obs = Matrix(3, b);
  p.batch.next_obs = Matrix(3, b);
  p.batch.actions = Matrix(1, b);
  p.batch.rewards = Vector(b);
  p.batch.not_terminal = Vector(b);
  p.noise = Matrix(1, b);
  p.next_noise = Matrix(1, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    for (Eigen::Index r = 0; r < 3; ++r) {
      p.batch.obs(r, c) = u(rng);
      p.batch.next_obs(r, c) = u(rng);
    }
    p.batch.actions(0, c) = u(rng);
    p.batch.rewards(c) = 0.5 + 0.5 * u(rng);
    p.batch.not_terminal(c) = c % 3 == 0 ? 0.0 : 1.0;
    p.noise(0, c) = n(rng);
    p.next_noise(0, c) = n(rng);
  }
  return p;
}

}  // namespace

TEST_CASE("critic gradients match central finite differences") {
  for (Activation act : {Activation::Relu, Activation::Tanh}) {
    TinyProblem p = make_problem(act, 11);
    const double alpha = 0.2;
    const CriticLoss loss = critic_loss_and_gradients(p.actor, p.q1, p.q2, p.q1_target,
                                                      p.q2_target, alpha, 0.99, p.batch,
                                                      p.next_noise);
    auto loss_of = [&](int which) {
      return [&, which] {
        const CriticLoss l = critic_loss_and_gradients(p.actor, p.q1, p.q2, p.q1_target,
                                                       p.q2_target, alpha, 0.99, p.batch,
                                                       p.next_noise);
        return which == 1 ? l.loss1 : l.loss2;
      };
    };
    CHECK(max_relative_error(flatten(loss.grad1.layers), numeric_gradient(p.q1, loss_of(1))) <=
          1e-4);
    CHECK(max_relative_error(flatten(loss.grad2.layers), numeric_gradient(p.q2, loss_of(2))) <=
          1e-4);
  }
}

TEST_CASE("actor gradient matches finite differences through squash and min-critic") {
  for (Activation act : {Activation::Relu, Activation::Tanh}) {
    TinyProblem p = make_problem(act, 23);
    const double alpha = 0.3;
    const ActorLoss loss =
        actor_loss_and_gradients(p.actor, p.q1, p.q2, alpha, p.batch.obs, p.noise);
    const auto numeric = numeric_gradient(p.actor, [&] {
      return actor_loss_and_gradients(p.actor, p.q1, p.q2, alpha, p.batch.obs, p.noise).loss;
    });
    CHECK(max_relative_error(flatten(loss.grad.layers), numeric) <= 1e-4);
  }
}

TEST_CASE("alpha gradient matches finite differences") {
  for (double log_alpha : {-3.0, -0.5, 0.0, 1.2}) {
    for (double mean_log_prob : {-2.0, 0.4, 1.5}) {
      const AlphaLoss a = alpha_loss_and_gradient(log_alpha, mean_log_prob, -1.0);
      const double numeric = etank::testing::numeric_derivative(
          [&](double x) { return alpha_loss_and_gradient(x, mean_log_prob, -1.0).loss; },
          log_alpha);
      CHECK(std::abs(a.gradient - numeric) <= 1e-4 * std::max(1e-8, std::abs(numeric)));
    }
  }
}

TEST_CASE("critic target: terminal transitions and zero discount do not bootstrap") {
  TinyProblem p = make_problem(Activation::Relu, 5);
  const CriticLoss l = critic_loss_and_gradients(p.actor, p.q1, p.q2, p.q1_target, p.q2_target,
                                                 0.2, 0.99, p.batch, p.next_noise);
  for (Eigen::Index c = 0; c < l.target.size(); ++c) {
    if (p.batch.not_terminal(c) == 0.0) {
      CHECK(l.target(c) == p.batch.rewards(c));
    } else {
      CHECK(l.target(c) != p.batch.rewards(c));
    }
  }
  const CriticLoss z = critic_loss_and_gradients(p.actor, p.q1, p.q2, p.q1_target, p.q2_target,
                                                 0.2, 0.0, p.batch, p.next_noise);
  for (Eigen::Index c = 0; c < z.target.size(); ++c) {
    CHECK(z.target(c) == p.batch.rewards(c));
  }
}

TEST_CASE("alpha decreases while policy entropy stays above the target") {
  SacConfig cfg;
  cfg.hidden_sizes = {8, 8};
  Rng rng = make_rng(3);
  SacAgent agent(3, 2.5, cfg, rng);
  // Entropy = -mean log pi = 0.5 > target -1: slack = log pi + target < 0.
  double previous = agent.log_alpha;
  for (int i = 0; i < 50; ++i) {
    const AlphaLoss l = alpha_loss_and_gradient(agent.log_alpha, -0.5, agent.target_entropy);
    agent.log_alpha = agent.alpha_adam.apply(agent.log_alpha, l.gradient, 0.005);
    CHECK(agent.log_alpha < previous);
    CHECK(agent.alpha() > 0.0);
    previous = agent.log_alpha;
  }
}

TEST_CASE("squashed log-prob stays finite under heavy sampling") {
  Rng rng = make_rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> mean(-30.0, 30.0);
  std::uniform_real_distribution<double> log_std(kLogStdMin, kLogStdMax);
  bool all_finite = true;
  for (int i = 0; i < 1'000'000; ++i) {
    const double m = mean(rng);
    const double ls = log_std(rng);
    const double u = m + std::exp(ls) * n(rng);
    all_finite = all_finite && std::isfinite(squashed_log_prob(u, m, ls));
  }
  CHECK(all_finite);
}

TEST_CASE("squashed log-prob integrates to one over the action interval") {
  // Change of variables check: integral of pi(a) da over (-1, 1) by midpoint rule in a.
  const double mean = 0.3, log_std = -0.4;
  const int n = 200000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = -1.0 + (i + 0.5) * (2.0 / n);
    total += std::exp(squashed_log_prob(std::atanh(a), mean, log_std)) * (2.0 / n);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("deterministic action is the squashed, scaled mean") {
  Rng rng = make_rng(2);
  NetworkParams actor({3, 5, 2}, Activation::Relu, rng, 1.0);
  const std::vector<double> obs{0.1, -0.9, 0.2};
  Matrix x(3, 1);
  x << 0.1, -0.9, 0.2;
  const Matrix out = forward(actor, x);
  CHECK(deterministic_torque(actor, obs, 2.5) == doctest::Approx(2.5 * std::tanh(out(0, 0))));
  CHECK_THROWS_AS(deterministic_torque(actor, std::vector<double>{0.0, 1.0}, 2.5), DomainError);
}

TEST_CASE("same seed and observation stream give identical action streams") {
  SacConfig cfg;
  cfg.hidden_sizes = {16, 16};
  Rng init_a = make_rng(9), init_b = make_rng(9);
  SacAgent a(3, 2.5, cfg, init_a), b(3, 2.5, cfg, init_b);
  Rng ra = make_rng(10), rb = make_rng(10);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> obs{std::sin(i * 0.1), std::cos(i * 0.1), 0.01 * i};
    const ActionSample x = a.act(obs, ra);
    const ActionSample y = b.act(obs, rb);
    CHECK(x.torque == y.torque);
    CHECK(x.log_prob == y.log_prob);
    CHECK(std::abs(x.torque) <= 2.5);
  }
}

TEST_CASE("soft update: tau=1 copies, tau=0 freezes, otherwise geometric convergence") {
  SacConfig cfg;
  cfg.hidden_sizes = {8};
  Rng rng = make_rng(4);
  SacAgent agent(3, 2.5, cfg, rng);
  Rng other = make_rng(99);
  agent.q1 = NetworkParams({4, 8, 1}, Activation::Relu, other);

  SacAgent frozen = agent;
  soft_update(frozen, 0.0);
  CHECK(flatten(frozen.q1_target.layers) == flatten(agent.q1_target.layers));

  SacAgent copy = agent;
  soft_update(copy, 1.0);
  CHECK(flatten(copy.q1_target.layers) == flatten(agent.q1.layers));

  const double tau = 0.1;
  auto gap = [&](const SacAgent& s) {
    const auto t = flatten(s.q1_target.layers);
    const auto p = flatten(s.q1.layers);
    double g = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) g = std::max(g, std::abs(t[i] - p[i]));
    return g;
  };
  double previous = gap(agent);
  for (int i = 0; i < 20; ++i) {
    soft_update(agent, tau);
    const double current = gap(agent);
    CHECK(current / previous == doctest::Approx(1.0 - tau).epsilon(1e-6));
    previous = current;
  }
}

TEST_CASE("replay buffer: FIFO eviction and uniform sampling") {
  ReplayBuffer buf(100, 3);
  for (int i = 0; i < 250; ++i) {
    buf.add({{double(i), 0, 0}, 0.0, 1.0, {0, 0, 0}, false, false});
  }
  CHECK(buf.size() == 100);
  CHECK(buf.inserted() == 250);
  double oldest = 1e9;
  for (std::size_t i = 0; i < buf.size(); ++i) oldest = std::min(oldest, buf.at(i).obs[0]);
  CHECK(oldest == 150.0);

  // Chi-square goodness of fit over 100 cells with 99 degrees of freedom;
  // the p = 0.01 critical value is 134.64.
  Rng rng = make_rng(77);
  std::vector<int> counts(100, 0);
  const int draws = 200000;
  for (std::size_t idx : buf.sample_indices(draws, rng)) ++counts[idx];
  const double expected = draws / 100.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 134.64);

  CHECK_THROWS_AS(buf.add({{0, 0}, 0.0, 1.0, {0, 0, 0}, false, false}), DomainError);
  CHECK_THROWS_AS(buf.add({{0, 0, 0}, 0.0, 1.0, {0, 0, 0}, true, true}), DomainError);
}

TEST_CASE("config validation") {
  SacConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.effective_entropy_lr() == c.actor_lr);
  c.steps_per_epoch = 2400;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = SacConfig{};
  c.actor_lr = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  SacConfig c;
  c.hidden_sizes = {16, 16};
  c.epochs = 3;
  c.steps_per_epoch = 500;
  c.steps_per_trajectory = 250;
  c.steps_before_training = 500;
  c.gradient_steps_per_epoch = 20;
  c.batch_size = 32;
  c.seed = 42;
  auto factory = [] {
    return inference_wrap(std::make_unique<PendulumEnv>(PendulumParams{}, 250), kUnboundedBudget);
  };
  const TrainResult a = train(factory, c);
  const TrainResult b = train(factory, c);
  REQUIRE(a.epochs.size() == 3);
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(a.epochs[i].epoch_return == b.epochs[i].epoch_return);
    CHECK(a.epochs[i].critic_loss == b.epochs[i].critic_loss);
    CHECK(a.epochs[i].alpha == b.epochs[i].alpha);
  }
  CHECK(flatten(a.final_agent.actor.layers) == flatten(b.final_agent.actor.layers));
  CHECK(a.final_agent.all_finite());
  CHECK(a.episodes.size() == 6);
}

TEST_CASE("training under extended termination respects the energy cap") {
  SacConfig c;
  c.hidden_sizes = {16};
  c.epochs = 2;
  c.steps_per_epoch = 500;
  c.steps_per_trajectory = 500;
  c.steps_before_training = 500;
  c.gradient_steps_per_epoch = 10;
  c.batch_size = 32;
  const double e0 = 0.5;
  TrainHooks hooks;
  hooks.energy_cap = e0;
  const TrainResult r = train(
      [&] { return training_wrap_extended_termination(std::make_unique<PendulumEnv>(), e0); }, c,
      hooks);
  REQUIRE(!r.episodes.empty());
  int depleted = 0;
  for (const auto& ep : r.episodes) {
    CHECK(ep.energy_spent <= e0);
    if (ep.cause == TerminationCause::Depleted) {
      ++depleted;
      CHECK(ep.depleted);
    }
  }
  CHECK(depleted > 0);
}
