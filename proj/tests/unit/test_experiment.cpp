#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "etank/error.hpp"
#include "etank/experiment.hpp"

using namespace etank;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("etank_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.name = "tiny";
  c.sac.hidden_sizes = {8, 8};
  c.sac.batch_size = 16;
  c.sac.epochs = 3;
  c.sac.steps_per_epoch = 200;
  c.sac.steps_per_trajectory = 100;
  c.sac.steps_before_training = 200;
  c.sac.gradient_steps_per_epoch = 10;
  c.sac.eval_episodes_per_epoch = 1;
  c.max_steps = 100;
  c.seeds = {3};
  return c;
}

// Actor whose mean output is identically zero, i.e. a zero-torque policy.
LoadedPolicy zero_policy(const ExperimentConfig& config, const fs::path& dir) {
  Rng rng = make_rng(1);
  SacAgent agent(3, config.pendulum.torque_limit, config.sac, rng);
  agent.actor.layers.back().weight.setZero();
  agent.actor.layers.back().bias.setZero();
  const std::string path = (dir / "zero.bin").string();
  save_agent_checkpoint(path, agent, to_json(config), content_hash(config));
  return load_policy(path);
}

}  // namespace

TEST_CASE("config: defaults, round trip and content hash") {
  const ExperimentConfig d = parse_config(R"({"format_version": 1})");
  CHECK(d.sac.actor_lr == 0.005);
  CHECK(d.sac.hidden_sizes == std::vector<int>{256, 256});
  CHECK(d.seeds.size() == 5);
  CHECK(d.eval_episodes == 100);
  CHECK(d.wrapper.kind == WrapperKind::None);

  ExperimentConfig c = tiny_config();
  c.wrapper = {WrapperKind::ExtendedTermination, 0.75, 1e-3};
  c.force_field = {0.4, ForceProfile::Constant};
  const ExperimentConfig back = parse_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(content_hash(back) == content_hash(c));
  CHECK(content_hash(c).size() == 40);
  c.sac.epochs += 1;
  CHECK(content_hash(back) != content_hash(c));

  const ExperimentConfig inf = parse_config(R"({"format_version": 1, "wrapper": {"kind": "inference_tank", "e0": "inf"}})");
  CHECK(std::isinf(inf.wrapper.e0));
  CHECK(parse_config(to_json(inf)).wrapper.e0 == inf.wrapper.e0);
}

TEST_CASE("git blob hash matches git hash-object") {
  // printf 'hello\n' | git hash-object --stdin
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("config errors carry the line of the offending key") {
  CHECK(config_error_line("{\n  \"format_version\": 1,\n  \"sac\": {\n    \"epochs\": 0\n  }\n}") == 4);
  CHECK(config_error_line("{\n  \"format_version\": 1,\n  \"bogus\": 3\n}") == 3);
  CHECK(config_error_line("{\n  \"format_version\": 1,\n  \"wrapper\": {\"kind\": \"magic\"}\n}") == 3);
  CHECK(config_error_line("{\n  \"format_version\": 2\n}") == 2);
  CHECK(config_error_line("{\n  \"format_version\": 1,\n  \"pendulum\": {\n\n    \"mass\": \"x\"\n  }\n}") == 5);
  CHECK(config_error_line("{\n  \"format_version\": 1,\n  \"sac\": {\n    \"epochs\": 3,,\n  }\n}") == 4);
  CHECK(config_error_line("{}") == 1);
  CHECK(config_error_line("{\"format_version\": 1, \"wrapper\": {\"kind\": \"inference_tank\"}}") == 1);
}

TEST_CASE("overrides replace file values") {
  const fs::path dir = scratch_dir("overrides");
  const fs::path file = dir / "c.json";
  std::ofstream(file) << "{\n  \"format_version\": 1,\n  \"sac\": {\"epochs\": 7}\n}\n";
  CHECK(load_config(file.string()).sac.epochs == 7);
  const ExperimentConfig c = load_config(
      file.string(), {"sac.epochs=9", "wrapper.kind=extended_state", "wrapper.e0=2.5", "name=x"});
  CHECK(c.sac.epochs == 9);
  CHECK(c.wrapper.kind == WrapperKind::ExtendedState);
  CHECK(c.wrapper.e0 == 2.5);
  CHECK(c.name == "x");
  CHECK_THROWS_AS(load_config(file.string(), {"sac.epochs=-1"}), ConfigError);
  CHECK_THROWS_AS(load_config(file.string(), {"noequals"}), ConfigError);
  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 2500.0}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(kUnboundedBudget) == "inf");
  CHECK(format_double(NAN) == "nan");
}

TEST_CASE("training writes the run layout and is byte-reproducible") {
  const fs::path root = scratch_dir("train");
  const ExperimentConfig c = tiny_config();
  const TrainReport a = run_training(c, (root / "a").string());
  const TrainReport b = run_training(c, (root / "b").string());
  CHECK(a.hash == content_hash(c));
  const fs::path seed_a = fs::path(a.run_dir) / "seed_3";
  const fs::path seed_b = fs::path(b.run_dir) / "seed_3";
  CHECK(fs::path(a.run_dir).filename() == "tiny-" + a.hash.substr(0, 12));
  for (const char* f : {"epochs.csv", "episodes.csv", "checkpoint_best.bin",
                        "checkpoint_final.bin", "manifest.json"}) {
    CHECK(fs::exists(seed_a / f));
  }
  CHECK(fs::exists(fs::path(a.run_dir) / "config.json"));
  CHECK(slurp(seed_a / "epochs.csv") == slurp(seed_b / "epochs.csv"));
  CHECK(slurp(seed_a / "episodes.csv") == slurp(seed_b / "episodes.csv"));
  CHECK(slurp(seed_a / "checkpoint_final.bin") == slurp(seed_b / "checkpoint_final.bin"));

  const RunCurves run = read_run(a.run_dir);
  REQUIRE(run.epoch_return.size() == 1);
  CHECK(run.epoch_return[0].size() == 3);

  const LoadedPolicy p = load_policy((seed_a / "checkpoint_best.bin").string());
  CHECK(to_json(p.config) == to_json(c));
}

TEST_CASE("extended termination training never logs energy above e0") {
  const fs::path root = scratch_dir("capped");
  ExperimentConfig c = tiny_config();
  c.wrapper = {WrapperKind::ExtendedTermination, 0.2, 1e-3};
  const TrainReport r = run_training(c, root.string());
  CHECK(r.seeds.at(0).max_episode_energy <= 0.2);
  CHECK(r.seeds.at(0).depletions > 0);
}

TEST_CASE("task energy: zero policy, single episode, empty evaluation") {
  const fs::path dir = scratch_dir("energy");
  const ExperimentConfig c = tiny_config();
  const LoadedPolicy zero = zero_policy(c, dir);
  const TaskEnergyReport z = estimate_task_energy(zero, 5, 0);
  CHECK(z.e_star == 0.0);
  CHECK(z.episode_energy.size() == 5);
  CHECK_THROWS_AS(estimate_task_energy(zero, 0, 0), DomainError);

  Rng rng = make_rng(2);
  SacAgent agent(3, c.pendulum.torque_limit, c.sac, rng);
  agent.actor.layers.back().bias.setConstant(1.0);
  const std::string path = (dir / "push.bin").string();
  save_agent_checkpoint(path, agent, to_json(c), content_hash(c));
  const LoadedPolicy push = load_policy(path);
  const TaskEnergyReport one = estimate_task_energy(push, 1, 4);
  EvalOptions options;
  options.episodes = 1;
  options.seed = 4;
  options.steps_dir = (dir / "steps").string();
  const EvalReport eval = evaluate_policy(push, options);
  CHECK(one.e_star > 0.0);
  CHECK(one.e_star == eval.episodes.at(0).energy_spent);

  std::ifstream steps(dir / "steps" / "episode_0000.csv");
  std::string header;
  std::getline(steps, header);
  CHECK(header == kStepCsvHeader);

  options.episodes = 0;
  options.steps_dir.clear();
  const EvalReport empty = evaluate_policy(push, options);
  CHECK(empty.episodes.empty());
  CHECK(empty.mean_return == 0.0);
}

TEST_CASE("inference tank at the task energy caps every episode") {
  const fs::path dir = scratch_dir("cap");
  const ExperimentConfig c = tiny_config();
  Rng rng = make_rng(5);
  SacAgent agent(3, c.pendulum.torque_limit, c.sac, rng);
  agent.actor.layers.back().bias.setConstant(2.0);
  const std::string path = (dir / "p.bin").string();
  save_agent_checkpoint(path, agent, to_json(c), content_hash(c));
  const LoadedPolicy p = load_policy(path);
  const double e_star = estimate_task_energy(p, 10, 0).e_star;

  EvalOptions options;
  options.episodes = 10;
  // A constant field along the commanded torque lifts the rod further.
  options.force_field = {1.0, ForceProfile::Constant};
  const EvalReport open = evaluate_policy(p, options);
  options.wrapper = {WrapperKind::InferenceTank, e_star, 1e-3};
  const EvalReport capped = evaluate_policy(p, options);
  CHECK(open.mean_energy > e_star);
  for (const auto& e : capped.episodes) CHECK(e.energy_spent <= e_star);
  options.wrapper.kind = WrapperKind::ExtendedTermination;
  CHECK_THROWS_AS(evaluate_policy(p, options), DomainError);
}

TEST_CASE("compare: a run against itself") {
  const fs::path root = scratch_dir("compare");
  ExperimentConfig c = tiny_config();
  c.sac.epochs = 6;
  c.seeds = {0, 1};
  const TrainReport r = run_training(c, root.string());
  const CompareReport cmp = compare_runs({r.run_dir, r.run_dir});
  CHECK(cmp.energy_ratio == 1.0);
  CHECK(cmp.difference_std == 0.0);
  REQUIRE(cmp.mean_return.size() == 2);
  CHECK(cmp.mean_return[0].size() == 6);
  CHECK(cmp.plateau_return[0] == cmp.plateau_return[1]);
  CHECK_THROWS_AS(compare_runs({r.run_dir}), ConfigError);
  CHECK_THROWS_AS(compare_runs({r.run_dir, root.string()}), ConfigError);
}
