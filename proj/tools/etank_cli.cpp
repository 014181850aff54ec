// Command-line front end over the C API. Results go to stdout as JSON,
// progress to stderr. Exit codes: 0 ok, 2 bad input, 3 training diverged,
// 1 anything else.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "etank/etank.h"

namespace {

using json = nlohmann::json;

int exit_code(etank_status status) {
  switch (status) {
    case ETANK_OK:
      return 0;
    case ETANK_ERR_ARGUMENT:
    case ETANK_ERR_CONFIG:
    case ETANK_ERR_DOMAIN:
      return 2;
    case ETANK_ERR_DIVERGED:
      return 3;
    default:
      return 1;
  }
}

int report_failure(etank_status status) {
  std::cerr << "error: " << etank_last_error() << "\n";
  if (status == ETANK_ERR_DIVERGED && *etank_last_dump_path() != '\0') {
    std::cerr << "state dump: " << etank_last_dump_path() << "\n";
  }
  return exit_code(status);
}

// Prints the JSON result and optionally writes it to `out_path`.
int emit(etank_status status, char* result, const std::string& out_path) {
  if (status != ETANK_OK) return report_failure(status);
  std::cout << result << "\n";
  int code = 0;
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    out << result << "\n";
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      code = 1;
    }
  }
  etank_free_string(result);
  return code;
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

void log_line(const char* line, void*) { std::cerr << line << std::endl; }

// "inf" or a non-negative number.
double parse_budget(const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size() || !(v >= 0.0)) throw CLI::ValidationError("--e0", "bad budget " + text);
  return v;
}

// e* stored by estimate-task-energy.
double read_task_energy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--e0-from", "cannot open " + path);
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("e_star") || !doc["e_star"].is_number()) {
    throw CLI::ValidationError("--e0-from", path + " has no numeric e_star");
  }
  return doc["e_star"].get<double>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-tank passivization of RL policies on a pendulum"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(etank_version()));

  std::string out_path;

  auto* train = app.add_subcommand("train", "Train every seed of a config");
  std::string config_path;
  std::vector<std::string> overrides;
  std::string run_root;
  bool quiet = false;
  train->add_option("config", config_path, "Experiment config (JSON)")->required();
  train->add_option("--set", overrides, "Override a config value, e.g. sac.epochs=60")
      ->take_all()
      ->allow_extra_args(false);
  train->add_option("--run-root", run_root, "Output root (default $ETANK_RUN_ROOT or runs)");
  train->add_flag("-q,--quiet", quiet, "No per-epoch progress");
  train->add_option("--out", out_path, "Also write the JSON summary here");

  auto* resolve = app.add_subcommand("resolve", "Print the canonical config and its hash");
  resolve->add_option("config", config_path)->required();
  resolve->add_option("--set", overrides)->take_all()->allow_extra_args(false);

  auto* estimate = app.add_subcommand("estimate-task-energy",
                                      "Ungated evaluation; e* is the max final energy spent");
  std::string checkpoint;
  int episodes = 100;
  std::uint64_t seed = 0;
  estimate->add_option("checkpoint", checkpoint)->required();
  estimate->add_option("--episodes", episodes)->capture_default_str();
  estimate->add_option("--seed", seed)->capture_default_str();
  estimate->add_option("--out", out_path,
                       "Report path (default: task_energy.json beside the checkpoint)");

  auto* eval = app.add_subcommand("eval", "Evaluate the deterministic policy");
  std::string wrapper = "none";
  std::string e0_text;
  std::string e0_from;
  double epsilon = 1e-3;
  double field = 0.0;
  std::string profile = "velocity_aligned";
  int final_window = 100;
  std::string steps_dir;
  eval->add_option("checkpoint", checkpoint)->required();
  eval->add_option("--wrapper", wrapper)
      ->check(CLI::IsMember({"none", "inference_tank"}))
      ->capture_default_str();
  eval->add_option("--e0", e0_text, "Tank budget in J, or inf");
  eval->add_option("--e0-from", e0_from, "Take e0 from an estimate-task-energy report");
  eval->add_option("--epsilon", epsilon)->capture_default_str();
  eval->add_option("--field", field, "Force-field magnitude in N m")->capture_default_str();
  eval->add_option("--field-profile", profile)
      ->check(CLI::IsMember({"velocity_aligned", "constant"}))
      ->capture_default_str();
  eval->add_option("--episodes", episodes)->capture_default_str();
  eval->add_option("--seed", seed)->capture_default_str();
  eval->add_option("--final-window", final_window)->capture_default_str();
  eval->add_option("--steps-dir", steps_dir, "Write per-episode step CSVs here");
  eval->add_option("--out", out_path);

  auto* compare = app.add_subcommand("compare", "Aligned learning curves and energy ratio");
  std::vector<std::string> runs;
  compare->add_option("runs", runs, "Run directories (first two give the ratio)")
      ->required()
      ->expected(2, -1);
  compare->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  char* result = nullptr;
  try {
    if (*train) {
      const auto o = c_strings(overrides);
      const etank_status s =
          etank_train(config_path.c_str(), o.data(), o.size(),
                      run_root.empty() ? nullptr : run_root.c_str(), quiet ? nullptr : log_line,
                      nullptr, &result);
      return emit(s, result, out_path);
    }
    if (*resolve) {
      const auto o = c_strings(overrides);
      const etank_status s = etank_config_resolve(config_path.c_str(), o.data(), o.size(), &result);
      return emit(s, result, "");
    }
    if (*estimate) {
      const etank_status s =
          etank_estimate_task_energy(checkpoint.c_str(), episodes, seed, &result);
      if (out_path.empty()) {
        out_path = (std::filesystem::path(checkpoint).parent_path() / "task_energy.json").string();
      }
      return emit(s, result, out_path);
    }
    if (*eval) {
      json options = {{"episodes", episodes}, {"seed", seed}, {"final_window", final_window}};
      json w = {{"kind", wrapper}, {"epsilon", epsilon}};
      if (!e0_text.empty() && !e0_from.empty()) {
        throw CLI::ValidationError("--e0", "give either --e0 or --e0-from");
      }
      double e0 = std::numeric_limits<double>::infinity();
      if (!e0_text.empty()) e0 = parse_budget(e0_text);
      if (!e0_from.empty()) e0 = read_task_energy(e0_from);
      if (wrapper == "inference_tank") {
        if (e0_text.empty() && e0_from.empty()) {
          throw CLI::ValidationError("--e0", "inference_tank needs --e0 or --e0-from");
        }
        w["e0"] = std::isinf(e0) ? json("inf") : json(e0);
      }
      options["wrapper"] = w;
      options["force_field"] = {{"magnitude", field}, {"profile", profile}};
      if (!steps_dir.empty()) options["steps_dir"] = steps_dir;
      const std::string text = options.dump();
      const etank_status s = etank_evaluate(checkpoint.c_str(), text.c_str(), &result);
      return emit(s, result, out_path);
    }
    if (*compare) {
      const auto r = c_strings(runs);
      const etank_status s = etank_compare(r.data(), r.size(), &result);
      return emit(s, result, out_path);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
