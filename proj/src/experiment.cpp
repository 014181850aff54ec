#include "etank/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "etank/error.hpp"

namespace etank {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// --- config parsing -----------------------------------------------------

int line_at_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Line of the key reached by walking `path` through the source text. Each key
// is searched after the previous one, which is exact for the nested objects a
// config file contains. Returns 0 when a key cannot be located.
int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const std::string quoted = "\"" + key + "\"";
    for (;;) {
      pos = text.find(quoted, pos);
      if (pos == std::string::npos) return 0;
      std::size_t after = pos + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      pos += quoted.size();
    }
  }
  return path.empty() ? 0 : line_at_offset(text, pos);
}

std::string dotted(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

class Section {
 public:
  Section(const json& node, const std::string& text, std::vector<std::string> path)
      : node_(node), text_(text), path_(std::move(path)) {
    if (!node_.is_object()) fail({}, "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    auto p = path_;
    if (!key.empty()) p.push_back(key);
    throw ConfigError((p.empty() ? std::string("config") : dotted(p)) + ": " + message,
                      line_of(text_, p));
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
        fail(it.key(), "unknown key");
      }
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& raw(const char* key) const { return node_.at(key); }
  Section child(const char* key) const {
    auto p = path_;
    p.push_back(key);
    return Section(node_.at(key), text_, p);
  }

  // Reads a number; accepts the strings "inf"/"infinity" when `allow_inf`.
  double number(const char* key, double fallback, bool allow_inf = false) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (v.is_number()) return v.get<double>();
    if (allow_inf && v.is_string() && (v == "inf" || v == "infinity")) return kUnboundedBudget;
    fail(key, allow_inf ? "expected a number or \"inf\"" : "expected a number");
  }
  double positive(const char* key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be positive and finite");
    return v;
  }
  double non_negative(const char* key, double fallback, bool allow_inf = false) const {
    const double v = number(key, fallback, allow_inf);
    if (!(v >= 0.0) || (!allow_inf && !std::isfinite(v))) fail(key, "must be non-negative");
    return v;
  }
  std::int64_t integer(const char* key, std::int64_t fallback, std::int64_t min) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    const auto i = v.get<std::int64_t>();
    if (i < min) fail(key, "must be at least " + std::to_string(min));
    return i;
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& node_;
  const std::string& text_;
  std::vector<std::string> path_;
};

int as_int(std::int64_t v) { return static_cast<int>(std::min<std::int64_t>(v, INT32_MAX)); }

SacConfig parse_sac(const Section& s) {
  s.allow_only({"actor_lr", "critic_lr", "soft_update_coefficient", "batch_size", "epochs",
                "steps_per_epoch", "steps_per_trajectory", "steps_before_training",
                "target_update_period", "gradient_steps_per_epoch", "hidden_sizes", "discount",
                "replay_capacity", "entropy_lr", "initial_log_alpha", "eval_episodes_per_epoch"});
  SacConfig c;
  c.actor_lr = s.positive("actor_lr", c.actor_lr);
  c.critic_lr = s.positive("critic_lr", c.critic_lr);
  c.soft_update_coefficient = s.positive("soft_update_coefficient", c.soft_update_coefficient);
  if (c.soft_update_coefficient > 1.0) s.fail("soft_update_coefficient", "must be at most 1");
  c.batch_size = as_int(s.integer("batch_size", c.batch_size, 1));
  c.epochs = as_int(s.integer("epochs", c.epochs, 1));
  c.steps_per_epoch = as_int(s.integer("steps_per_epoch", c.steps_per_epoch, 1));
  c.steps_per_trajectory = as_int(s.integer("steps_per_trajectory", c.steps_per_trajectory, 1));
  if (c.steps_per_epoch % c.steps_per_trajectory != 0) {
    s.fail("steps_per_epoch", "must be a multiple of steps_per_trajectory");
  }
  c.steps_before_training = as_int(s.integer("steps_before_training", c.steps_before_training, 1));
  c.target_update_period = as_int(s.integer("target_update_period", c.target_update_period, 1));
  c.gradient_steps_per_epoch =
      as_int(s.integer("gradient_steps_per_epoch", c.gradient_steps_per_epoch, 1));
  if (s.has("hidden_sizes")) {
    const json& h = s.raw("hidden_sizes");
    if (!h.is_array() || h.empty()) s.fail("hidden_sizes", "expected a non-empty array");
    c.hidden_sizes.clear();
    for (const auto& v : h) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        s.fail("hidden_sizes", "entries must be positive integers");
      }
      c.hidden_sizes.push_back(as_int(v.get<std::int64_t>()));
    }
  }
  c.discount = s.positive("discount", c.discount);
  if (c.discount > 1.0) s.fail("discount", "must be at most 1");
  c.replay_capacity = as_int(s.integer("replay_capacity", c.replay_capacity, 1));
  if (s.has("entropy_lr") && !s.raw("entropy_lr").is_null()) {
    c.entropy_lr = s.positive("entropy_lr", 0.0);
  }
  c.initial_log_alpha = s.number("initial_log_alpha", c.initial_log_alpha);
  if (!std::isfinite(c.initial_log_alpha)) s.fail("initial_log_alpha", "must be finite");
  c.eval_episodes_per_epoch =
      as_int(s.integer("eval_episodes_per_epoch", c.eval_episodes_per_epoch, 0));
  return c;
}

Integrator parse_integrator(const Section& s, const char* key, Integrator fallback) {
  if (!s.has(key)) return fallback;
  const std::string v = s.string(key, "");
  if (v == "discrete_gradient") return Integrator::DiscreteGradient;
  if (v == "semi_implicit_euler") return Integrator::SemiImplicitEuler;
  s.fail(key, "expected \"discrete_gradient\" or \"semi_implicit_euler\"");
}

const char* to_string(Integrator i) {
  return i == Integrator::SemiImplicitEuler ? "semi_implicit_euler" : "discrete_gradient";
}

const char* to_string(ForceProfile p) {
  return p == ForceProfile::Constant ? "constant" : "velocity_aligned";
}

WrapperKind parse_wrapper_kind(const Section& s) {
  const std::string v = s.string("kind", "none");
  for (auto k : {WrapperKind::None, WrapperKind::InferenceTank, WrapperKind::ExtendedTermination,
                 WrapperKind::ExtendedState}) {
    if (v == to_string(k)) return k;
  }
  s.fail("kind",
         "expected one of \"none\", \"inference_tank\", \"extended_termination\", "
         "\"extended_state\"");
}

WrapperSpec parse_wrapper(const Section& w) {
  w.allow_only({"kind", "e0", "epsilon"});
  WrapperSpec spec;
  spec.kind = parse_wrapper_kind(w);
  spec.e0 = w.non_negative("e0", spec.e0, true);
  spec.epsilon = w.non_negative("epsilon", spec.epsilon);
  if (spec.kind != WrapperKind::None && !w.has("e0")) w.fail("kind", "a tank wrapper needs e0");
  return spec;
}

ForceField parse_force_field(const Section& f) {
  f.allow_only({"magnitude", "profile"});
  ForceField field;
  field.magnitude = f.non_negative("magnitude", 0.0);
  const std::string profile = f.string("profile", "velocity_aligned");
  if (profile == "constant") {
    field.profile = ForceProfile::Constant;
  } else if (profile != "velocity_aligned") {
    f.fail("profile", "expected \"constant\" or \"velocity_aligned\"");
  }
  return field;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(),
                      line_at_offset(text, e.byte > 0 ? e.byte - 1 : 0));
  }
}

json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

// --- files --------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string csv_bool(bool b) { return b ? "1" : "0"; }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "inf") return kUnboundedBudget;
  if (s == "-inf") return -kUnboundedBudget;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("malformed number \"" + s + "\"");
  }
  return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return base * 0x9e3779b97f4a7c15ULL + salt;
}

// Deterministic actor reconstructed from a checkpoint.
std::vector<double> observe_fraction(std::vector<double> obs, std::size_t obs_dim) {
  // Extended-state agents see a constant full tank when evaluated without one.
  while (obs.size() < obs_dim) obs.push_back(1.0);
  return obs;
}

}  // namespace

const char* to_string(WrapperKind kind) {
  switch (kind) {
    case WrapperKind::InferenceTank:
      return "inference_tank";
    case WrapperKind::ExtendedTermination:
      return "extended_termination";
    case WrapperKind::ExtendedState:
      return "extended_state";
    case WrapperKind::None:
      break;
  }
  return "none";
}

ExperimentConfig parse_config(const std::string& text) {
  const json doc = parse_json(text);
  const Section root(doc, text, {});
  root.allow_only({"format_version", "name", "sac", "pendulum", "reset", "wrapper", "force_field",
                   "eval_episodes", "seeds"});
  if (!root.has("format_version")) throw ConfigError("config: missing format_version", 1);
  if (root.integer("format_version", 0, 0) != kConfigFormatVersion) {
    root.fail("format_version", "unsupported version (expected " +
                                    std::to_string(kConfigFormatVersion) + ")");
  }

  ExperimentConfig c;
  c.name = root.string("name", c.name);
  if (c.name.empty() || c.name.find_first_of("/\\ \t") != std::string::npos) {
    root.fail("name", "must be non-empty without slashes or whitespace");
  }
  if (root.has("sac")) c.sac = parse_sac(root.child("sac"));

  if (root.has("pendulum")) {
    const Section p = root.child("pendulum");
    p.allow_only({"mass", "length", "friction", "gravity", "torque_limit", "control_period",
                  "substeps_per_control", "integrator", "max_steps"});
    c.pendulum.mass = p.positive("mass", c.pendulum.mass);
    c.pendulum.length = p.positive("length", c.pendulum.length);
    c.pendulum.friction = p.non_negative("friction", c.pendulum.friction);
    c.pendulum.gravity = p.positive("gravity", c.pendulum.gravity);
    c.pendulum.torque_limit = p.positive("torque_limit", c.pendulum.torque_limit);
    c.pendulum.control_period = p.positive("control_period", c.pendulum.control_period);
    c.pendulum.substeps_per_control =
        as_int(p.integer("substeps_per_control", c.pendulum.substeps_per_control, 1));
    c.pendulum.integrator = parse_integrator(p, "integrator", c.pendulum.integrator);
    c.max_steps = as_int(p.integer("max_steps", c.max_steps, 1));
  }
  if (root.has("reset")) {
    const Section r = root.child("reset");
    r.allow_only({"mean", "stddev"});
    c.reset.mean = r.number("mean", c.reset.mean);
    if (!std::isfinite(c.reset.mean)) r.fail("mean", "must be finite");
    c.reset.stddev = r.non_negative("stddev", c.reset.stddev);
  }
  if (root.has("wrapper")) c.wrapper = parse_wrapper(root.child("wrapper"));
  if (root.has("force_field")) c.force_field = parse_force_field(root.child("force_field"));
  c.eval_episodes = as_int(root.integer("eval_episodes", c.eval_episodes, 0));
  if (root.has("seeds")) {
    const json& s = root.raw("seeds");
    if (!s.is_array() || s.empty()) root.fail("seeds", "expected a non-empty array");
    c.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) root.fail("seeds", "entries must be non-negative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) { return load_config(path, {}); }

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  if (overrides.empty()) return parse_config(text);

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    return parse_config(text);  // reports the line
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override \"" + o + "\" is not of the form path=value");
    }
    json value;
    const std::string raw = o.substr(eq + 1);
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare strings need no quotes
    }
    json* node = &doc;
    for (const auto& part : split(o.substr(0, eq), '.')) {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override \"" + o + "\" descends into a value");
      node = &(*node)[part];
    }
    *node = value;
  }
  // Re-serialize so errors in overridden values still carry a line.
  return parse_config(doc.dump(2));
}

std::string to_json(const ExperimentConfig& c) {
  json sac = {
      {"actor_lr", c.sac.actor_lr},
      {"critic_lr", c.sac.critic_lr},
      {"soft_update_coefficient", c.sac.soft_update_coefficient},
      {"batch_size", c.sac.batch_size},
      {"epochs", c.sac.epochs},
      {"steps_per_epoch", c.sac.steps_per_epoch},
      {"steps_per_trajectory", c.sac.steps_per_trajectory},
      {"steps_before_training", c.sac.steps_before_training},
      {"target_update_period", c.sac.target_update_period},
      {"gradient_steps_per_epoch", c.sac.gradient_steps_per_epoch},
      {"hidden_sizes", c.sac.hidden_sizes},
      {"discount", c.sac.discount},
      {"replay_capacity", c.sac.replay_capacity},
      {"entropy_lr", c.sac.effective_entropy_lr()},
      {"initial_log_alpha", c.sac.initial_log_alpha},
      {"eval_episodes_per_epoch", c.sac.eval_episodes_per_epoch},
  };
  json doc = {
      {"format_version", kConfigFormatVersion},
      {"name", c.name},
      {"sac", sac},
      {"pendulum",
       {{"mass", c.pendulum.mass},
        {"length", c.pendulum.length},
        {"friction", c.pendulum.friction},
        {"gravity", c.pendulum.gravity},
        {"torque_limit", c.pendulum.torque_limit},
        {"control_period", c.pendulum.control_period},
        {"substeps_per_control", c.pendulum.substeps_per_control},
        {"integrator", to_string(c.pendulum.integrator)},
        {"max_steps", c.max_steps}}},
      {"reset", {{"mean", c.reset.mean}, {"stddev", c.reset.stddev}}},
      {"wrapper",
       {{"kind", to_string(c.wrapper.kind)},
        {"e0", number_or_inf(c.wrapper.e0)},
        {"epsilon", c.wrapper.epsilon}}},
      {"force_field",
       {{"magnitude", c.force_field.magnitude}, {"profile", to_string(c.force_field.profile)}}},
      {"eval_episodes", c.eval_episodes},
      {"seeds", c.seeds},
  };
  return doc.dump(2);
}

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw IoError("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("SHA-1 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string content_hash(const ExperimentConfig& config) { return git_blob_sha1(to_json(config)); }

std::unique_ptr<Environment> make_environment(const ExperimentConfig& config,
                                              const WrapperSpec& wrapper,
                                              const ForceField& field) {
  std::unique_ptr<Environment> env =
      std::make_unique<PendulumEnv>(config.pendulum, config.max_steps, config.reset);
  if (field.magnitude > 0.0) env = apply_force_field(std::move(env), field);
  switch (wrapper.kind) {
    case WrapperKind::None:
      return inference_wrap(std::move(env), kUnboundedBudget, wrapper.epsilon);
    case WrapperKind::InferenceTank:
      return inference_wrap(std::move(env), wrapper.e0, wrapper.epsilon);
    case WrapperKind::ExtendedTermination:
      return training_wrap_extended_termination(std::move(env), wrapper.e0, wrapper.epsilon);
    case WrapperKind::ExtendedState:
      return training_wrap_extended_state(std::move(env), wrapper.e0, wrapper.epsilon);
  }
  throw DomainError("unknown wrapper kind");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw DomainError("cannot format a double");
  return std::string(buf, ptr);
}

std::string default_run_root() {
  const char* root = std::getenv("ETANK_RUN_ROOT");
  return root != nullptr && *root != '\0' ? root : "runs";
}

// --- training -------------------------------------------------------------

TrainReport run_training(const ExperimentConfig& config, const std::string& root,
                         const LogSink& log) {
  const std::string canonical = to_json(config);
  TrainReport report;
  report.hash = git_blob_sha1(canonical);
  const fs::path run_dir = fs::path(root) / (config.name + "-" + report.hash.substr(0, 12));
  fs::create_directories(run_dir);
  write_file(run_dir / "config.json", canonical + "\n");
  report.run_dir = run_dir.string();

  for (std::uint64_t seed : config.seeds) {
    const fs::path dir = run_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    SacConfig sac = config.sac;
    sac.seed = seed;

    std::ofstream epochs(dir / "epochs.csv", std::ios::trunc);
    std::ofstream episodes(dir / "episodes.csv", std::ios::trunc);
    if (!epochs || !episodes) throw IoError("cannot write logs under " + dir.string());
    epochs << "epoch,env_steps,epoch_return,episodes,mean_episode_return,max_episode_energy,"
              "mean_episode_energy,depletions,alpha,critic_loss,actor_loss,entropy,eval_return\n";
    episodes << "episode,epoch,return,length,energy_spent,depleted,term_cause\n";

    SeedSummary summary;
    summary.seed = seed;
    summary.dir = dir.string();
    TrainHooks hooks;
    hooks.dump_dir = (dir / "dump").string();
    if (config.wrapper.kind == WrapperKind::ExtendedTermination) {
      hooks.energy_cap = config.wrapper.e0;
    }
    hooks.on_episode = [&](const EpisodeRecord& e) {
      episodes << e.episode << ',' << e.epoch << ',' << format_double(e.episode_return) << ','
               << e.length << ',' << format_double(e.energy_spent) << ',' << csv_bool(e.depleted)
               << ',' << to_string(e.cause) << '\n';
      summary.max_episode_energy = std::max(summary.max_episode_energy, e.energy_spent);
      if (e.depleted) ++summary.depletions;
    };
    hooks.on_epoch = [&](const EpochLog& l) {
      epochs << l.epoch << ',' << l.env_steps << ',' << format_double(l.epoch_return) << ','
             << l.episodes_completed << ',' << format_double(l.mean_episode_return) << ','
             << format_double(l.max_episode_energy) << ','
             << format_double(l.mean_episode_energy) << ',' << l.depletions << ','
             << format_double(l.alpha) << ',' << format_double(l.critic_loss) << ','
             << format_double(l.actor_loss) << ',' << format_double(l.entropy) << ','
             << format_double(l.eval_return) << '\n';
      epochs.flush();
      episodes.flush();
      if (log) {
        std::ostringstream line;
        line << config.name << " seed " << seed << " epoch " << l.epoch << " return "
             << std::fixed << std::setprecision(1) << l.epoch_return << " eval " << l.eval_return
             << " max_energy " << std::setprecision(3) << l.max_episode_energy << " alpha "
             << std::setprecision(5) << l.alpha;
        log(line.str());
      }
    };

    const auto start = std::chrono::steady_clock::now();
    const TrainResult result = train(
        [&] { return make_environment(config, config.wrapper, config.force_field); }, sac, hooks);
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    summary.best_epoch = result.best_epoch;
    summary.best_eval_return = result.best_eval_return;
    summary.final_epoch_return = result.epochs.empty() ? 0.0 : result.epochs.back().epoch_return;

    save_agent_checkpoint((dir / "checkpoint_best.bin").string(), result.best_agent, canonical,
                          report.hash);
    save_agent_checkpoint((dir / "checkpoint_final.bin").string(), result.final_agent, canonical,
                          report.hash);

    json manifest = {
        {"config", json::parse(canonical)},
        {"config_hash", report.hash},
        {"seed", seed},
        {"wall_seconds", summary.wall_seconds},
        {"best_epoch", summary.best_epoch},
        {"best_eval_return", summary.best_eval_return},
        {"final_epoch_return", summary.final_epoch_return},
        {"max_episode_energy", summary.max_episode_energy},
        {"depletions", summary.depletions},
        {"episodes", result.episodes.size()},
        {"deterministic", true},
    };
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    report.seeds.push_back(summary);
  }
  return report;
}

// --- evaluation -----------------------------------------------------------

LoadedPolicy load_policy(const std::string& checkpoint_path) {
  LoadedPolicy p;
  p.checkpoint = load_checkpoint(checkpoint_path);
  p.config = parse_config(p.checkpoint.config_json);
  return p;
}

TaskEnergyReport estimate_task_energy(const LoadedPolicy& policy, int episodes,
                                      std::uint64_t seed) {
  if (episodes < 1) throw DomainError("task energy needs at least one episode");
  EvalOptions options;
  options.episodes = episodes;
  options.seed = seed;
  const EvalReport eval = evaluate_policy(policy, options);
  TaskEnergyReport out;
  for (const auto& e : eval.episodes) out.episode_energy.push_back(e.energy_spent);
  out.e_star = task_energy(out.episode_energy);
  return out;
}

EvalOptions parse_eval_options(const std::string& text) {
  const json doc = parse_json(text.empty() ? "{}" : text);
  const Section root(doc, text, {});
  root.allow_only({"wrapper", "force_field", "episodes", "seed", "final_window", "steps_dir"});
  EvalOptions o;
  if (root.has("wrapper")) o.wrapper = parse_wrapper(root.child("wrapper"));
  if (root.has("force_field")) o.force_field = parse_force_field(root.child("force_field"));
  o.episodes = as_int(root.integer("episodes", o.episodes, 0));
  o.seed = static_cast<std::uint64_t>(root.integer("seed", 0, 0));
  o.final_window = as_int(root.integer("final_window", o.final_window, 1));
  o.steps_dir = root.string("steps_dir", "");
  return o;
}

EvalReport evaluate_policy(const LoadedPolicy& policy, const EvalOptions& options) {
  if (options.episodes < 0) throw DomainError("episode count must be non-negative");
  if (options.wrapper.kind != WrapperKind::None &&
      options.wrapper.kind != WrapperKind::InferenceTank) {
    throw DomainError("evaluation supports only the inference tank wrapper");
  }
  if (options.final_window < 1) throw DomainError("final window must be positive");
  if (!options.steps_dir.empty()) fs::create_directories(options.steps_dir);

  const auto obs_dim = static_cast<std::size_t>(policy.checkpoint.obs_dim);
  const double limit = policy.checkpoint.torque_limit;
  std::unique_ptr<Environment> env =
      make_environment(policy.config, options.wrapper, options.force_field);

  EvalReport report;
  for (int ep = 0; ep < options.episodes; ++ep) {
    Rng rng = make_rng(derive_seed(options.seed, static_cast<std::uint64_t>(ep)), 7);
    std::vector<double> obs = env->reset(rng);
    std::ofstream steps;
    if (!options.steps_dir.empty()) {
      std::ostringstream name;
      name << "episode_" << std::setw(4) << std::setfill('0') << ep << ".csv";
      steps.open(fs::path(options.steps_dir) / name.str(), std::ios::trunc);
      if (!steps) throw IoError("cannot write step log in " + options.steps_dir);
      steps << kStepCsvHeader << '\n';
    }
    EpisodeEval e;
    std::vector<double> errors;
    for (int k = 0;; ++k) {
      const double w = deterministic_torque(policy.checkpoint.actor, observe_fraction(obs, obs_dim),
                                            limit);
      const StepResult r = env->step(w);
      const TankReport& t = *r.tank;
      e.episode_return += r.reward;
      e.length += 1;
      e.energy_spent = t.spent;
      e.depleted = e.depleted || t.depleted;
      if (t.gated) ++e.gated_steps;
      errors.push_back(1.0 - std::sin(r.info.beta));
      const bool end = r.terminal || r.truncated;
      if (steps.is_open()) {
        const char* cause = r.terminal ? "depleted" : (r.truncated ? "truncated" : "none");
        steps << k << ',' << format_double(r.info.beta) << ',' << format_double(r.info.beta_dot)
              << ',' << format_double(r.info.commanded_torque) << ','
              << format_double(r.info.applied_torque) << ',' << format_double(r.reward) << ','
              << format_double(t.level) << ',' << format_double(t.spent) << ','
              << csv_bool(t.gated) << ',' << csv_bool(t.depleted) << ',' << cause << '\n';
      }
      obs = r.obs;
      if (end) break;
    }
    const std::size_t window =
        std::min(errors.size(), static_cast<std::size_t>(options.final_window));
    e.final_error =
        std::accumulate(errors.end() - static_cast<std::ptrdiff_t>(window), errors.end(), 0.0) /
        static_cast<double>(window);
    report.episodes.push_back(e);
  }

  if (!report.episodes.empty()) {
    const double n = static_cast<double>(report.episodes.size());
    for (const auto& e : report.episodes) {
      report.mean_return += e.episode_return / n;
      report.mean_final_error += e.final_error / n;
      report.mean_energy += e.energy_spent / n;
      report.max_energy = std::max(report.max_energy, e.energy_spent);
      if (e.depleted) ++report.depleted_episodes;
    }
  }
  return report;
}

// --- comparison -----------------------------------------------------------

RunCurves read_run(const std::string& run_dir) {
  RunCurves run;
  run.dir = run_dir;
  const fs::path dir(run_dir);
  const fs::path config_path = dir / "config.json";
  if (!fs::exists(config_path)) {
    throw ConfigError(run_dir + ": not a run directory (no config.json)");
  }
  const ExperimentConfig config = parse_config(read_file(config_path.string()));
  run.name = config.name;
  run.wrapper = config.wrapper;

  std::vector<fs::path> seeds;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0) {
      seeds.push_back(entry.path());
    }
  }
  std::sort(seeds.begin(), seeds.end());
  if (seeds.empty()) throw ConfigError(run_dir + ": no seed directories");

  for (const auto& seed_dir : seeds) {
    std::ifstream epochs(seed_dir / "epochs.csv");
    std::ifstream episodes(seed_dir / "episodes.csv");
    if (!epochs || !episodes) throw ConfigError(seed_dir.string() + ": missing CSV logs");
    std::string line;
    std::getline(epochs, line);
    const auto header = split(line, ',');
    const auto col = std::find(header.begin(), header.end(), "epoch_return");
    if (header.empty() || header[0] != "epoch" || col == header.end()) {
      throw ConfigError(seed_dir.string() + "/epochs.csv: unexpected header");
    }
    const auto idx = static_cast<std::size_t>(col - header.begin());
    std::vector<double> returns;
    while (std::getline(epochs, line)) {
      const auto cells = split(line, ',');
      if (cells.size() != header.size()) {
        throw ConfigError(seed_dir.string() + "/epochs.csv: ragged row");
      }
      returns.push_back(parse_double(cells[idx]));
    }
    run.epoch_return.push_back(std::move(returns));

    std::getline(episodes, line);
    const auto eh = split(line, ',');
    const auto ecol = std::find(eh.begin(), eh.end(), "energy_spent");
    if (ecol == eh.end()) throw ConfigError(seed_dir.string() + "/episodes.csv: unexpected header");
    const auto eidx = static_cast<std::size_t>(ecol - eh.begin());
    double max_energy = 0.0;
    while (std::getline(episodes, line)) {
      const auto cells = split(line, ',');
      if (cells.size() != eh.size()) {
        throw ConfigError(seed_dir.string() + "/episodes.csv: ragged row");
      }
      max_energy = std::max(max_energy, parse_double(cells[eidx]));
    }
    run.max_episode_energy.push_back(max_energy);
  }
  return run;
}

CompareReport compare_runs(const std::vector<std::string>& run_dirs) {
  if (run_dirs.size() < 2) throw ConfigError("compare needs at least two run directories");
  std::vector<RunCurves> runs;
  for (const auto& d : run_dirs) runs.push_back(read_run(d));

  std::size_t epochs = SIZE_MAX;
  for (const auto& r : runs) {
    for (const auto& s : r.epoch_return) epochs = std::min(epochs, s.size());
  }
  if (epochs == 0 || epochs == SIZE_MAX) throw ConfigError("runs have no logged epochs");

  CompareReport out;
  for (const auto& r : runs) {
    out.runs.push_back(r.dir);
    std::vector<double> mean(epochs, 0.0), stddev(epochs, 0.0);
    const double n = static_cast<double>(r.epoch_return.size());
    for (std::size_t e = 0; e < epochs; ++e) {
      for (const auto& s : r.epoch_return) mean[e] += s[e] / n;
      for (const auto& s : r.epoch_return) stddev[e] += (s[e] - mean[e]) * (s[e] - mean[e]) / n;
      stddev[e] = std::sqrt(stddev[e]);
    }
    const std::size_t tail = std::min<std::size_t>(5, epochs);
    out.plateau_return.push_back(
        std::accumulate(mean.end() - static_cast<std::ptrdiff_t>(tail), mean.end(), 0.0) /
        static_cast<double>(tail));
    out.mean_return.push_back(std::move(mean));
    out.std_return.push_back(std::move(stddev));
  }

  const double a_max =
      *std::max_element(runs[0].max_episode_energy.begin(), runs[0].max_episode_energy.end());
  double reference = runs[1].wrapper.e0;
  if (runs[1].wrapper.kind == WrapperKind::None || !std::isfinite(reference)) {
    reference =
        *std::max_element(runs[1].max_episode_energy.begin(), runs[1].max_episode_energy.end());
  }
  out.energy_ratio = reference > 0.0 ? a_max / reference : kUnboundedBudget;

  std::vector<double> diff(epochs);
  for (std::size_t e = 0; e < epochs; ++e) diff[e] = out.mean_return[0][e] - out.mean_return[1][e];
  const double mean_diff = std::accumulate(diff.begin(), diff.end(), 0.0) / epochs;
  double var = 0.0;
  for (double d : diff) var += (d - mean_diff) * (d - mean_diff) / epochs;
  out.difference_std = std::sqrt(var);
  return out;
}

}  // namespace etank
