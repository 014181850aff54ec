#pragma once

#include <cstdint>
#include <string>

#include "etank/neural.hpp"
#include "etank/sac.hpp"

namespace etank {

// On-disk layout, all integers and doubles little-endian:
//
//   char[8]  magic "ETANKCKP"
//   u32      format version (kCheckpointVersion)
//   str      config hash              (str = u32 byte length + bytes)
//   str      experiment config JSON
//   u32      observation size
//   f64      torque limit
//   f64      log alpha, f64 alpha Adam first moment, f64 second moment, i64 alpha Adam step
//   i64      gradient steps
//   u32      network count, then per network:
//              str name, u32 hidden activation, u32 layer count, i64 Adam step,
//              per layer: u32 rows, u32 cols, rows*cols f64 weights (column-major),
//                         rows f64 bias, then the same for Adam first and second moments
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_hash;
  std::string config_json;
  std::uint32_t obs_dim = 0;
  double torque_limit = 0.0;
  double log_alpha = 0.0;
  ScalarAdam alpha_adam;
  std::int64_t gradient_steps = 0;
  NetworkParams actor, q1, q2, q1_target, q2_target;
};

Checkpoint make_checkpoint(const SacAgent& agent, std::string config_json,
                           std::string config_hash);

// Throws IoError on I/O failure or a malformed file.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

inline void save_agent_checkpoint(const std::string& path, const SacAgent& agent,
                                  std::string config_json, std::string config_hash) {
  save_checkpoint(path, make_checkpoint(agent, std::move(config_json), std::move(config_hash)));
}

}  // namespace etank
