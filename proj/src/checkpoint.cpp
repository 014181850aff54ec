#include "etank/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "etank/error.hpp"

namespace etank {
namespace {

constexpr std::array<char, 8> kMagic{'E', 'T', 'A', 'N', 'K', 'C', 'K', 'P'};
constexpr std::uint32_t kMaxString = 1u << 26;
constexpr std::uint32_t kMaxDim = 1u << 20;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open checkpoint for writing: " + path);
  }
  void u32(std::uint32_t v) { le(v, 4); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  template <typename M>
  void matrix(const M& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing checkpoint");
  }

 private:
  void le(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out_.write(buf, bytes);
  }
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open checkpoint: " + path);
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::int64_t i64() { return static_cast<std::int64_t>(le(8)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > kMaxString) throw IoError("corrupt checkpoint: oversized string");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (!in_) throw IoError("truncated checkpoint");
  }
  template <typename M>
  void matrix(M& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
  }

 private:
  std::uint64_t le(int bytes) {
    unsigned char buf[8];
    read(reinterpret_cast<char*>(buf), static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::ifstream in_;
};

void write_layer(Writer& w, const DenseLayer& l) {
  w.matrix(l.weight);
  w.matrix(l.bias);
}

void write_network(Writer& w, const std::string& name, const NetworkParams& net) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(net.hidden));
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  w.i64(net.adam.step);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    w.u32(static_cast<std::uint32_t>(net.layers[i].weight.rows()));
    w.u32(static_cast<std::uint32_t>(net.layers[i].weight.cols()));
    write_layer(w, net.layers[i]);
    write_layer(w, net.adam.first[i]);
    write_layer(w, net.adam.second[i]);
  }
}

DenseLayer read_layer(Reader& r, std::uint32_t rows, std::uint32_t cols) {
  DenseLayer l{Matrix(rows, cols), Vector(rows)};
  r.matrix(l.weight);
  r.matrix(l.bias);
  return l;
}

NetworkParams read_network(Reader& r, const std::string& expected_name) {
  if (r.str() != expected_name) {
    throw IoError("corrupt checkpoint: expected network '" + expected_name + "'");
  }
  NetworkParams net;
  const std::uint32_t act = r.u32();
  if (act > static_cast<std::uint32_t>(Activation::Tanh)) {
    throw IoError("corrupt checkpoint: unknown activation");
  }
  net.hidden = static_cast<Activation>(act);
  const std::uint32_t count = r.u32();
  if (count == 0 || count > 64) throw IoError("corrupt checkpoint: bad layer count");
  net.adam.step = r.i64();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) {
      throw IoError("corrupt checkpoint: bad layer shape");
    }
    net.layers.push_back(read_layer(r, rows, cols));
    net.adam.first.push_back(read_layer(r, rows, cols));
    net.adam.second.push_back(read_layer(r, rows, cols));
  }
  if (!net.consistent()) throw IoError("corrupt checkpoint: layer shapes do not chain");
  return net;
}

}  // namespace

Checkpoint make_checkpoint(const SacAgent& agent, std::string config_json,
                           std::string config_hash) {
  Checkpoint c;
  c.config_hash = std::move(config_hash);
  c.config_json = std::move(config_json);
  c.obs_dim = static_cast<std::uint32_t>(agent.obs_dim());
  c.torque_limit = agent.torque_limit();
  c.log_alpha = agent.log_alpha;
  c.alpha_adam = agent.alpha_adam;
  c.gradient_steps = agent.gradient_steps;
  c.actor = agent.actor;
  c.q1 = agent.q1;
  c.q2 = agent.q2;
  c.q1_target = agent.q1_target;
  c.q2_target = agent.q2_target;
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  Writer w(path);
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.str(c.config_hash);
  w.str(c.config_json);
  w.u32(c.obs_dim);
  w.f64(c.torque_limit);
  w.f64(c.log_alpha);
  w.f64(c.alpha_adam.first);
  w.f64(c.alpha_adam.second);
  w.i64(c.alpha_adam.step);
  w.i64(c.gradient_steps);
  w.u32(5);
  write_network(w, "actor", c.actor);
  write_network(w, "q1", c.q1);
  write_network(w, "q2", c.q2);
  write_network(w, "q1_target", c.q1_target);
  write_network(w, "q2_target", c.q2_target);
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  std::array<char, 8> magic{};
  r.read(magic.data(), magic.size());
  if (magic != kMagic) throw IoError("not a checkpoint file: " + path);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.config_hash = r.str();
  c.config_json = r.str();
  c.obs_dim = r.u32();
  c.torque_limit = r.f64();
  c.log_alpha = r.f64();
  c.alpha_adam.first = r.f64();
  c.alpha_adam.second = r.f64();
  c.alpha_adam.step = r.i64();
  c.gradient_steps = r.i64();
  if (r.u32() != 5) throw IoError("corrupt checkpoint: unexpected network count");
  c.actor = read_network(r, "actor");
  c.q1 = read_network(r, "q1");
  c.q2 = read_network(r, "q2");
  c.q1_target = read_network(r, "q1_target");
  c.q2_target = read_network(r, "q2_target");
  if (c.actor.input_size() != static_cast<int>(c.obs_dim) || c.actor.output_size() != 2) {
    throw IoError("corrupt checkpoint: actor shape does not match the observation size");
  }
  return c;
}

}  // namespace etank
