#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "etank/rng.hpp"

namespace etank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { Identity, Relu, Tanh };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct AdamMoments {
  std::vector<DenseLayer> first;
  std::vector<DenseLayer> second;
  std::int64_t step = 0;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Fully connected network: hidden layers use `hidden`, the last layer is affine.
struct NetworkParams {
  std::vector<DenseLayer> layers;
  Activation hidden = Activation::Relu;
  AdamMoments adam;
  // Bumped on every parameter change; a forward cache is only valid for the
  // version it was recorded at.
  std::uint64_t version = 0;

  NetworkParams() = default;
  // sizes = {in, hidden..., out}. Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in));
  // the output layer is additionally multiplied by `output_scale`.
  NetworkParams(const std::vector<int>& sizes, Activation hidden, Rng& rng,
                double output_scale = 1.0);

  int input_size() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_size() const { return static_cast<int>(layers.back().weight.rows()); }
  std::size_t parameter_count() const;
  bool all_finite() const;
  // Shapes chain input to output and the moments mirror the parameters.
  bool consistent() const;
};

struct ForwardCache {
  std::vector<Matrix> inputs;          // input of each layer
  std::vector<Matrix> pre_activations; // affine output of each layer
  const NetworkParams* owner = nullptr;
  std::uint64_t version = 0;
};

struct Gradients {
  std::vector<DenseLayer> layers;
  Matrix input;  // d loss / d network input, same shape as the forward input
};

// Columns are samples. Throws DomainError on a shape mismatch.
Matrix forward(const NetworkParams& net, const Matrix& input, ForwardCache* cache = nullptr);

// Reverse-mode gradients for the loss whose gradient w.r.t. the output is
// `output_grad`. Throws DomainError if the cache belongs to another network or
// an older parameter version.
Gradients backward(const NetworkParams& net, const ForwardCache& cache, const Matrix& output_grad);

void adam_step(NetworkParams& net, const Gradients& grads, double learning_rate,
               const AdamHyper& hyper = {});

// theta_target <- (1 - tau) theta_target + tau theta
void soft_update(NetworkParams& target, const NetworkParams& source, double tau);

// Flat views used by gradient checks and checkpoint hashing.
std::vector<double> flatten(const std::vector<DenseLayer>& layers);
void unflatten(std::vector<DenseLayer>& layers, const std::vector<double>& values);

}  // namespace etank
