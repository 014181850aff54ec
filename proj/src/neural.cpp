#include "etank/neural.hpp"

#include <cmath>
#include <string>

#include "etank/error.hpp"

namespace etank {
namespace {

Matrix activate(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::Tanh:
      return z.array().tanh().matrix();
    case Activation::Identity:
      break;
  }
  return z;
}

// Multiplies `grad` in place by the activation derivative at `z`.
void apply_derivative(Matrix& grad, const Matrix& z, Activation act) {
  switch (act) {
    case Activation::Relu:
      grad = (z.array() > 0.0).select(grad, 0.0);
      return;
    case Activation::Tanh:
      grad.array() *= 1.0 - z.array().tanh().square();
      return;
    case Activation::Identity:
      return;
  }
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return out;
}

}  // namespace

NetworkParams::NetworkParams(const std::vector<int>& sizes, Activation hidden_act, Rng& rng,
                             double output_scale)
    : hidden(hidden_act) {
  if (sizes.size() < 2) {
    throw DomainError("a network needs at least an input and an output size");
  }
  for (int s : sizes) {
    if (s < 1) throw DomainError("layer sizes must be positive");
  }
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int fan_in = sizes[i];
    const int fan_out = sizes[i + 1];
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    if (i + 2 == sizes.size()) bound *= output_scale;
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = dist(rng);
    layers.push_back(std::move(layer));
  }
  adam.first = zeros_like(layers);
  adam.second = zeros_like(layers);
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool NetworkParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool NetworkParams::consistent() const {
  if (layers.empty() || adam.step < 0) return false;
  if (adam.first.size() != layers.size() || adam.second.size() != layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.weight.rows()) return false;
    if (i > 0 && l.weight.cols() != layers[i - 1].weight.rows()) return false;
    for (const auto* m : {&adam.first[i], &adam.second[i]}) {
      if (m->weight.rows() != l.weight.rows() || m->weight.cols() != l.weight.cols() ||
          m->bias.size() != l.bias.size()) {
        return false;
      }
    }
  }
  return true;
}

Matrix forward(const NetworkParams& net, const Matrix& input, ForwardCache* cache) {
  if (net.layers.empty()) {
    throw DomainError("forward on an empty network");
  }
  if (input.rows() != net.layers.front().weight.cols()) {
    throw DomainError("network input has " + std::to_string(input.rows()) + " rows, expected " +
                      std::to_string(net.layers.front().weight.cols()));
  }
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre_activations.clear();
    cache->owner = &net;
    cache->version = net.version;
  }
  Matrix x = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    Matrix z = layer.weight * x;
    z.colwise() += layer.bias;
    const bool last = i + 1 == net.layers.size();
    Matrix y = last ? z : activate(z, net.hidden);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(x));
      cache->pre_activations.push_back(std::move(z));
    }
    x = std::move(y);
  }
  return x;
}

Gradients backward(const NetworkParams& net, const ForwardCache& cache,
                   const Matrix& output_grad) {
  if (cache.owner != &net || cache.version != net.version ||
      cache.inputs.size() != net.layers.size()) {
    throw DomainError("stale forward cache: parameters changed since the forward pass");
  }
  const Matrix& last_z = cache.pre_activations.back();
  if (output_grad.rows() != last_z.rows() || output_grad.cols() != last_z.cols()) {
    throw DomainError("output gradient shape does not match the forward output");
  }
  Gradients grads;
  grads.layers.resize(net.layers.size());
  Matrix delta = output_grad;
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    if (i + 1 != net.layers.size()) {
      apply_derivative(delta, cache.pre_activations[i], net.hidden);
    }
    grads.layers[i].weight = delta * cache.inputs[i].transpose();
    grads.layers[i].bias = delta.rowwise().sum();
    delta = net.layers[i].weight.transpose() * delta;
  }
  grads.input = std::move(delta);
  return grads;
}

void adam_step(NetworkParams& net, const Gradients& grads, double learning_rate,
               const AdamHyper& hyper) {
  if (grads.layers.size() != net.layers.size()) {
    throw DomainError("gradient layer count does not match the network");
  }
  net.adam.step += 1;
  const double t = static_cast<double>(net.adam.step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  auto apply = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (g.rows() != param.rows() || g.cols() != param.cols()) {
      throw DomainError("gradient shape does not match parameter shape");
    }
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + hyper.eps);
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    apply(net.layers[i].weight, net.adam.first[i].weight, net.adam.second[i].weight,
          grads.layers[i].weight);
    apply(net.layers[i].bias, net.adam.first[i].bias, net.adam.second[i].bias,
          grads.layers[i].bias);
  }
  ++net.version;
}

void soft_update(NetworkParams& target, const NetworkParams& source, double tau) {
  if (target.layers.size() != source.layers.size()) {
    throw DomainError("soft update between networks of different depth");
  }
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& t = target.layers[i];
    const auto& s = source.layers[i];
    if (t.weight.rows() != s.weight.rows() || t.weight.cols() != s.weight.cols()) {
      throw DomainError("soft update between networks of different shape");
    }
    t.weight = (1.0 - tau) * t.weight + tau * s.weight;
    t.bias = (1.0 - tau) * t.bias + tau * s.bias;
  }
  ++target.version;
}

std::vector<double> flatten(const std::vector<DenseLayer>& layers) {
  std::vector<double> out;
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void unflatten(std::vector<DenseLayer>& layers, const std::vector<double>& values) {
  std::size_t pos = 0;
  for (auto& l : layers) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (pos + nw + nb > values.size()) {
      throw DomainError("flat parameter vector is too short");
    }
    std::copy_n(values.begin() + pos, nw, l.weight.data());
    pos += nw;
    std::copy_n(values.begin() + pos, nb, l.bias.data());
    pos += nb;
  }
  if (pos != values.size()) {
    throw DomainError("flat parameter vector is too long");
  }
}

}  // namespace etank
