// SPDX-License-Identifier: Apache-2.0

#include "modid/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "modid/error.hpp"

namespace modid {

MlpFunction::MlpFunction(std::vector<std::size_t> layer_sizes, OutputTransform transform)
    : sizes_(std::move(layer_sizes)), transform_(transform) {
  if (sizes_.size() < 2) throw InvalidArchitecture("a network needs at least input and output widths");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0)
      throw InvalidArchitecture("layer widths must be positive");
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

std::span<double> MlpFunction::weights(std::size_t layer) {
  return std::span<double>(params_).subspan(weight_offset(layer), fan_in(layer) * fan_out(layer));
}
std::span<const double> MlpFunction::weights(std::size_t layer) const {
  return std::span<const double>(params_).subspan(weight_offset(layer),
                                                  fan_in(layer) * fan_out(layer));
}
std::span<double> MlpFunction::biases(std::size_t layer) {
  return std::span<double>(params_).subspan(bias_offset(layer), fan_out(layer));
}
std::span<const double> MlpFunction::biases(std::size_t layer) const {
  return std::span<const double>(params_).subspan(bias_offset(layer), fan_out(layer));
}

MlpFunction init_kaiming(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                         OutputTransform transform) {
  MlpFunction net(std::move(layer_sizes), transform);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(net.fan_in(l))));
    for (double& w : net.weights(l)) w = dist(rng);
  }
  return net;
}

std::vector<double> forward(const MlpFunction& net, std::span<const double> x) {
  if (x.size() != net.input_width())
    throw ShapeError("forward: input width " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(net.input_width()));
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weights(l);
    const auto b = net.biases(l);
    const std::size_t in = net.fan_in(l), out = net.fan_out(l);
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * a[i];
      z[o] = acc;
    }
    if (l + 1 < net.num_layers())
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    a = std::move(z);
  }
  if (net.output_transform() == OutputTransform::softplus)
    for (double& v : a) v = softplus(v);
  return a;
}

std::vector<std::size_t> mlp_layout(std::size_t in, std::size_t hidden, std::size_t depth,
                                    std::size_t out) {
  std::vector<std::size_t> sizes{in};
  for (std::size_t d = 0; d < depth; ++d) sizes.push_back(hidden);
  sizes.push_back(out);
  return sizes;
}

double softplus(double z) noexcept {
  // log1p(exp(z)) without overflow for large z
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace modid
