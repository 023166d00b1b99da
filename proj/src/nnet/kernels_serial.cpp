// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels: one sample at a time, no blocking, no threads.

#include <vector>

#include "kernels_common.hpp"

namespace modid::kernels::serial {

Matrix forward_batch(const MlpFunction& net, const Matrix& x, ForwardTape* tape) {
  detail::check_input(net, x);
  const std::size_t batch = x.cols();
  const std::size_t L = net.num_layers();

  std::vector<Matrix> layers;
  layers.reserve(L + 1);
  layers.push_back(x);
  for (std::size_t l = 0; l < L; ++l) layers.emplace_back(net.fan_out(l), batch);

  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto w = net.weights(l);
      const auto b = net.biases(l);
      const std::size_t in = net.fan_in(l);
      const bool hidden = l + 1 < L;
      for (std::size_t o = 0; o < net.fan_out(l); ++o) {
        double z = b[o];
        for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * layers[l](i, s);
        layers[l + 1](o, s) = hidden && z < 0.0 ? 0.0 : z;
      }
    }
  }

  Matrix out = layers.back();
  if (net.output_transform() == OutputTransform::softplus)
    for (double& v : out.data()) v = softplus(v);
  if (tape) tape->layers = std::move(layers);
  return out;
}

std::vector<double> backward(const MlpFunction& net, const ForwardTape& tape,
                             const Matrix& upstream) {
  detail::check_tape(net, tape, upstream);
  const std::size_t L = net.num_layers();
  std::vector<double> grad(net.parameter_count(), 0.0);

  for (std::size_t s = 0; s < tape.batch(); ++s) {
    std::vector<double> delta(net.output_width());
    for (std::size_t o = 0; o < delta.size(); ++o) {
      delta[o] = upstream(o, s);
      if (net.output_transform() == OutputTransform::softplus)
        delta[o] *= logistic(tape.layers[L](o, s));
    }
    for (std::size_t l = L; l-- > 0;) {
      const std::size_t in = net.fan_in(l), out = net.fan_out(l);
      const auto w = net.weights(l);
      const Matrix& a = tape.layers[l];
      const std::size_t wo = net.weight_offset(l), bo = net.bias_offset(l);
      for (std::size_t o = 0; o < out; ++o) {
        grad[bo + o] += delta[o];
        for (std::size_t i = 0; i < in; ++i) grad[wo + o * in + i] += delta[o] * a(i, s);
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (std::size_t i = 0; i < in; ++i) {
        // rectifier subgradient is 0 at the kink
        if (a(i, s) <= 0.0) continue;
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) acc += w[o * in + i] * delta[o];
        prev[i] = acc;
      }
      delta = std::move(prev);
    }
  }
  return grad;
}

}  // namespace modid::kernels::serial
