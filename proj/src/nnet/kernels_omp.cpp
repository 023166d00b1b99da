// SPDX-License-Identifier: Apache-2.0
//
// OpenMP kernels. Work is split into kChunk-sample column blocks; inside a
// block the sample loop is innermost and contiguous.

#include <algorithm>
#include <vector>

#include "kernels_common.hpp"

namespace modid::kernels::omp {

namespace {

std::size_t chunk_count(std::size_t batch) { return (batch + kChunk - 1) / kChunk; }

// z[o, s] = b[o] + sum_i W[o, i] * a[i, s] for s in [s0, s1)
void affine_block(std::span<const double> w, std::span<const double> b, const Matrix& a,
                  Matrix& z, std::size_t s0, std::size_t s1) {
  const std::size_t in = a.rows(), out = z.rows();
  for (std::size_t o = 0; o < out; ++o) {
    double* zr = &z(o, 0);
    for (std::size_t s = s0; s < s1; ++s) zr[s] = b[o];
    for (std::size_t i = 0; i < in; ++i) {
      const double wi = w[o * in + i];
      const double* ar = a.row(i).data();
#pragma omp simd
      for (std::size_t s = s0; s < s1; ++s) zr[s] += wi * ar[s];
    }
  }
}

}  // namespace

Matrix forward_batch(const MlpFunction& net, const Matrix& x, ForwardTape* tape) {
  detail::check_input(net, x);
  const std::size_t batch = x.cols();
  const std::size_t L = net.num_layers();

  std::vector<Matrix> layers;
  layers.reserve(L + 1);
  layers.push_back(x);
  for (std::size_t l = 0; l < L; ++l) layers.emplace_back(net.fan_out(l), batch);

  const auto chunks = static_cast<std::ptrdiff_t>(chunk_count(batch));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t s0 = static_cast<std::size_t>(c) * kChunk;
    const std::size_t s1 = std::min(batch, s0 + kChunk);
    for (std::size_t l = 0; l < L; ++l) {
      Matrix& z = layers[l + 1];
      affine_block(net.weights(l), net.biases(l), layers[l], z, s0, s1);
      if (l + 1 < L) {
        for (std::size_t o = 0; o < z.rows(); ++o) {
          double* zr = &z(o, 0);
          for (std::size_t s = s0; s < s1; ++s) zr[s] = zr[s] < 0.0 ? 0.0 : zr[s];
        }
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
  const std::size_t batch = tape.batch();
  const std::size_t P = net.parameter_count();
  const std::size_t n_chunks = chunk_count(batch);
  std::vector<double> partial(n_chunks * P, 0.0);

  const auto chunks = static_cast<std::ptrdiff_t>(n_chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t s0 = static_cast<std::size_t>(c) * kChunk;
    const std::size_t s1 = std::min(batch, s0 + kChunk);
    const std::size_t len = s1 - s0;
    double* g = partial.data() + static_cast<std::size_t>(c) * P;

    // delta is (width x len), local column j <-> sample s0 + j
    Matrix delta(net.output_width(), len);
    for (std::size_t o = 0; o < delta.rows(); ++o)
      for (std::size_t j = 0; j < len; ++j) {
        double d = upstream(o, s0 + j);
        if (net.output_transform() == OutputTransform::softplus)
          d *= logistic(tape.layers[L](o, s0 + j));
        delta(o, j) = d;
      }

    for (std::size_t l = L; l-- > 0;) {
      const std::size_t in = net.fan_in(l), out = net.fan_out(l);
      const auto w = net.weights(l);
      const Matrix& a = tape.layers[l];
      double* gw = g + net.weight_offset(l);
      double* gb = g + net.bias_offset(l);
      for (std::size_t o = 0; o < out; ++o) {
        const double* dr = &delta(o, 0);
        double sb = 0.0;
        for (std::size_t j = 0; j < len; ++j) sb += dr[j];
        gb[o] += sb;
        for (std::size_t i = 0; i < in; ++i) {
          const double* ar = a.row(i).data() + s0;
          double sw = 0.0;
#pragma omp simd reduction(+ : sw)
          for (std::size_t j = 0; j < len; ++j) sw += dr[j] * ar[j];
          gw[o * in + i] += sw;
        }
      }
      if (l == 0) break;
      Matrix prev(in, len, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double* dr = &delta(o, 0);
        for (std::size_t i = 0; i < in; ++i) {
          const double wi = w[o * in + i];
          double* pr = &prev(i, 0);
#pragma omp simd
          for (std::size_t j = 0; j < len; ++j) pr[j] += wi * dr[j];
        }
      }
      for (std::size_t i = 0; i < in; ++i) {
        const double* ar = a.row(i).data() + s0;
        double* pr = &prev(i, 0);
        for (std::size_t j = 0; j < len; ++j)
          if (ar[j] <= 0.0) pr[j] = 0.0;
      }
      delta = std::move(prev);
    }
  }

  std::vector<double> grad(P, 0.0);
  const auto n_params = static_cast<std::ptrdiff_t>(P);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n_params; ++p) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) acc += partial[c * P + static_cast<std::size_t>(p)];
    grad[static_cast<std::size_t>(p)] = acc;
  }
  return grad;
}

}  // namespace modid::kernels::omp
