// SPDX-License-Identifier: Apache-2.0
//
// Batched forward and reverse-mode passes for MlpFunction.
//
// Batches are feature-major: a (width x batch) Matrix holds one sample per
// column. Two implementations share the same contract:
//   kernels::serial  per-sample reference loops, accumulated in sample order
//   kernels::omp     OpenMP over fixed-size sample chunks, chunk partials
//                    reduced in chunk order
// The chunking does not depend on the thread count, so omp results are
// bit-identical for any OMP_NUM_THREADS. The two implementations agree to
// rounding, not bitwise.

#pragma once

#include <cstddef>
#include <vector>

#include "modid/matrix.hpp"
#include "modid/mlp.hpp"

namespace modid {

/// Activations recorded by a forward pass and consumed by backward.
///
/// layers[0] is the input batch, layers[l] for 0 < l < L the rectified output
/// of hidden layer l, and layers[L] the affine output before the optional
/// output transform.
struct ForwardTape {
  std::vector<Matrix> layers;

  bool recorded() const noexcept { return !layers.empty(); }
  std::size_t batch() const noexcept { return layers.empty() ? 0 : layers.front().cols(); }
  void clear() noexcept { layers.clear(); }
};

namespace kernels {

/// Samples per work item of the OpenMP kernels.
inline constexpr std::size_t kChunk = 32;

namespace serial {
Matrix forward_batch(const MlpFunction& net, const Matrix& x, ForwardTape* tape = nullptr);
/// Gradient of sum_s <upstream[:, s], output[:, s]> with respect to every
/// parameter, laid out like net.parameters().
std::vector<double> backward(const MlpFunction& net, const ForwardTape& tape,
                             const Matrix& upstream);
}  // namespace serial

namespace omp {
Matrix forward_batch(const MlpFunction& net, const Matrix& x, ForwardTape* tape = nullptr);
std::vector<double> backward(const MlpFunction& net, const ForwardTape& tape,
                             const Matrix& upstream);
}  // namespace omp

}  // namespace kernels

/// Default batch kernels (OpenMP).
inline Matrix forward_batch(const MlpFunction& net, const Matrix& x, ForwardTape* tape = nullptr) {
  return kernels::omp::forward_batch(net, x, tape);
}
inline std::vector<double> backward(const MlpFunction& net, const ForwardTape& tape,
                                    const Matrix& upstream) {
  return kernels::omp::backward(net, tape, upstream);
}

}  // namespace modid
