// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "modid/error.hpp"
#include "modid/kernels.hpp"

namespace modid::kernels::detail {

inline void check_input(const MlpFunction& net, const Matrix& x) {
  if (net.num_layers() == 0) throw InvalidArchitecture("network has no layers");
  if (x.rows() != net.input_width())
    throw ShapeError("forward_batch: input has " + std::to_string(x.rows()) +
                     " features, network expects " + std::to_string(net.input_width()));
}

inline void check_tape(const MlpFunction& net, const ForwardTape& tape, const Matrix& upstream) {
  if (!tape.recorded()) throw StateError("backward called without a recorded forward pass");
  if (tape.layers.size() != net.num_layers() + 1)
    throw StateError("recorded forward pass belongs to a different architecture");
  for (std::size_t l = 0; l < tape.layers.size(); ++l)
    if (tape.layers[l].rows() != net.layer_sizes()[l] || tape.layers[l].cols() != tape.batch())
      throw StateError("recorded forward pass belongs to a different architecture");
  if (upstream.rows() != net.output_width() || upstream.cols() != tape.batch())
    throw ShapeError("backward: upstream gradient must be " + std::to_string(net.output_width()) +
                     " x " + std::to_string(tape.batch()));
}

}  // namespace modid::kernels::detail
