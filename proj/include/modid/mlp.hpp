// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace modid {

/// Optional transform applied after the identity output layer.
enum class OutputTransform { identity, softplus };

/// Fully connected feedforward network: rectified-linear hidden layers and an
/// affine output layer.
///
/// All parameters live in one contiguous buffer. Layer l owns a row-major
/// (layer_sizes[l+1] x layer_sizes[l]) weight block followed by its bias
/// vector, so the optimizer can treat the network as one flat vector.
class MlpFunction {
 public:
  MlpFunction() = default;
  /// Zero-initialized network; throws InvalidArchitecture for fewer than two
  /// sizes or a zero width.
  explicit MlpFunction(std::vector<std::size_t> layer_sizes,
                       OutputTransform transform = OutputTransform::identity);

  std::span<const std::size_t> layer_sizes() const noexcept { return sizes_; }
  std::size_t num_layers() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t input_width() const noexcept { return sizes_.front(); }
  std::size_t output_width() const noexcept { return sizes_.back(); }
  std::size_t fan_in(std::size_t layer) const { return sizes_.at(layer); }
  std::size_t fan_out(std::size_t layer) const { return sizes_.at(layer + 1); }

  OutputTransform output_transform() const noexcept { return transform_; }
  void set_output_transform(OutputTransform t) noexcept { transform_ = t; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> biases(std::size_t layer);
  std::span<const double> biases(std::size_t layer) const;

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  /// Offsets into parameters() of layer l's weight and bias blocks.
  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_.at(layer) + sizes_[layer] * sizes_[layer + 1];
  }

  friend bool operator==(const MlpFunction&, const MlpFunction&) = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  OutputTransform transform_ = OutputTransform::identity;
};

/// Weights ~ N(0, 2 / fan_in) layer by layer from one mt19937_64 stream, biases zero.
MlpFunction init_kaiming(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                         OutputTransform transform = OutputTransform::identity);

/// Single-sample evaluation.
std::vector<double> forward(const MlpFunction& net, std::span<const double> x);

/// [in, hidden x depth, out].
std::vector<std::size_t> mlp_layout(std::size_t in, std::size_t hidden, std::size_t depth,
                                    std::size_t out);

double softplus(double z) noexcept;
double logistic(double z) noexcept;

}  // namespace modid
