// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

namespace modid {

struct GradCheckReport {
  std::size_t instances = 0;
  std::size_t parameters_checked = 0;
  std::size_t resampled = 0;  // draws discarded for having a pre-activation near a kink
  double max_relative_error = 0.0;
  double tolerance = 1e-6;
  bool passed() const noexcept { return max_relative_error <= tolerance; }
};

/// Compares reverse-mode gradients with central differences on random
/// networks and batches. Draws where some hidden pre-activation lies within
/// kink_margin of zero are redrawn. The error of an instance is
/// max|g - g_fd| / max|g_fd|.
GradCheckReport grad_check(std::size_t instances, std::uint64_t seed, double kink_margin = 1e-4,
                           double tolerance = 1e-6);

}  // namespace modid
