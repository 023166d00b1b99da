// SPDX-License-Identifier: Apache-2.0
//
// Exact algebraic inverse of the two-module probe map and the single-module
// non-identifiability construction.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>

#include "modid/composition.hpp"

namespace modid {

/// Composed outputs of a two-module system at two probes per module, the other
/// module held at u = 1. Order of g:
///   G11^1, G21^1, G12^1, G22^1, G11^2, G21^2, G12^2, G22^2
/// where Gij^k is output i when module j is driven at its k-th probe.
struct ProbeMeasurements {
  std::array<double, 2> probes1{0.25, 0.75};
  std::array<double, 2> probes2{0.25, 0.75};
  std::array<double, 8> g{};
};

/// theta and the module outputs at (probe 1, probe 2, 1) for each module.
struct RecoveredSystem {
  std::array<double, 2> theta{};
  std::array<double, 3> f1_at{};
  std::array<double, 3> f2_at{};
};

/// The eight rational expressions of the probe map; SingularityError on a zero denominator.
std::array<double, 8> forward_F(const RecoveredSystem& x);

/// Measures a two-module ground truth at the given probes.
ProbeMeasurements measure_probes(const GroundTruth& truth, std::array<double, 2> probes1,
                                 std::array<double, 2> probes2);

/// Module values a ground truth takes at the given probes, in RecoveredSystem layout.
RecoveredSystem true_system(const GroundTruth& truth, std::array<double, 2> probes1,
                            std::array<double, 2> probes2);

/// Inverts forward_F. Throws DegenerateProbe (module 1 or 2) when that module's
/// probe responses coincide, SingularityError when an intermediate quotient is undefined.
RecoveredSystem recover(const ProbeMeasurements& m);

/// Threshold below which a recovery denominator counts as zero.
inline constexpr double kDegenerateThreshold = 1e-12;

using ScalarFunction = std::function<double(double)>;

/// f_hat with theta_hat f_hat / (1 + f_hat) == theta f / (1 + f) on [0, 1]:
///   f_hat = (theta / theta_hat) f / (1 + ((theta_hat - theta) / theta_hat) f).
/// Throws InvalidParameter unless both gains are positive and InvalidPair when
/// the denominator is not positive somewhere on a dense grid of [0, 1].
ScalarFunction counterexample_pair(double theta, double theta_hat, ScalarFunction f,
                                   std::size_t check_points = 10001);

struct InjectivityReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_roundtrip_error = 0.0;  // relative, over all eight unknowns
  double min_image_distance = 0.0;   // min over trials of |F(x) - F(x')|_inf / scale
};

/// Samples random admissible pairs x != x' and checks F(x) != F(x') and
/// recover(F(x)) == x. Parallel over trials; each trial has its own derived seed.
InjectivityReport injectivity_probe(std::size_t trials, std::uint64_t seed,
                                    double roundtrip_tol = 1e-9);

}  // namespace modid
