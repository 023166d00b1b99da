// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth module functions, the resource-sharing composition map and the
// uni-modular input sets used to generate training data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "modid/matrix.hpp"

namespace modid {

enum class HillKind { activating, repressing };

/// Regulatory function basal + amplitude * r / (1 + r) (activating) or
/// basal + amplitude / (1 + r) (repressing), with r = (u / half_point)^coefficient.
struct HillFunction {
  HillKind kind = HillKind::activating;
  double amplitude = 1.0;
  double half_point = 0.5;
  double coefficient = 1.0;
  double basal = 0.0;

  /// Throws InvalidParameter when the parameters leave the admissible region.
  void validate() const;
  double max_value() const noexcept { return basal + amplitude; }

  friend bool operator==(const HillFunction&, const HillFunction&) = default;
};

/// Evaluates h at u in [0, 1].
double eval_hill(const HillFunction& h, double u);

/// Composition map G_i(y) = theta_i * y_i / (1 + sum_j y_j).
class ResourceCompositionMap {
 public:
  explicit ResourceCompositionMap(std::vector<double> theta);

  std::size_t n_modules() const noexcept { return theta_.size(); }
  std::span<const double> theta() const noexcept { return theta_; }

 private:
  std::vector<double> theta_;
};

/// Applies the map to nonnegative module outputs; throws DomainError otherwise.
std::vector<double> eval_map(const ResourceCompositionMap& map, std::span<const double> y);

/// Single-module form theta * y / (1 + y).
double eval_single_module(double theta, double y);

/// Unchecked composition kernel shared by the map and the learned models,
/// whose module outputs and parameters are not sign constrained.
void compose(std::span<const double> theta, std::span<const double> y, std::span<double> out);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Union over i of { u : u_i in [a_i, b_i], u_j = anchor_j for j != i }.
class UniModularInputSet {
 public:
  UniModularInputSet(std::vector<Interval> intervals, std::vector<double> anchor);

  /// [0, 1] for every module, anchored at the right end points.
  static UniModularInputSet unit(std::size_t n_modules);

  std::size_t n_modules() const noexcept { return intervals_.size(); }
  std::span<const Interval> intervals() const noexcept { return intervals_; }
  std::span<const double> anchor() const noexcept { return anchor_; }

  bool contains(std::span<const double> u) const;

 private:
  std::vector<Interval> intervals_;
  std::vector<double> anchor_;
};

/// Draws per_module uniform points for each module, block-major, one row per point.
Matrix sample_unimodular(const UniModularInputSet& set, std::size_t per_module,
                         std::uint64_t seed);

/// Uniform i.i.d. points on [a, b] for a one-module system (the training set of
/// the single-module experiment).
Matrix sample_uniform(const Interval& interval, std::size_t count, std::uint64_t seed);

/// Lattice over the product of the intervals, end points included, last axis fastest.
Matrix grid_inputs(std::span<const Interval> intervals, std::size_t points_per_axis);

enum class Provenance { unimodular, grid, custom };

struct Dataset {
  Matrix inputs;   // one row per sample, n columns
  Matrix outputs;  // one row per sample, m columns
  Provenance provenance = Provenance::custom;

  std::size_t size() const noexcept { return inputs.rows(); }
};

/// Noiseless pairs (u, G(f_1(u_1), ..., f_n(u_n))).
Dataset generate_dataset(std::span<const HillFunction> fns, const ResourceCompositionMap& map,
                         const Matrix& inputs, Provenance provenance = Provenance::custom);

/// Everything needed to regenerate a dataset and to score a learned model.
struct GroundTruth {
  std::vector<HillFunction> modules;
  std::vector<double> theta;
  UniModularInputSet input_set = UniModularInputSet::unit(1);
  std::uint64_t seed = 0;

  ResourceCompositionMap map() const { return ResourceCompositionMap(theta); }
  std::size_t n_modules() const noexcept { return modules.size(); }
  /// Module outputs f_i(u_i) for one input vector.
  std::vector<double> module_outputs(std::span<const double> u) const;
  /// Composed outputs G(f(u), theta) for every row of inputs.
  Matrix outputs(const Matrix& inputs) const;
};

/// Activating Hill function of the single-module identification example, theta = 1.
GroundTruth single_module_truth();
/// Activating/repressing pair with theta = (0.703, 0.204).
GroundTruth two_module_truth();

}  // namespace modid
