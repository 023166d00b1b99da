// SPDX-License-Identifier: Apache-2.0

#include "modid/composition.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "modid/error.hpp"

namespace modid {

void HillFunction::validate() const {
  if (!(half_point > 0.0) || !std::isfinite(half_point))
    throw InvalidParameter("Hill half_point must be positive, got " + std::to_string(half_point));
  if (!(coefficient > 0.0) || !std::isfinite(coefficient))
    throw InvalidParameter("Hill coefficient must be positive, got " + std::to_string(coefficient));
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw InvalidParameter("Hill amplitude must be nonnegative");
  if (!(basal >= 0.0) || !std::isfinite(basal))
    throw InvalidParameter("Hill basal level must be nonnegative");
}

namespace {

double hill_value(const HillFunction& h, double u) noexcept {
  const double r = std::pow(u / h.half_point, h.coefficient);
  if (h.kind == HillKind::activating) return h.basal + h.amplitude * r / (1.0 + r);
  return h.basal + h.amplitude / (1.0 + r);
}

void check_unit_input(double u) {
  if (!(u >= 0.0 && u <= 1.0))
    throw DomainError("Hill input must lie in [0, 1], got " + std::to_string(u));
}

}  // namespace

double eval_hill(const HillFunction& h, double u) {
  h.validate();
  check_unit_input(u);
  return hill_value(h, u);
}

ResourceCompositionMap::ResourceCompositionMap(std::vector<double> theta)
    : theta_(std::move(theta)) {
  if (theta_.empty()) throw InvalidParameter("composition map needs at least one module");
  for (double t : theta_)
    if (!(t > 0.0) || !std::isfinite(t))
      throw InvalidParameter("composition parameters must be positive, got " + std::to_string(t));
}

void compose(std::span<const double> theta, std::span<const double> y, std::span<double> out) {
  if (theta.size() != y.size() || out.size() != y.size())
    throw ShapeError("composition expects matching theta, y and output widths");
  double denom = 1.0;
  for (double v : y) denom += v;
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = theta[i] * y[i] / denom;
}

std::vector<double> eval_map(const ResourceCompositionMap& map, std::span<const double> y) {
  if (y.size() != map.n_modules())
    throw ShapeError("eval_map: expected " + std::to_string(map.n_modules()) +
                     " module outputs, got " + std::to_string(y.size()));
  for (double v : y)
    if (!(v >= 0.0)) throw DomainError("module outputs must be nonnegative");
  std::vector<double> out(y.size());
  compose(map.theta(), y, out);
  return out;
}

double eval_single_module(double theta, double y) { return theta * y / (1.0 + y); }

UniModularInputSet::UniModularInputSet(std::vector<Interval> intervals, std::vector<double> anchor)
    : intervals_(std::move(intervals)), anchor_(std::move(anchor)) {
  if (intervals_.empty()) throw InvalidParameter("input set needs at least one module");
  if (anchor_.size() != intervals_.size())
    throw ShapeError("anchor dimension must match the number of intervals");
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (!(intervals_[i].lo < intervals_[i].hi))
      throw InvalidParameter("interval " + std::to_string(i) + " must satisfy a < b");
    if (!intervals_[i].contains(anchor_[i]))
      throw InvalidParameter("anchor component " + std::to_string(i) + " lies outside its interval");
  }
}

UniModularInputSet UniModularInputSet::unit(std::size_t n_modules) {
  return UniModularInputSet(std::vector<Interval>(n_modules, Interval{0.0, 1.0}),
                            std::vector<double>(n_modules, 1.0));
}

bool UniModularInputSet::contains(std::span<const double> u) const {
  if (u.size() != n_modules()) return false;
  for (std::size_t i = 0; i < n_modules(); ++i) {
    if (!intervals_[i].contains(u[i])) continue;
    bool pinned = true;
    for (std::size_t j = 0; j < n_modules() && pinned; ++j)
      if (j != i && u[j] != anchor_[j]) pinned = false;
    if (pinned) return true;
  }
  return false;
}

Matrix sample_unimodular(const UniModularInputSet& set, std::size_t per_module,
                         std::uint64_t seed) {
  if (per_module == 0) throw InvalidParameter("per_module must be at least 1");
  const std::size_t n = set.n_modules();
  Matrix points(n * per_module, n);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const Interval iv = set.intervals()[i];
    std::uniform_real_distribution<double> dist(iv.lo, iv.hi);
    for (std::size_t k = 0; k < per_module; ++k) {
      auto row = points.row(i * per_module + k);
      for (std::size_t j = 0; j < n; ++j) row[j] = set.anchor()[j];
      // uniform_real_distribution may round up to hi for very narrow intervals
      row[i] = std::min(dist(rng), iv.hi);
    }
  }
  return points;
}

Matrix sample_uniform(const Interval& interval, std::size_t count, std::uint64_t seed) {
  return sample_unimodular(UniModularInputSet({interval}, {interval.hi}), count, seed);
}

Matrix grid_inputs(std::span<const Interval> intervals, std::size_t points_per_axis) {
  if (points_per_axis < 2) throw InvalidParameter("grid needs at least 2 points per axis");
  const std::size_t n = intervals.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= points_per_axis;
  Matrix points(total, n);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t p = 0; p < total; ++p) {
    for (std::size_t j = 0; j < n; ++j) {
      const Interval iv = intervals[j];
      // last index maps exactly onto hi
      points(p, j) = idx[j] + 1 == points_per_axis
                         ? iv.hi
                         : iv.lo + iv.width() * static_cast<double>(idx[j]) /
                                       static_cast<double>(points_per_axis - 1);
    }
    for (std::size_t j = n; j-- > 0;) {
      if (++idx[j] < points_per_axis) break;
      idx[j] = 0;
    }
  }
  return points;
}

Dataset generate_dataset(std::span<const HillFunction> fns, const ResourceCompositionMap& map,
                         const Matrix& inputs, Provenance provenance) {
  const std::size_t n = map.n_modules();
  if (fns.size() != n)
    throw ShapeError("generate_dataset: " + std::to_string(fns.size()) + " functions for " +
                     std::to_string(n) + " modules");
  if (!inputs.empty() && inputs.cols() != n)
    throw ShapeError("generate_dataset: input width " + std::to_string(inputs.cols()) +
                     " does not match " + std::to_string(n) + " modules");
  for (const auto& h : fns) h.validate();
  for (double u : inputs.data()) check_unit_input(u);

  Dataset data;
  data.provenance = provenance;
  data.inputs = inputs.empty() ? Matrix(0, n) : inputs;
  data.outputs = Matrix(inputs.rows(), n);
  const auto rows = static_cast<std::ptrdiff_t>(inputs.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < rows; ++k) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = hill_value(fns[i], inputs(k, i));
    double denom = 1.0;
    for (double v : y) denom += v;
    for (std::size_t i = 0; i < n; ++i) data.outputs(k, i) = map.theta()[i] * y[i] / denom;
  }
  return data;
}

std::vector<double> GroundTruth::module_outputs(std::span<const double> u) const {
  if (u.size() != modules.size()) throw ShapeError("ground truth: input width mismatch");
  std::vector<double> y(modules.size());
  for (std::size_t i = 0; i < modules.size(); ++i) y[i] = eval_hill(modules[i], u[i]);
  return y;
}

Matrix GroundTruth::outputs(const Matrix& inputs) const {
  return generate_dataset(modules, map(), inputs).outputs;
}

GroundTruth single_module_truth() {
  GroundTruth t;
  t.modules = {HillFunction{HillKind::activating, 0.797, 0.494, 4.0, 0.443}};
  t.theta = {1.0};
  t.input_set = UniModularInputSet::unit(1);
  t.seed = 0;
  return t;
}

GroundTruth two_module_truth() {
  GroundTruth t;
  t.modules = {HillFunction{HillKind::activating, 0.326, 0.952, 4.0, 0.176},
               HillFunction{HillKind::repressing, 0.261, 0.415, 2.0, 0.192}};
  t.theta = {0.703, 0.204};
  t.input_set = UniModularInputSet::unit(2);
  t.seed = 0;
  return t;
}

}  // namespace modid
