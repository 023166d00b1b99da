// SPDX-License-Identifier: Apache-2.0
//
// Structured (modular) and unstructured (monolithic) surrogate models, the
// shared mean-squared cost, full-batch Adam training and error metrics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "modid/composition.hpp"
#include "modid/matrix.hpp"
#include "modid/mlp.hpp"

namespace modid {

/// n scalar surrogates f_hat_i composed through the resource-sharing map with
/// learnable theta_hat.
struct ModularModel {
  std::vector<MlpFunction> surrogates;
  std::vector<double> theta_hat;
  /// When false theta_hat stays at its initial value (known-theta setting).
  bool learn_theta = true;

  std::size_t n_modules() const noexcept { return surrogates.size(); }
  std::size_t parameter_count() const;
  /// Network parameters in module order, then theta_hat.
  std::vector<double> pack() const;
  void unpack(std::span<const double> flat);
};

struct MonolithicModel {
  MlpFunction net;
};

struct ModularArchitecture {
  std::size_t hidden_width = 20;
  std::size_t hidden_layers = 4;
  double theta_init = 3.0;
  bool learn_theta = true;
  OutputTransform transform = OutputTransform::identity;
};

/// Kaiming-initialized surrogates; surrogate i is seeded from (seed, i).
ModularModel make_modular_model(std::size_t n_modules, const ModularArchitecture& arch,
                                std::uint64_t seed);
MonolithicModel make_monolithic_model(std::size_t n_inputs, std::size_t n_outputs,
                                      std::size_t hidden_width, std::size_t hidden_layers,
                                      std::uint64_t seed);

/// f_hat_i(u_i) for every row of inputs (N x n).
Matrix surrogate_outputs(const ModularModel& model, const Matrix& inputs);
/// Predicted system outputs, one row per input row.
Matrix predict(const ModularModel& model, const Matrix& inputs);
Matrix predict(const MonolithicModel& model, const Matrix& inputs);

/// Mean over samples of the summed squared output errors.
double loss(const ModularModel& model, const Dataset& data);
double loss(const MonolithicModel& model, const Dataset& data);

/// Gradient of loss() in pack() order (theta_hat last, even when it is frozen).
std::vector<double> loss_gradient(const ModularModel& model, const Dataset& data);
/// Gradient of loss() in net.parameters() order.
std::vector<double> loss_gradient(const MonolithicModel& model, const Dataset& data);

struct MetricsRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  std::vector<double> E_G;
  std::vector<double> E_f;
  std::vector<double> E_theta;
};

/// max_k |pred_ik - truth_ik| / max_k truth_ik per output column i.
std::vector<double> normalized_max_errors(const Matrix& predicted, const Matrix& truth);

/// Error metrics of a modular model on the training inputs.
MetricsRecord compute_metrics(const ModularModel& model, const Dataset& data,
                              const GroundTruth& truth, std::size_t epoch = 0);

struct TrainOptions {
  std::size_t epochs = 1000;
  double learning_rate = 1e-3;
  /// Record every log_stride epochs plus the final epoch; 0 disables recording.
  std::size_t log_stride = 100;
  std::function<void(const MetricsRecord&)> on_record;
};

struct ModularTrainResult {
  ModularModel model;
  std::vector<MetricsRecord> history;
  std::vector<std::string> warnings;
};

/// Full-batch Adam on every surrogate parameter and theta_hat jointly.
ModularTrainResult train_modular(ModularModel model, const Dataset& data,
                                 const GroundTruth& truth, const TrainOptions& options);

struct MonolithicTrainResult {
  MonolithicModel model;
  /// (epoch, loss) pairs at the logging stride; E_G columns are empty.
  std::vector<MetricsRecord> history;
  std::vector<std::string> warnings;
};

MonolithicTrainResult train_monolithic(MonolithicModel model, const Dataset& data,
                                       const TrainOptions& options);

/// For each threshold, the first record whose max E_G falls below it
/// (nullptr when never reached).
std::vector<const MetricsRecord*> first_crossings(const std::vector<MetricsRecord>& history,
                                                  std::span<const double> thresholds);

/// Pointwise relative errors |M(u)_i - G_i(u)| / G_i(u) over a lattice.
/// Entries where G_i(u) = 0 are NaN and excluded from aggregates.
struct ErrorSurface {
  Matrix inputs;
  Matrix errors;
  std::size_t undefined_points = 0;
};

using Predictor = std::function<Matrix(const Matrix&)>;

ErrorSurface evaluate_grid(const Predictor& model, const GroundTruth& truth,
                           std::size_t points_per_axis);
ErrorSurface evaluate_grid(const ModularModel& model, const GroundTruth& truth,
                           std::size_t points_per_axis);
ErrorSurface evaluate_grid(const MonolithicModel& model, const GroundTruth& truth,
                           std::size_t points_per_axis);

/// Median over all outputs and the points accepted by region (all when empty).
double median_error(const ErrorSurface& surface,
                    const std::function<bool(std::span<const double>)>& region = {});

/// Smallest surrogate output over a lattice; negative values break the
/// nonnegativity the composition map assumes.
struct SignDiagnostic {
  double min_output = 0.0;
  bool negative = false;
};
SignDiagnostic surrogate_sign(const ModularModel& model, const GroundTruth& truth,
                              std::size_t points_per_axis = 101);

}  // namespace modid
