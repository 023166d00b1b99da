// SPDX-License-Identifier: Apache-2.0

#include "modid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modid/adam.hpp"
#include "modid/error.hpp"
#include "modid/kernels.hpp"
#include "modid/seed.hpp"

namespace modid {

std::size_t ModularModel::parameter_count() const {
  std::size_t n = theta_hat.size();
  for (const auto& s : surrogates) n += s.parameter_count();
  return n;
}

std::vector<double> ModularModel::pack() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& s : surrogates)
    flat.insert(flat.end(), s.parameters().begin(), s.parameters().end());
  flat.insert(flat.end(), theta_hat.begin(), theta_hat.end());
  return flat;
}

void ModularModel::unpack(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("unpack: parameter count mismatch");
  std::size_t at = 0;
  for (auto& s : surrogates) {
    auto p = s.parameters();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), p.size(), p.begin());
    at += p.size();
  }
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(at), flat.end(), theta_hat.begin());
}

ModularModel make_modular_model(std::size_t n_modules, const ModularArchitecture& arch,
                                std::uint64_t seed) {
  if (n_modules == 0) throw InvalidArchitecture("modular model needs at least one module");
  ModularModel model;
  for (std::size_t i = 0; i < n_modules; ++i)
    model.surrogates.push_back(init_kaiming(mlp_layout(1, arch.hidden_width, arch.hidden_layers, 1),
                                            derive_seed(seed, i), arch.transform));
  model.theta_hat.assign(n_modules, arch.theta_init);
  model.learn_theta = arch.learn_theta;
  return model;
}

MonolithicModel make_monolithic_model(std::size_t n_inputs, std::size_t n_outputs,
                                      std::size_t hidden_width, std::size_t hidden_layers,
                                      std::uint64_t seed) {
  return {init_kaiming(mlp_layout(n_inputs, hidden_width, hidden_layers, n_outputs), seed)};
}

namespace {

void check_modular(const ModularModel& model, std::size_t width) {
  if (model.n_modules() == 0 || model.theta_hat.size() != model.n_modules())
    throw ShapeError("modular model needs one theta_hat per surrogate");
  if (width != model.n_modules())
    throw ShapeError("input width " + std::to_string(width) + " does not match " +
                     std::to_string(model.n_modules()) + " modules");
}

// Column i of inputs as a 1 x N feature-major batch.
Matrix column_batch(const Matrix& inputs, std::size_t i) {
  Matrix x(1, inputs.rows());
  for (std::size_t k = 0; k < inputs.rows(); ++k) x(0, k) = inputs(k, i);
  return x;
}

// yhat (n x N feature-major) -> predictions (N x n)
Matrix compose_batch(std::span<const double> theta, const Matrix& yhat) {
  const std::size_t n = yhat.rows(), N = yhat.cols();
  Matrix out(N, n);
  for (std::size_t k = 0; k < N; ++k) {
    double denom = 1.0;
    for (std::size_t i = 0; i < n; ++i) denom += yhat(i, k);
    for (std::size_t i = 0; i < n; ++i) out(k, i) = theta[i] * yhat(i, k) / denom;
  }
  return out;
}

double mean_squared(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("prediction and target shapes differ");
  if (pred.rows() == 0) throw DomainError("loss of an empty dataset is undefined");
  double total = 0.0;
  for (std::size_t k = 0; k < pred.rows(); ++k) {
    double row = 0.0;
    for (std::size_t i = 0; i < pred.cols(); ++i) {
      const double e = pred(k, i) - target(k, i);
      row += e * e;
    }
    total += row;
  }
  return total / static_cast<double>(pred.rows());
}

void check_options(const TrainOptions& options) {
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate))
    throw ConfigError("learning rate must be positive");
}

bool should_record(const TrainOptions& options, std::size_t epoch) {
  if (options.log_stride == 0) return false;
  return epoch % options.log_stride == 0 || epoch == options.epochs;
}

// E_f per module from f_hat values (n x N) on the training inputs.
std::vector<double> surrogate_errors(const Matrix& yhat, const Matrix& inputs,
                                     const GroundTruth& truth) {
  const std::size_t n = yhat.rows();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < inputs.rows(); ++k) {
      const double f = eval_hill(truth.modules[i], inputs(k, i));
      num = std::max(num, std::abs(yhat(i, k) - f));
      den = std::max(den, f);
    }
    out[i] = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::vector<double> theta_errors(std::span<const double> theta_hat, std::span<const double> theta) {
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    out[i] = std::abs(theta_hat[i] - theta[i]) / theta[i];
  return out;
}

Matrix feature_major_outputs(const ModularModel& model, const Matrix& inputs) {
  Matrix yhat(model.n_modules(), inputs.rows());
  for (std::size_t i = 0; i < model.n_modules(); ++i) {
    const Matrix out = forward_batch(model.surrogates[i], column_batch(inputs, i));
    std::copy(out.data().begin(), out.data().end(), yhat.row(i).begin());
  }
  return yhat;
}

std::vector<std::string> provenance_warnings(const Dataset& data) {
  if (data.provenance == Provenance::unimodular) return {};
  return {"training data is not marked uni-modular; identifiability is not guaranteed"};
}


// Gradient of the mean squared cost with respect to pack() order, theta_hat
// included. dL/dG_ik = 2 (G_hat_ik - Y_ik) / N is chained through
// G_i = theta_i y_i / S with S = 1 + sum_j y_j.
void modular_gradient(const ModularModel& model, const Matrix& yhat, const Matrix& pred,
                      const Matrix& targets, const std::vector<ForwardTape>& tapes,
                      std::vector<Matrix>& upstream, std::vector<double>& grad) {
  const std::size_t n = model.n_modules(), N = yhat.cols();
  const double scale = 2.0 / static_cast<double>(N);
  std::vector<double> grad_theta(n, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    double S = 1.0;
    for (std::size_t i = 0; i < n; ++i) S += yhat(i, k);
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = scale * (pred(k, i) - targets(k, i));
      grad_theta[i] += r * yhat(i, k) / S;
      cross += r * model.theta_hat[i] * yhat(i, k);
      upstream[i](0, k) = r * model.theta_hat[i] / S;
    }
    for (std::size_t i = 0; i < n; ++i) upstream[i](0, k) -= cross / (S * S);
  }
  std::size_t at = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = backward(model.surrogates[i], tapes[i], upstream[i]);
    std::copy(g.begin(), g.end(), grad.begin() + static_cast<std::ptrdiff_t>(at));
    at += g.size();
  }
  for (std::size_t i = 0; i < n; ++i) grad[at + i] = grad_theta[i];
}

}  // namespace

Matrix surrogate_outputs(const ModularModel& model, const Matrix& inputs) {
  check_modular(model, inputs.cols());
  return feature_major_outputs(model, inputs).transposed();
}

Matrix predict(const ModularModel& model, const Matrix& inputs) {
  check_modular(model, inputs.cols());
  return compose_batch(model.theta_hat, feature_major_outputs(model, inputs));
}

Matrix predict(const MonolithicModel& model, const Matrix& inputs) {
  return forward_batch(model.net, inputs.transposed()).transposed();
}

double loss(const ModularModel& model, const Dataset& data) {
  return mean_squared(predict(model, data.inputs), data.outputs);
}

double loss(const MonolithicModel& model, const Dataset& data) {
  if (model.net.input_width() != data.inputs.cols() || model.net.output_width() != data.outputs.cols())
    throw ShapeError("monolithic network does not match the dataset dimensions");
  return mean_squared(predict(model, data.inputs), data.outputs);
}


std::vector<double> loss_gradient(const ModularModel& model, const Dataset& data) {
  check_modular(model, data.inputs.cols());
  if (data.size() == 0) throw DomainError("loss of an empty dataset is undefined");
  const std::size_t n = model.n_modules(), N = data.size();
  std::vector<ForwardTape> tapes(n);
  Matrix yhat(n, N);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix out = forward_batch(model.surrogates[i], column_batch(data.inputs, i), &tapes[i]);
    std::copy(out.data().begin(), out.data().end(), yhat.row(i).begin());
  }
  const Matrix pred = compose_batch(model.theta_hat, yhat);
  std::vector<Matrix> upstream(n, Matrix(1, N));
  std::vector<double> grad(model.parameter_count());
  modular_gradient(model, yhat, pred, data.outputs, tapes, upstream, grad);
  return grad;
}

std::vector<double> loss_gradient(const MonolithicModel& model, const Dataset& data) {
  if (data.size() == 0) throw DomainError("loss of an empty dataset is undefined");
  const Matrix x = data.inputs.transposed();
  const Matrix target = data.outputs.transposed();
  ForwardTape tape;
  const Matrix out = forward_batch(model.net, x, &tape);
  if (out.rows() != target.rows()) throw ShapeError("monolithic network does not match the dataset");
  const double scale = 2.0 / static_cast<double>(data.size());
  Matrix upstream(out.rows(), out.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t k = 0; k < out.cols(); ++k) upstream(i, k) = scale * (out(i, k) - target(i, k));
  return backward(model.net, tape, upstream);
}

std::vector<double> normalized_max_errors(const Matrix& predicted, const Matrix& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw ShapeError("normalized_max_errors: shape mismatch");
  std::vector<double> out(truth.cols());
  for (std::size_t i = 0; i < truth.cols(); ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < truth.rows(); ++k) {
      num = std::max(num, std::abs(predicted(k, i) - truth(k, i)));
      den = std::max(den, truth(k, i));
    }
    out[i] = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

MetricsRecord compute_metrics(const ModularModel& model, const Dataset& data,
                              const GroundTruth& truth, std::size_t epoch) {
  check_modular(model, data.inputs.cols());
  if (truth.n_modules() != model.n_modules()) throw ShapeError("ground truth module count differs");
  const Matrix yhat = feature_major_outputs(model, data.inputs);
  const Matrix pred = compose_batch(model.theta_hat, yhat);
  MetricsRecord r;
  r.epoch = epoch;
  r.loss = mean_squared(pred, data.outputs);
  r.E_G = normalized_max_errors(pred, truth.outputs(data.inputs));
  r.E_f = surrogate_errors(yhat, data.inputs, truth);
  r.E_theta = theta_errors(model.theta_hat, truth.theta);
  return r;
}

ModularTrainResult train_modular(ModularModel model, const Dataset& data, const GroundTruth& truth,
                                 const TrainOptions& options) {
  check_options(options);
  if (options.epochs == 0) throw ConfigError("epochs must be positive");
  check_modular(model, data.inputs.cols());
  if (data.size() == 0) throw DomainError("cannot train on an empty dataset");
  if (truth.n_modules() != model.n_modules()) throw ShapeError("ground truth module count differs");

  ModularTrainResult result;
  result.warnings = provenance_warnings(data);

  const std::size_t n = model.n_modules();
  const std::size_t N = data.size();
  const Matrix clean_targets = truth.outputs(data.inputs);

  std::vector<Matrix> columns;
  for (std::size_t i = 0; i < n; ++i) columns.push_back(column_batch(data.inputs, i));

  std::vector<double> flat = model.pack();
  AdamState adam(flat.size(), options.learning_rate);
  std::vector<ForwardTape> tapes(n);
  Matrix yhat(n, N);
  std::vector<double> grad(flat.size());
  std::vector<Matrix> upstream(n, Matrix(1, N));

  for (std::size_t epoch = 0;; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix out = forward_batch(model.surrogates[i], columns[i], &tapes[i]);
      std::copy(out.data().begin(), out.data().end(), yhat.row(i).begin());
    }
    const Matrix pred = compose_batch(model.theta_hat, yhat);

    if (should_record(options, epoch)) {
      MetricsRecord r;
      r.epoch = epoch;
      r.loss = mean_squared(pred, data.outputs);
      r.E_G = normalized_max_errors(pred, clean_targets);
      r.E_f = surrogate_errors(yhat, data.inputs, truth);
      r.E_theta = theta_errors(model.theta_hat, truth.theta);
      if (options.on_record) options.on_record(r);
      result.history.push_back(std::move(r));
    }
    if (epoch == options.epochs) break;

    modular_gradient(model, yhat, pred, data.outputs, tapes, upstream, grad);
    const std::size_t at = flat.size() - n;
    if (!model.learn_theta)
      for (std::size_t i = 0; i < n; ++i) grad[at + i] = 0.0;

    adam_step(flat, grad, adam);
    if (!model.learn_theta)
      for (std::size_t i = 0; i < n; ++i) flat[at + i] = model.theta_hat[i];
    model.unpack(flat);
  }

  result.model = std::move(model);
  return result;
}

MonolithicTrainResult train_monolithic(MonolithicModel model, const Dataset& data,
                                       const TrainOptions& options) {
  check_options(options);
  if (data.size() == 0) throw DomainError("cannot train on an empty dataset");
  if (model.net.input_width() != data.inputs.cols() || model.net.output_width() != data.outputs.cols())
    throw ShapeError("monolithic network does not match the dataset dimensions");

  MonolithicTrainResult result;
  result.warnings = provenance_warnings(data);
  const std::size_t N = data.size();
  const double scale = 2.0 / static_cast<double>(N);
  const Matrix x = data.inputs.transposed();
  const Matrix target = data.outputs.transposed();
  AdamState adam(model.net.parameter_count(), options.learning_rate);
  ForwardTape tape;
  Matrix upstream(target.rows(), N);

  for (std::size_t epoch = 0;; ++epoch) {
    const Matrix out = forward_batch(model.net, x, &tape);
    if (should_record(options, epoch)) {
      MetricsRecord r;
      r.epoch = epoch;
      r.loss = mean_squared(out.transposed(), data.outputs);
      if (options.on_record) options.on_record(r);
      result.history.push_back(std::move(r));
    }
    if (epoch >= options.epochs) break;
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t k = 0; k < N; ++k) upstream(i, k) = scale * (out(i, k) - target(i, k));
    const auto g = backward(model.net, tape, upstream);
    adam_step(model.net.parameters(), g, adam);
  }

  result.model = std::move(model);
  return result;
}

std::vector<const MetricsRecord*> first_crossings(const std::vector<MetricsRecord>& history,
                                                  std::span<const double> thresholds) {
  std::vector<const MetricsRecord*> hits(thresholds.size(), nullptr);
  for (const auto& r : history) {
    if (r.E_G.empty()) continue;
    const double worst = *std::max_element(r.E_G.begin(), r.E_G.end());
    for (std::size_t t = 0; t < thresholds.size(); ++t)
      if (!hits[t] && worst < thresholds[t]) hits[t] = &r;
  }
  return hits;
}

ErrorSurface evaluate_grid(const Predictor& model, const GroundTruth& truth,
                           std::size_t points_per_axis) {
  ErrorSurface surface;
  surface.inputs = grid_inputs(truth.input_set.intervals(), points_per_axis);
  const Matrix g = truth.outputs(surface.inputs);
  const Matrix pred = model(surface.inputs);
  if (pred.rows() != g.rows() || pred.cols() != g.cols())
    throw ShapeError("evaluate_grid: model output shape does not match the system");
  surface.errors = Matrix(g.rows(), g.cols());
  for (std::size_t k = 0; k < g.rows(); ++k)
    for (std::size_t i = 0; i < g.cols(); ++i) {
      if (g(k, i) == 0.0) {
        surface.errors(k, i) = std::numeric_limits<double>::quiet_NaN();
        ++surface.undefined_points;
      } else {
        surface.errors(k, i) = std::abs(pred(k, i) - g(k, i)) / std::abs(g(k, i));
      }
    }
  return surface;
}

ErrorSurface evaluate_grid(const ModularModel& model, const GroundTruth& truth,
                           std::size_t points_per_axis) {
  return evaluate_grid([&](const Matrix& u) { return predict(model, u); }, truth, points_per_axis);
}

ErrorSurface evaluate_grid(const MonolithicModel& model, const GroundTruth& truth,
                           std::size_t points_per_axis) {
  return evaluate_grid([&](const Matrix& u) { return predict(model, u); }, truth, points_per_axis);
}

double median_error(const ErrorSurface& surface,
                    const std::function<bool(std::span<const double>)>& region) {
  std::vector<double> values;
  for (std::size_t k = 0; k < surface.errors.rows(); ++k) {
    if (region && !region(surface.inputs.row(k))) continue;
    for (double e : surface.errors.row(k))
      if (!std::isnan(e)) values.push_back(e);
  }
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

SignDiagnostic surrogate_sign(const ModularModel& model, const GroundTruth& truth,
                              std::size_t points_per_axis) {
  SignDiagnostic d;
  d.min_output = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.n_modules(); ++i) {
    const Interval iv = truth.input_set.intervals()[i];
    const Interval axis[] = {iv};
    const Matrix u = grid_inputs(axis, points_per_axis);
    const Matrix out = forward_batch(model.surrogates[i], u.transposed());
    for (double v : out.data()) d.min_output = std::min(d.min_output, v);
  }
  d.negative = d.min_output < 0.0;
  return d;
}

}  // namespace modid
