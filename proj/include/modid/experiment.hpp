// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration, presets and the dispatcher behind the command line.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "modid/io.hpp"
#include "modid/trainer.hpp"

namespace modid {

enum class ExperimentKind {
  single_module,
  two_module_modular,
  two_module_monolithic,
  grid_eval,
  recover,
  counterexample,
  rre,
  gen_data,
  grad_check,
};

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_kind(std::string_view s);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::two_module_modular;
  std::string name = "custom";

  // inputs; empty means "use the built-in default"
  std::filesystem::path dataset;
  std::filesystem::path truth;
  std::filesystem::path checkpoint;
  std::filesystem::path parameters;  // RRE parameters or recover measurements
  std::filesystem::path out = "out";

  std::uint64_t seed = 0;
  std::size_t modules = 2;
  std::size_t points_per_module = 100;
  std::string data_source = "map";  // "map" or "rre"

  // modular model
  std::size_t epochs = 84000;
  double learning_rate = 0.005;
  std::size_t log_stride = 100;
  ModularArchitecture arch;

  // monolithic model; compare_modular also trains the modular model and scores both on the grid
  std::size_t mono_width = 50;
  std::size_t mono_layers = 4;
  std::size_t mono_epochs = 8000;
  double mono_learning_rate = 0.001;
  bool compare_modular = false;

  std::size_t grid_points = 100;

  // counterexample
  double ce_theta = 5.0;
  double ce_theta_hat = 2.0;
  std::size_t ce_points = 1000;

  // closed-form probes and the injectivity check
  std::vector<double> probes1{0.25, 0.75};
  std::vector<double> probes2{0.25, 0.75};
  std::size_t trials = 1000;

  // rre
  std::vector<double> sweep_factors{10.0, 100.0, 1000.0, 1e6};
  std::size_t rre_points = 20;
};

/// fig3, fig4, fig5 or rre_check; ConfigError otherwise.
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

json config_to_json(const ExperimentConfig& c);
/// Overlays the keys present in j onto base; ConfigError on unknown keys or bad values.
ExperimentConfig config_from_json(const json& j, ExperimentConfig base = {});

/// Checks paths and values; ConfigError on the first problem.
void validate(const ExperimentConfig& c);

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3 };

/// Runs the experiment, writing artifacts and manifest.json under c.out.
/// Numerical failures leave diagnostic.json next to the manifest.
int run(const ExperimentConfig& c, std::ostream& log);

/// Metrics history as CSV columns epoch,loss,E_G_i...,E_f_i...,E_theta_i...
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& h,
                       std::size_t n_outputs);

}  // namespace modid
