// SPDX-License-Identifier: Apache-2.0
//
// modid: data generation, training, evaluation and the closed-form and
// reaction-network checks behind one command.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modid/error.hpp"
#include "modid/experiment.hpp"

namespace {

using modid::ExperimentConfig;
using modid::ExperimentKind;

// Flag values that override the config only when given on the command line.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> log_stride;
  std::string config;

  std::optional<std::size_t> modules, points, epochs, hidden_width, hidden_layers;
  std::optional<double> lr, theta_init;
  std::optional<std::string> dataset, truth, checkpoint, parameters, source, model;
  bool fixed_theta = false, softplus = false, compare = false;

  std::optional<std::size_t> mono_epochs, grid, trials, ce_points, rre_points;
  std::optional<double> mono_lr, ce_theta, ce_theta_hat;
  std::vector<double> probes1, probes2, factors;
};

void add_training_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--modules", o.modules, "Number of modules (1 or 2)");
  cmd->add_option("--points", o.points, "Training points per module");
  cmd->add_option("--epochs", o.epochs, "Modular training epochs");
  cmd->add_option("--lr", o.lr, "Modular learning rate");
  cmd->add_option("--hidden-width", o.hidden_width, "Surrogate hidden width");
  cmd->add_option("--hidden-layers", o.hidden_layers, "Surrogate hidden layers");
  cmd->add_option("--theta-init", o.theta_init, "Initial theta_hat");
  cmd->add_flag("--fixed-theta", o.fixed_theta, "Hold theta_hat at its initial value");
  cmd->add_flag("--softplus", o.softplus, "Softplus on surrogate outputs");
  cmd->add_option("--data", o.dataset, "Dataset CSV (default: sample from the ground truth)");
  cmd->add_option("--truth", o.truth, "Ground truth JSON");
  cmd->add_option("--source", o.source, "Data source when sampling: map or rre")
      ->check(CLI::IsMember({"map", "rre"}));
  cmd->add_option("--params", o.parameters, "RRE parameters JSON for --source rre");
  cmd->add_option("--mono-epochs", o.mono_epochs, "Monolithic training epochs");
  cmd->add_option("--mono-lr", o.mono_lr, "Monolithic learning rate");
  cmd->add_option("--grid", o.grid, "Grid points per axis for error surfaces");
  cmd->add_option("--checkpoint", o.checkpoint, "Modular checkpoint used for comparison");
}

void apply(ExperimentConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.log_stride) c.log_stride = *o.log_stride;
  if (o.modules) c.modules = *o.modules;
  if (o.points) c.points_per_module = *o.points;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.lr) c.learning_rate = *o.lr;
  if (o.hidden_width) c.arch.hidden_width = *o.hidden_width;
  if (o.hidden_layers) c.arch.hidden_layers = *o.hidden_layers;
  if (o.theta_init) c.arch.theta_init = *o.theta_init;
  if (o.fixed_theta) c.arch.learn_theta = false;
  if (o.softplus) c.arch.transform = modid::OutputTransform::softplus;
  if (o.compare) c.compare_modular = true;
  if (o.dataset) c.dataset = *o.dataset;
  if (o.truth) c.truth = *o.truth;
  if (o.checkpoint) c.checkpoint = *o.checkpoint;
  if (o.parameters) c.parameters = *o.parameters;
  if (o.source) c.data_source = *o.source;
  if (o.mono_epochs) c.mono_epochs = *o.mono_epochs;
  if (o.mono_lr) c.mono_learning_rate = *o.mono_lr;
  if (o.grid) c.grid_points = *o.grid;
  if (o.trials) c.trials = *o.trials;
  if (o.ce_points) c.ce_points = *o.ce_points;
  if (o.rre_points) c.rre_points = *o.rre_points;
  if (o.ce_theta) c.ce_theta = *o.ce_theta;
  if (o.ce_theta_hat) c.ce_theta_hat = *o.ce_theta_hat;
  if (!o.probes1.empty()) c.probes1 = o.probes1;
  if (!o.probes2.empty()) c.probes2 = o.probes2;
  if (!o.factors.empty()) c.sweep_factors = o.factors;
}

// Base config, then --config, then explicit flags.
ExperimentConfig resolve(ExperimentConfig base, const Overrides& o) {
  if (!o.config.empty()) {
    if (!std::filesystem::exists(o.config)) throw modid::ConfigError("config " + o.config + " does not exist");
    base = modid::config_from_json(modid::read_json(o.config), base);
  }
  apply(base, o);
  return base;
}

ExperimentConfig kind_config(ExperimentKind k, std::string name) {
  ExperimentConfig c;
  c.kind = k;
  c.name = std::move(name);
  return c;
}

int seed_sweep(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds) {
  const std::filesystem::path root = base.out;
  int worst = modid::exit_ok;
  for (auto s : seeds) {
    ExperimentConfig c = base;
    c.seed = s;
    c.out = root / ("seed_" + std::to_string(s));
    std::cerr << "== seed " << s << '\n';
    const int code = modid::run(c, std::cerr);
    if (code == modid::exit_config) return code;
    worst = std::max(worst, code);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular identification of composed systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--seed", o.seed, "Run seed")->type_name("U64");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--config", o.config, "JSON config overlay");
  app.add_option("--log-stride", o.log_stride, "Record metrics every n epochs (0: off)");

  auto* gen = app.add_subcommand("gen-data", "Sample a training dataset");
  add_training_flags(gen, o);

  std::string model = "modular";
  auto* train = app.add_subcommand("train", "Train a modular or monolithic model");
  add_training_flags(train, o);
  train->add_option("--model", model, "modular or monolithic")->check(CLI::IsMember({"modular", "monolithic"}));
  train->add_flag("--compare", o.compare, "Monolithic run also trains and scores the modular model");

  auto* grid = app.add_subcommand("eval-grid", "Pointwise relative error surface of a checkpoint");
  grid->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
  grid->add_option("--truth", o.truth, "Ground truth JSON");
  grid->add_option("--grid", o.grid, "Grid points per axis");

  auto* rec = app.add_subcommand("recover", "Closed-form recovery from probe measurements");
  rec->add_option("--measurements", o.parameters, "JSON with probes1, probes2 and the eight g values");
  rec->add_option("--truth", o.truth, "Two-module ground truth to measure instead");
  rec->add_option("--probes1", o.probes1, "Module 1 probe inputs")->expected(2);
  rec->add_option("--probes2", o.probes2, "Module 2 probe inputs")->expected(2);
  rec->add_option("--trials", o.trials, "Random instances for the injectivity check");

  auto* ce = app.add_subcommand("counterexample", "Equal outputs from a different gain and module");
  ce->add_option("--theta", o.ce_theta, "True gain");
  ce->add_option("--theta-hat", o.ce_theta_hat, "Alternative gain");
  ce->add_option("--points", o.ce_points, "Evaluation points on [0, 1]");
  ce->add_option("--truth", o.truth, "Use module 1 of this ground truth as f");

  auto* rre = app.add_subcommand("simulate-rre", "Steady states of the ribosome-sharing network");
  rre->add_option("--params", o.parameters, "RRE parameters JSON");
  rre->add_option("--modules", o.modules, "Modules for the default parameters");
  rre->add_option("--points", o.rre_points, "Inputs per module");
  rre->add_option("--factors", o.factors, "Timescale separation sweep factors");

  auto* gc = app.add_subcommand("grad-check", "Reverse-mode gradients against finite differences");
  gc->add_option("--instances", o.trials, "Random network/batch instances");

  std::string preset_name;
  auto* pre = app.add_subcommand("preset", "Run a named experiment");
  pre->add_option("name", preset_name, "fig3, fig4, fig5 or rre_check")->required();
  add_training_flags(pre, o);

  std::vector<std::uint64_t> seeds;
  auto* sweep = app.add_subcommand("seed-sweep", "Run a preset once per seed under out/seed_<s>");
  sweep->add_option("name", preset_name, "Preset name")->required();
  sweep->add_option("--seeds", seeds, "Seeds to run")->required();
  add_training_flags(sweep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : modid::exit_config;
  }

  try {
    ExperimentConfig c;
    if (*gen) {
      c = resolve(kind_config(ExperimentKind::gen_data, "gen-data"), o);
    } else if (*train) {
      ExperimentConfig base;
      if (model == "monolithic") {
        base = kind_config(ExperimentKind::two_module_monolithic, "train");
      } else {
        const std::size_t n = o.modules.value_or(2);
        base = kind_config(n == 1 ? ExperimentKind::single_module : ExperimentKind::two_module_modular, "train");
        base.modules = n;
        if (n == 1) {
          base.epochs = 1000;
          base.learning_rate = 0.1;
        }
      }
      c = resolve(base, o);
    } else if (*grid) {
      c = resolve(kind_config(ExperimentKind::grid_eval, "eval-grid"), o);
    } else if (*rec) {
      c = resolve(kind_config(ExperimentKind::recover, "recover"), o);
    } else if (*ce) {
      c = resolve(kind_config(ExperimentKind::counterexample, "counterexample"), o);
    } else if (*rre) {
      auto base = kind_config(ExperimentKind::rre, "simulate-rre");
      base.modules = 1;
      c = resolve(base, o);
    } else if (*gc) {
      auto base = kind_config(ExperimentKind::grad_check, "grad-check");
      base.trials = 100;
      c = resolve(base, o);
    } else if (*pre) {
      c = resolve(modid::preset(preset_name), o);
    } else if (*sweep) {
      return seed_sweep(resolve(modid::preset(preset_name), o), seeds);
    }
    return modid::run(c, std::cerr);
  } catch (const modid::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return modid::exit_config;
  }
}
