// SPDX-License-Identifier: Apache-2.0

#include "modid/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <variant>

#include "modid/checkpoint.hpp"
#include "modid/closed_form.hpp"
#include "modid/error.hpp"
#include "modid/gradcheck.hpp"
#include "modid/rre.hpp"
#include "modid/rre_io.hpp"
#include "modid/seed.hpp"

namespace modid {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::single_module, "single_module"},
    {ExperimentKind::two_module_modular, "two_module_modular"},
    {ExperimentKind::two_module_monolithic, "two_module_monolithic"},
    {ExperimentKind::grid_eval, "grid_eval"},
    {ExperimentKind::recover, "recover"},
    {ExperimentKind::counterexample, "counterexample"},
    {ExperimentKind::rre, "rre"},
    {ExperimentKind::gen_data, "gen_data"},
    {ExperimentKind::grad_check, "grad_check"},
};

// Failure that maps to the numerical exit code, with extra diagnostic fields.
struct NumericalFailure : Error {
  NumericalFailure(const std::string& what, json detail) : Error(what), detail(std::move(detail)) {}
  json detail;
};

std::string transform_name(OutputTransform t) {
  return t == OutputTransform::softplus ? "softplus" : "identity";
}

std::vector<std::string> indexed(const std::string& stem, std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) names.push_back(stem + std::to_string(i));
  return names;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t k = 0; k < count; ++k)
    v[k] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  if (count > 1) v.back() = hi;
  return v;
}

GroundTruth default_truth(std::size_t modules) {
  return modules == 1 ? single_module_truth() : two_module_truth();
}

GroundTruth resolve_truth(const ExperimentConfig& c) {
  return c.truth.empty() ? default_truth(c.modules) : load_truth(c.truth);
}

bool inside(const UniModularInputSet& set, const Matrix& inputs) {
  if (inputs.cols() != set.n_modules()) return false;
  for (std::size_t k = 0; k < inputs.rows(); ++k)
    if (!set.contains(inputs.row(k))) return false;
  return true;
}

Matrix training_inputs(const ExperimentConfig& c, const GroundTruth& truth) {
  if (truth.n_modules() == 1)
    return sample_uniform(truth.input_set.intervals()[0], c.points_per_module, c.seed);
  return sample_unimodular(truth.input_set, c.points_per_module, c.seed);
}

// Dataset for the run: read from disk, or sampled from the map or the RRE physics.
// For RRE data the truth is replaced by the matching reduced model.
Dataset resolve_dataset(const ExperimentConfig& c, GroundTruth& truth) {
  if (!c.dataset.empty()) {
    Dataset d = read_dataset_csv(c.dataset);
    if (d.inputs.cols() != truth.n_modules() || d.outputs.cols() != truth.n_modules())
      throw ConfigError("dataset width does not match the ground truth module count");
    d.provenance = inside(truth.input_set, d.inputs) ? Provenance::unimodular : Provenance::custom;
    return d;
  }
  const Matrix u = training_inputs(c, truth);
  if (c.data_source == "rre") {
    const RreParameters p = c.parameters.empty() ? default_rre_parameters(truth.n_modules())
                                                 : rre_parameters_from_json(read_json(c.parameters));
    if (p.n_modules() != truth.n_modules()) throw ConfigError("rre parameters disagree on module count");
    const auto set = truth.input_set;
    truth = reduced_ground_truth(p);
    truth.input_set = set;
    return rre_dataset(p, u, Provenance::unimodular);
  }
  return generate_dataset(truth.modules, truth.map(), u, Provenance::unimodular);
}

void write_history(const fs::path& path, const std::vector<MetricsRecord>& h, std::size_t n) {
  write_metrics_csv(path, h, n);
}

json record_json(const MetricsRecord& r) {
  return json{{"epoch", r.epoch}, {"loss", r.loss}, {"E_G", r.E_G}, {"E_f", r.E_f}, {"E_theta", r.E_theta}};
}

double max_of(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

void check_finite_loss(const std::vector<MetricsRecord>& h, const char* model) {
  if (!h.empty() && !std::isfinite(h.back().loss))
    throw NumericalFailure(std::string(model) + " training diverged", json{{"final", record_json(h.back())}});
}

TrainOptions progress_options(const ExperimentConfig& c, std::size_t epochs, double lr,
                              std::ostream& log, const std::string& tag) {
  TrainOptions o;
  o.epochs = epochs;
  o.learning_rate = lr;
  o.log_stride = c.log_stride;
  const std::size_t every = std::max<std::size_t>(1, epochs / 10);
  o.on_record = [&log, tag, every, epochs](const MetricsRecord& r) {
    if (r.epoch % every != 0 && r.epoch != epochs) return;
    log << tag << " epoch " << r.epoch << " loss " << format_real(r.loss);
    if (!r.E_G.empty()) log << " max E_G " << max_of(r.E_G) << " max E_f " << max_of(r.E_f);
    log << '\n';
  };
  return o;
}

// u_i, f_i, fhat_i per module over a lattice of each module's interval.
void write_f_comparison(const fs::path& path, const ModularModel& model, const GroundTruth& truth,
                        std::size_t points) {
  const std::size_t n = truth.n_modules();
  Matrix rows(points, 3 * n);
  std::vector<std::string> header;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = std::to_string(i + 1);
    header.insert(header.end(), {"u_" + k, "f_" + k, "f_hat_" + k});
    const auto iv = truth.input_set.intervals()[i];
    const auto u = linspace(iv.lo, iv.hi, points);
    for (std::size_t p = 0; p < points; ++p) {
      const double x[1] = {u[p]};
      rows(p, 3 * i) = u[p];
      rows(p, 3 * i + 1) = eval_hill(truth.modules[i], u[p]);
      rows(p, 3 * i + 2) = forward(model.surrogates[i], x)[0];
    }
  }
  write_csv(path, header, rows);
}

void write_surface(const fs::path& path, const ErrorSurface& s) {
  const std::size_t n = s.inputs.cols(), m = s.errors.cols();
  Matrix rows(s.inputs.rows(), n + m);
  for (std::size_t k = 0; k < rows.rows(); ++k) {
    for (std::size_t i = 0; i < n; ++i) rows(k, i) = s.inputs(k, i);
    for (std::size_t i = 0; i < m; ++i) rows(k, n + i) = s.errors(k, i);
  }
  auto header = indexed("u_", n);
  for (const auto& h : indexed("E_G", m)) header.push_back(h);
  write_csv(path, header, rows);
}

bool low_region(std::span<const double> u) {
  return *std::min_element(u.begin(), u.end()) <= 0.5;
}

json surface_summary(const ErrorSurface& s) {
  return json{{"median_full", median_error(s)},
              {"median_min_u_le_half", median_error(s, low_region)},
              {"undefined_points", s.undefined_points}};
}

ModularArchitecture arch_for(const ExperimentConfig& c) { return c.arch; }

ModularTrainResult train_modular_run(const ExperimentConfig& c, const Dataset& data,
                                     const GroundTruth& truth, std::ostream& log, json& results) {
  ModularModel model = make_modular_model(truth.n_modules(), arch_for(c), c.seed);
  auto r = train_modular(std::move(model), data, truth,
                         progress_options(c, c.epochs, c.learning_rate, log, "modular"));
  for (const auto& w : r.warnings) log << "warning: " << w << '\n';
  check_finite_loss(r.history, "modular");

  write_history(c.out / "metrics.csv", r.history, truth.n_modules());
  write_f_comparison(c.out / "f_comparison.csv", r.model, truth, 101);
  save_checkpoint(c.out / "checkpoint.json", Checkpoint{r.model, c.seed, c.epochs});
  write_json(c.out / "theta_hat.json",
             json{{"theta_hat", r.model.theta_hat}, {"theta", truth.theta},
                  {"E_theta", r.history.empty() ? json() : json(r.history.back().E_theta)}});

  const auto final = compute_metrics(r.model, data, truth, c.epochs);
  results["final"] = record_json(final);
  results["theta_hat"] = r.model.theta_hat;
  const auto sign = surrogate_sign(r.model, truth);
  results["min_surrogate_output"] = sign.min_output;
  if (sign.negative) log << "warning: a surrogate takes negative values on the input box\n";

  const double thresholds[] = {0.1, 0.05, 0.02};
  json crossings = json::array();
  const auto hits = first_crossings(r.history, thresholds);
  for (std::size_t k = 0; k < hits.size(); ++k)
    crossings.push_back(hits[k] ? json{{"threshold", thresholds[k]}, {"epoch", hits[k]->epoch},
                                       {"max_E_f", max_of(hits[k]->E_f)}}
                                : json{{"threshold", thresholds[k]}, {"epoch", nullptr}});
  results["E_G_crossings"] = crossings;
  return r;
}

json run_modular(const ExperimentConfig& c, std::ostream& log) {
  GroundTruth truth = resolve_truth(c);
  const Dataset data = resolve_dataset(c, truth);
  save_truth(c.out / "truth.json", truth);
  write_dataset_csv(c.out / "dataset.csv", data);
  json results;
  train_modular_run(c, data, truth, log, results);
  return results;
}

json run_monolithic(const ExperimentConfig& c, std::ostream& log) {
  GroundTruth truth = resolve_truth(c);
  const Dataset data = resolve_dataset(c, truth);
  save_truth(c.out / "truth.json", truth);
  write_dataset_csv(c.out / "dataset.csv", data);
  json results;

  const std::size_t n = truth.n_modules();
  auto mono = make_monolithic_model(n, n, c.mono_width, c.mono_layers, derive_seed(c.seed, 7));
  auto mr = train_monolithic(std::move(mono), data,
                             progress_options(c, c.mono_epochs, c.mono_learning_rate, log, "monolithic"));
  check_finite_loss(mr.history, "monolithic");
  write_history(c.out / "metrics_monolithic.csv", mr.history, 0);
  save_checkpoint(c.out / "checkpoint_monolithic.json", Checkpoint{mr.model, c.seed, c.mono_epochs});
  results["monolithic_final_loss"] = mr.history.empty() ? json() : json(mr.history.back().loss);

  const auto mono_surface = evaluate_grid(mr.model, truth, c.grid_points);
  write_surface(c.out / "surface_monolithic.csv", mono_surface);
  results["monolithic_surface"] = surface_summary(mono_surface);

  if (c.compare_modular) {
    ModularModel model;
    if (!c.checkpoint.empty()) {
      auto ck = load_checkpoint(c.checkpoint);
      if (!std::holds_alternative<ModularModel>(ck.model))
        throw ConfigError("comparison checkpoint must hold a modular model");
      model = std::get<ModularModel>(ck.model);
      results["modular_from"] = c.checkpoint.string();
    } else {
      json modular;
      model = train_modular_run(c, data, truth, log, modular).model;
      results["modular"] = modular;
    }
    const auto mod_surface = evaluate_grid(model, truth, c.grid_points);
    write_surface(c.out / "surface_modular.csv", mod_surface);
    results["modular_surface"] = surface_summary(mod_surface);
    const double a = results["monolithic_surface"]["median_min_u_le_half"].get<double>();
    const double b = results["modular_surface"]["median_min_u_le_half"].get<double>();
    results["low_region_ratio"] = a / b;
  }
  return results;
}

json run_grid_eval(const ExperimentConfig& c, std::ostream&) {
  if (c.checkpoint.empty()) throw ConfigError("grid evaluation needs --checkpoint");
  const auto ck = load_checkpoint(c.checkpoint);
  GroundTruth truth;
  if (!c.truth.empty()) {
    truth = load_truth(c.truth);
  } else {
    const std::size_t n = std::holds_alternative<ModularModel>(ck.model)
                              ? std::get<ModularModel>(ck.model).n_modules()
                              : std::get<MonolithicModel>(ck.model).net.input_width();
    truth = default_truth(n);
  }
  const ErrorSurface s = std::visit([&](const auto& m) { return evaluate_grid(m, truth, c.grid_points); },
                                    ck.model);
  write_surface(c.out / "surface.csv", s);
  return json{{"surface", surface_summary(s)}};
}

std::array<double, 2> pair_of(const std::vector<double>& v) { return {v.at(0), v.at(1)}; }

json recovered_json(const RecoveredSystem& x) {
  return json{{"theta", x.theta}, {"f1_at", x.f1_at}, {"f2_at", x.f2_at}};
}

json run_recover(const ExperimentConfig& c, std::ostream& log) {
  ProbeMeasurements m;
  json results;
  std::optional<RecoveredSystem> expected;
  if (!c.parameters.empty()) {
    const json j = read_json(c.parameters);
    try {
      m.probes1 = j.at("probes1").get<std::array<double, 2>>();
      m.probes2 = j.at("probes2").get<std::array<double, 2>>();
      m.g = j.at("g").get<std::array<double, 8>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed measurements: ") + e.what());
    }
  } else {
    const GroundTruth truth = c.truth.empty() ? two_module_truth() : load_truth(c.truth);
    m = measure_probes(truth, pair_of(c.probes1), pair_of(c.probes2));
    expected = true_system(truth, m.probes1, m.probes2);
  }
  write_json(c.out / "measurements.json",
             json{{"probes1", m.probes1}, {"probes2", m.probes2}, {"g", m.g}});

  RecoveredSystem x;
  try {
    x = recover(m);
  } catch (const DegenerateProbe& e) {
    throw NumericalFailure(e.what(), json{{"module", e.module()}});
  }
  const auto g = forward_F(x);
  double residual = 0.0;
  for (std::size_t k = 0; k < 8; ++k)
    residual = std::max(residual, std::abs(g[k] - m.g[k]) / std::max(std::abs(m.g[k]), 1e-300));
  json out = recovered_json(x);
  out["probes1"] = m.probes1;
  out["probes2"] = m.probes2;
  out["roundtrip_residual"] = residual;
  write_json(c.out / "recovered.json", out);
  results["recovered"] = out;
  if (expected) results["expected"] = recovered_json(*expected);

  const auto report = injectivity_probe(c.trials, c.seed);
  results["injectivity"] = json{{"trials", report.trials},
                                {"violations", report.violations},
                                {"max_roundtrip_error", report.max_roundtrip_error},
                                {"min_image_distance", report.min_image_distance}};
  log << "recovered theta " << format_real(x.theta[0]) << ' ' << format_real(x.theta[1])
      << ", injectivity violations " << report.violations << '/' << report.trials << '\n';
  return results;
}

json run_counterexample(const ExperimentConfig& c, std::ostream& log) {
  ScalarFunction f = [](double u) { return u / (1.0 + u); };
  if (!c.truth.empty()) {
    const auto truth = load_truth(c.truth);
    f = [h = truth.modules.at(0)](double u) { return eval_hill(h, u); };
  }
  ScalarFunction fhat;
  try {
    fhat = counterexample_pair(c.ce_theta, c.ce_theta_hat, f);
  } catch (const InvalidPair& e) {
    throw NumericalFailure(e.what(), json{{"theta", c.ce_theta}, {"theta_hat", c.ce_theta_hat}});
  }
  const auto u = linspace(0.0, 1.0, c.ce_points);
  Matrix rows(u.size(), 5);
  double max_g = 0.0, max_f = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double fv = f(u[k]), fh = fhat(u[k]);
    const double g = eval_single_module(c.ce_theta, fv), gh = eval_single_module(c.ce_theta_hat, fh);
    rows(k, 0) = u[k];
    rows(k, 1) = fv;
    rows(k, 2) = fh;
    rows(k, 3) = g;
    rows(k, 4) = gh;
    max_g = std::max(max_g, std::abs(g - gh));
    max_f = std::max(max_f, std::abs(fv - fh));
  }
  write_csv(c.out / "counterexample.csv", {"u", "f", "f_hat", "G", "G_hat"}, rows);
  log << "max |G_hat - G| " << format_real(max_g) << ", max |f_hat - f| " << format_real(max_f) << '\n';
  return json{{"max_output_gap", max_g}, {"max_module_gap", max_f}};
}

Matrix rre_inputs(std::size_t n, std::size_t points) {
  const auto u = linspace(0.0, 1.0, points);
  if (n == 1) {
    Matrix m(points, 1);
    for (std::size_t k = 0; k < points; ++k) m(k, 0) = u[k];
    return m;
  }
  Matrix m(n * points, n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < points; ++k) m(i * points + k, i) = u[k];
  return m;
}

json run_rre(const ExperimentConfig& c, std::ostream& log) {
  const RreParameters p = c.parameters.empty() ? default_rre_parameters(c.modules)
                                               : rre_parameters_from_json(read_json(c.parameters));
  const std::size_t n = p.n_modules();
  const ReducedModel red = qssa_reduce(p);
  const Matrix inputs = rre_inputs(n, c.rre_points);
  write_json(c.out / "rre_parameters.json", json(p));

  Matrix rows(inputs.rows(), 4 * n + 3);
  std::vector<std::string> header = indexed("u_", n);
  for (const auto& h : indexed("Y_", n)) header.push_back(h);
  header.push_back("Y_cell");
  for (const auto& h : indexed("mRNA_", n)) header.push_back(h);
  header.push_back("mRNA_cell");
  header.push_back("Ribo");
  for (const auto& h : indexed("Y_qssa_", n)) header.push_back(h);

  double max_disc = 0.0, max_abscissa = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < inputs.rows(); ++k) {
    const auto u = inputs.row(k);
    const RreState s = steady_state(p, u, SteadyStateMethod::integrate);
    const auto y = red.protein(p, u);
    std::size_t col = 0;
    for (std::size_t i = 0; i < n; ++i) rows(k, col++) = u[i];
    for (std::size_t i = 0; i < n; ++i) rows(k, col++) = s.protein(i);
    rows(k, col++) = s.protein(s.host());
    for (std::size_t i = 0; i < n; ++i) rows(k, col++) = s.mrna(i);
    rows(k, col++) = s.mrna(s.host());
    rows(k, col++) = s.free_ribosomes(p.ribosomes);
    for (std::size_t i = 0; i < n; ++i) {
      rows(k, col++) = y[i];
      max_disc = std::max(max_disc, std::abs(s.protein(i) - y[i]) / std::abs(y[i]));
    }
    max_abscissa = std::max(max_abscissa, reduced_spectral_abscissa(p, u));
  }
  write_csv(c.out / "steady_state.csv", header, rows);

  const Matrix sweep_inputs = rre_inputs(n, 5);
  const auto sweep = separation_sweep(p, c.sweep_factors, sweep_inputs);
  json table = json::array();
  bool strictly_decreasing = true;
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    table.push_back({{"factor", sweep[k].factor},
                     {"separation", sweep[k].separation},
                     {"discrepancy", sweep[k].discrepancy}});
    if (k > 0 && !(sweep[k].discrepancy < sweep[k - 1].discrepancy)) strictly_decreasing = false;
  }
  const json report{{"separation_factor", p.separation_factor()},
                    {"theta", red.theta},
                    {"f_scale", red.f_scale},
                    {"K", red.K},
                    {"K_host", red.K_host},
                    {"host_load", red.host_load},
                    {"max_closed_form_discrepancy", max_disc},
                    {"max_reduced_spectral_abscissa", max_abscissa},
                    {"sweep", table},
                    {"sweep_strictly_decreasing", strictly_decreasing}};
  write_json(c.out / "reduction_report.json", report);
  log << "separation factor " << p.separation_factor() << ", max full vs reduced discrepancy "
      << format_real(max_disc) << '\n';
  return report;
}

json run_gen_data(const ExperimentConfig& c, std::ostream& log) {
  GroundTruth truth = resolve_truth(c);
  ExperimentConfig fresh = c;
  fresh.dataset.clear();
  const Dataset d = resolve_dataset(fresh, truth);
  write_dataset_csv(c.out / "dataset.csv", d);
  save_truth(c.out / "truth.json", truth);
  log << "wrote " << d.size() << " samples\n";
  return json{{"samples", d.size()}, {"source", c.data_source}};
}

json run_grad_check(const ExperimentConfig& c, std::ostream& log) {
  const auto r = grad_check(c.trials, c.seed);
  const json out{{"instances", r.instances},
                 {"parameters_checked", r.parameters_checked},
                 {"resampled", r.resampled},
                 {"max_relative_error", r.max_relative_error},
                 {"tolerance", r.tolerance},
                 {"passed", r.passed()}};
  write_json(c.out / "grad_check.json", out);
  log << "gradient check: max relative error " << format_real(r.max_relative_error) << " over "
      << r.instances << " instances\n";
  if (!r.passed()) throw NumericalFailure("gradient check exceeded tolerance", out);
  return out;
}

bool is_training(ExperimentKind k) {
  return k == ExperimentKind::single_module || k == ExperimentKind::two_module_modular ||
         k == ExperimentKind::two_module_monolithic;
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind parse_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  if (name == "fig3") {
    c.kind = ExperimentKind::single_module;
    c.modules = 1;
    c.points_per_module = 100;
    c.epochs = 1000;
    c.learning_rate = 0.1;
    c.log_stride = 10;
    c.arch.theta_init = 1.0;
    c.arch.learn_theta = false;
    c.seed = 4;
  } else if (name == "fig4" || name == "fig5") {
    c.kind = ExperimentKind::two_module_modular;
    c.modules = 2;
    c.points_per_module = 100;
    c.epochs = 84000;
    c.learning_rate = 0.005;
    c.log_stride = 100;
    c.arch.theta_init = 3.0;
    c.seed = 2;
    if (name == "fig5") {
      c.kind = ExperimentKind::two_module_monolithic;
      c.compare_modular = true;
      c.mono_width = 50;
      c.mono_layers = 4;
      c.mono_epochs = 8000;
      c.mono_learning_rate = 0.001;
      c.grid_points = 100;
    }
  } else if (name == "rre_check") {
    c.kind = ExperimentKind::rre;
    c.modules = 1;
    c.rre_points = 20;
    c.sweep_factors = {10.0, 100.0, 1000.0, 1e6};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5", "rre_check"}; }

json config_to_json(const ExperimentConfig& c) {
  return json{
      {"kind", to_string(c.kind)},
      {"name", c.name},
      {"dataset", c.dataset.string()},
      {"truth", c.truth.string()},
      {"checkpoint", c.checkpoint.string()},
      {"parameters", c.parameters.string()},
      {"out", c.out.string()},
      {"seed", c.seed},
      {"modules", c.modules},
      {"points_per_module", c.points_per_module},
      {"data_source", c.data_source},
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"log_stride", c.log_stride},
      {"hidden_width", c.arch.hidden_width},
      {"hidden_layers", c.arch.hidden_layers},
      {"theta_init", c.arch.theta_init},
      {"learn_theta", c.arch.learn_theta},
      {"output_transform", transform_name(c.arch.transform)},
      {"mono_width", c.mono_width},
      {"mono_layers", c.mono_layers},
      {"mono_epochs", c.mono_epochs},
      {"mono_learning_rate", c.mono_learning_rate},
      {"compare_modular", c.compare_modular},
      {"grid_points", c.grid_points},
      {"ce_theta", c.ce_theta},
      {"ce_theta_hat", c.ce_theta_hat},
      {"ce_points", c.ce_points},
      {"probes1", c.probes1},
      {"probes2", c.probes2},
      {"trials", c.trials},
      {"sweep_factors", c.sweep_factors},
      {"rre_points", c.rre_points},
  };
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") c = preset(v.get<std::string>());
    }
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") continue;
      else if (key == "kind") c.kind = parse_kind(v.get<std::string>());
      else if (key == "name") c.name = v.get<std::string>();
      else if (key == "dataset") c.dataset = v.get<std::string>();
      else if (key == "truth") c.truth = v.get<std::string>();
      else if (key == "checkpoint") c.checkpoint = v.get<std::string>();
      else if (key == "parameters") c.parameters = v.get<std::string>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "modules") c.modules = v.get<std::size_t>();
      else if (key == "points_per_module") c.points_per_module = v.get<std::size_t>();
      else if (key == "data_source") c.data_source = v.get<std::string>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "log_stride") c.log_stride = v.get<std::size_t>();
      else if (key == "hidden_width") c.arch.hidden_width = v.get<std::size_t>();
      else if (key == "hidden_layers") c.arch.hidden_layers = v.get<std::size_t>();
      else if (key == "theta_init") c.arch.theta_init = v.get<double>();
      else if (key == "learn_theta") c.arch.learn_theta = v.get<bool>();
      else if (key == "output_transform") {
        const auto t = v.get<std::string>();
        if (t != "identity" && t != "softplus") throw ConfigError("unknown output transform '" + t + "'");
        c.arch.transform = t == "softplus" ? OutputTransform::softplus : OutputTransform::identity;
      }
      else if (key == "mono_width") c.mono_width = v.get<std::size_t>();
      else if (key == "mono_layers") c.mono_layers = v.get<std::size_t>();
      else if (key == "mono_epochs") c.mono_epochs = v.get<std::size_t>();
      else if (key == "mono_learning_rate") c.mono_learning_rate = v.get<double>();
      else if (key == "compare_modular") c.compare_modular = v.get<bool>();
      else if (key == "grid_points") c.grid_points = v.get<std::size_t>();
      else if (key == "ce_theta") c.ce_theta = v.get<double>();
      else if (key == "ce_theta_hat") c.ce_theta_hat = v.get<double>();
      else if (key == "ce_points") c.ce_points = v.get<std::size_t>();
      else if (key == "probes1") c.probes1 = v.get<std::vector<double>>();
      else if (key == "probes2") c.probes2 = v.get<std::vector<double>>();
      else if (key == "trials") c.trials = v.get<std::size_t>();
      else if (key == "sweep_factors") c.sweep_factors = v.get<std::vector<double>>();
      else if (key == "rre_points") c.rre_points = v.get<std::size_t>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  for (const fs::path* p : {&c.dataset, &c.truth, &c.checkpoint, &c.parameters})
    if (!p->empty() && !fs::exists(*p)) throw ConfigError("input file " + p->string() + " does not exist");
  if (c.out.empty()) throw ConfigError("output directory must be set");
  if (c.modules != 1 && c.modules != 2) throw ConfigError("modules must be 1 or 2");
  if (c.data_source != "map" && c.data_source != "rre")
    throw ConfigError("data_source must be 'map' or 'rre'");
  if (c.points_per_module == 0) throw ConfigError("points_per_module must be positive");
  if (is_training(c.kind)) {
    const bool modular = c.kind != ExperimentKind::two_module_monolithic || c.compare_modular;
    if (modular && c.epochs == 0) throw ConfigError("epochs must be positive");
    if (modular && !(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (c.kind == ExperimentKind::two_module_monolithic && !(c.mono_learning_rate > 0.0))
      throw ConfigError("mono_learning_rate must be positive");
    if (c.arch.hidden_width == 0 || c.arch.hidden_layers == 0 || c.mono_width == 0 || c.mono_layers == 0)
      throw ConfigError("hidden widths and depths must be positive");
    if (c.kind == ExperimentKind::single_module && c.modules != 1)
      throw ConfigError("single_module runs need modules = 1");
    if (c.kind != ExperimentKind::single_module && c.modules != 2)
      throw ConfigError("two-module runs need modules = 2");
  }
  if (c.grid_points < 2) throw ConfigError("grid_points must be at least 2");
  const auto probe_ok = [](const std::vector<double>& p) {
    return p.size() == 2 && p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0;
  };
  if (!probe_ok(c.probes1) || !probe_ok(c.probes2)) throw ConfigError("probes are two values in [0, 1]");
  if (c.trials == 0) throw ConfigError("trials must be positive");
  if (c.ce_points < 2) throw ConfigError("ce_points must be at least 2");
  for (double f : c.sweep_factors)
    if (!(f > 0.0)) throw ConfigError("sweep factors must be positive");
  if (c.rre_points == 0) throw ConfigError("rre_points must be positive");
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRecord>& h, std::size_t n) {
  std::vector<std::string> header{"epoch", "loss"};
  for (const auto& stem : {"E_G", "E_f", "E_theta"})
    for (const auto& name : indexed(stem, n)) header.push_back(name);
  Matrix rows(h.size(), header.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    rows(k, 0) = static_cast<double>(h[k].epoch);
    rows(k, 1) = h[k].loss;
    std::size_t col = 2;
    for (const auto* v : {&h[k].E_G, &h[k].E_f, &h[k].E_theta})
      for (std::size_t i = 0; i < n; ++i)
        rows(k, col++) = i < v->size() ? (*v)[i] : std::numeric_limits<double>::quiet_NaN();
  }
  write_csv(path, header, rows);
}

int run(const ExperimentConfig& c, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  json manifest{{"version", kVersion},
                {"json_library", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"config", config_to_json(c)}};
  const auto finish = [&](int code, json results) {
    manifest["exit_code"] = code;
    manifest["results"] = std::move(results);
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(c.out / "manifest.json", manifest);
    return code;
  };

  try {
    validate(c);
    fs::create_directories(c.out);
  } catch (const std::exception& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    json results;
    switch (c.kind) {
      case ExperimentKind::single_module:
      case ExperimentKind::two_module_modular: results = run_modular(c, log); break;
      case ExperimentKind::two_module_monolithic: results = run_monolithic(c, log); break;
      case ExperimentKind::grid_eval: results = run_grid_eval(c, log); break;
      case ExperimentKind::recover: results = run_recover(c, log); break;
      case ExperimentKind::counterexample: results = run_counterexample(c, log); break;
      case ExperimentKind::rre: results = run_rre(c, log); break;
      case ExperimentKind::gen_data: results = run_gen_data(c, log); break;
      case ExperimentKind::grad_check: results = run_grad_check(c, log); break;
    }
    return finish(exit_ok, std::move(results));
  } catch (const NumericalFailure& e) {
    log << "numerical failure: " << e.what() << '\n';
    write_json(c.out / "diagnostic.json", json{{"error", e.what()}, {"detail", e.detail}});
    return finish(exit_numerical, json{{"error", e.what()}});
  } catch (const ConvergenceError& e) {
    log << "numerical failure: " << e.what() << '\n';
    write_json(c.out / "diagnostic.json", json{{"error", e.what()}, {"residual", e.residual()}});
    return finish(exit_numerical, json{{"error", e.what()}});
  } catch (const SingularityError& e) {
    log << "numerical failure: " << e.what() << '\n';
    write_json(c.out / "diagnostic.json", json{{"error", e.what()}});
    return finish(exit_numerical, json{{"error", e.what()}});
  } catch (const Error& e) {
    log << "config error: " << e.what() << '\n';
    return finish(exit_config, json{{"error", e.what()}});
  } catch (const fs::filesystem_error& e) {
    log << "config error: " << e.what() << '\n';
    return finish(exit_config, json{{"error", e.what()}});
  }
}

}  // namespace modid
