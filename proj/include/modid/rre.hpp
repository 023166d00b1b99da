// SPDX-License-Identifier: Apache-2.0
//
// Mass-action model of gene expression modules competing with the host for a
// shared ribosome pool, its steady states and its quasi-steady-state reduction.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modid/composition.hpp"

namespace modid {

struct GeneModule {
  HillFunction regulator;  // transcription rate per unit DNA, f_bar(u)
  double dna = 200.0;
  double bind = 20.0;      // a_bar
  double unbind = 2000.0;  // d_bar
  double k0 = 0.005;
  double gamma = 0.5;
  double delta = 1.0;
};

struct HostParameters {
  double a0 = 1.0;  // constitutive transcription rate A0'
  double dna = 100.0;
  double bind = 20.0;
  double unbind = 2000.0;
  double k0 = 0.005;
  double gamma = 0.5;
  double delta = 1.0;
};

struct RreParameters {
  std::vector<GeneModule> modules;
  HostParameters host;
  double ribosomes = 100.0;  // R_T

  std::size_t n_modules() const noexcept { return modules.size(); }
  /// Throws InvalidParameter on negative rates or non-positive R_T.
  void validate() const;
  /// Slowest binding rate over fastest slow rate.
  double separation_factor() const;
  /// Copy with every binding and unbinding constant multiplied by factor.
  RreParameters scaled(double factor) const;
};

/// Defaults for one module (the single-module Hill function, theta = 1) or two
/// modules (the activating/repressing pair, theta = (0.703, 0.204)). Both give
/// f(u) within a few ppm of f_bar(u) and a separation factor of at least 1e3.
RreParameters default_rre_parameters(std::size_t n_modules);

/// Flat state: for each module (Y_i, mRNA_i, Ribo:mRNA_i), then the host triple.
class RreState {
 public:
  explicit RreState(std::size_t n_modules) : x_(3 * (n_modules + 1), 0.0) {}
  explicit RreState(std::vector<double> x);

  std::size_t n_modules() const noexcept { return x_.size() / 3 - 1; }
  double& protein(std::size_t i) { return x_[3 * i]; }
  double& mrna(std::size_t i) { return x_[3 * i + 1]; }
  double& complex(std::size_t i) { return x_[3 * i + 2]; }
  double protein(std::size_t i) const { return x_[3 * i]; }
  double mrna(std::size_t i) const { return x_[3 * i + 1]; }
  double complex(std::size_t i) const { return x_[3 * i + 2]; }
  /// Host species live at index n_modules().
  std::size_t host() const noexcept { return n_modules(); }

  double bound() const;
  double free_ribosomes(double total) const { return total - bound(); }

  std::span<double> values() noexcept { return x_; }
  std::span<const double> values() const noexcept { return x_; }

 private:
  std::vector<double> x_;
};

/// Mass-action time derivatives with free ribosomes eliminated by conservation.
/// Throws StateError for negative concentrations or bound > R_T.
std::vector<double> rre_rhs(const RreState& state, const RreParameters& p,
                            std::span<const double> u);

enum class SteadyStateMethod { integrate, newton };

struct SteadyStateOptions {
  double tolerance = 1e-10;  // on max|dx/dt| / max(max|x|, floor)
  double floor = 1e-12;
  std::size_t max_steps = 2'000'000;
  // implicit-Euler budget before the Newton polish takes over
  std::size_t newton_warmup_steps = 20'000;
  std::size_t max_newton_iterations = 100;
};

/// Equilibrium reached from the all-zero state. Throws ConvergenceError with
/// the final residual when the budget is exhausted.
RreState steady_state(const RreParameters& p, std::span<const double> u,
                      SteadyStateMethod method = SteadyStateMethod::integrate,
                      const SteadyStateOptions& opts = {});

/// Scaled residual used as the steady-state criterion.
double steady_state_residual(const RreState& s, const RreParameters& p,
                             std::span<const double> u, double floor = 1e-12);

/// Reduced composition model: Y_i = theta_i f_i / (1 + sum_j f_j) with
/// f_i(u) = f_scale_i * f_bar_i(u).
struct ReducedModel {
  std::vector<double> theta;
  std::vector<double> f_scale;
  std::vector<double> K;  // per module (d_bar + k0) / a_bar
  double K_host = 0.0;
  double host_load = 0.0;  // A0' DNA_cell / (delta' K')

  std::vector<double> module_outputs(const RreParameters& p, std::span<const double> u) const;
  std::vector<double> protein(const RreParameters& p, std::span<const double> u) const;
};

/// Throws InvalidParameter when a binding constant is zero.
ReducedModel qssa_reduce(const RreParameters& p);

/// Ground truth whose composition map matches the reduced model exactly: the
/// regulators are rescaled by f_scale.
GroundTruth reduced_ground_truth(const RreParameters& p);

/// Jacobian of the reduced (Y_i, mRNA_i, mRNA_cell) system at a state, by
/// central differences.
std::vector<std::vector<double>> reduced_jacobian(const RreParameters& p,
                                                  std::span<const double> u,
                                                  std::span<const double> reduced_state);
/// Largest real part of the eigenvalues of that Jacobian at the reduced equilibrium.
double reduced_spectral_abscissa(const RreParameters& p, std::span<const double> u);

struct SweepRow {
  double factor = 0.0;
  double separation = 0.0;
  double discrepancy = 0.0;  // max relative |Y_full - Y_reduced| over the inputs
};

/// Full-versus-reduced discrepancy after scaling all binding constants by each
/// factor. Steady states come from the Newton method; parallel over (input, factor).
std::vector<SweepRow> separation_sweep(const RreParameters& p, std::span<const double> factors,
                                       const Matrix& inputs);

/// Steady-state proteins of the full model for every row of inputs (a dataset
/// generated from the physics instead of the composition map).
Dataset rre_dataset(const RreParameters& p, const Matrix& inputs,
                    Provenance provenance = Provenance::custom,
                    SteadyStateMethod method = SteadyStateMethod::newton);

}  // namespace modid
