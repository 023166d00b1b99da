// SPDX-License-Identifier: Apache-2.0

#include "modid/rre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "modid/error.hpp"

namespace modid {

namespace {

constexpr double kNewtonWarmupTolerance = 1e-3;
constexpr double kRoundoffMultiple = 64.0;

// Rate constants of one translating species, module or host alike.
struct Species {
  double production;  // transcription flux
  double bind, unbind, k0, gamma, delta;
};

std::vector<Species> species(const RreParameters& p, std::span<const double> u) {
  if (u.size() != p.n_modules())
    throw ShapeError("expected " + std::to_string(p.n_modules()) + " inputs, got " +
                     std::to_string(u.size()));
  std::vector<Species> s;
  s.reserve(p.n_modules() + 1);
  for (std::size_t i = 0; i < p.n_modules(); ++i) {
    const auto& m = p.modules[i];
    s.push_back({eval_hill(m.regulator, u[i]) * m.dna, m.bind, m.unbind, m.k0, m.gamma, m.delta});
  }
  const auto& h = p.host;
  s.push_back({h.a0 * h.dna, h.bind, h.unbind, h.k0, h.gamma, h.delta});
  return s;
}

void rhs(const std::vector<Species>& sp, double total, const double* x, double* dx) {
  double bound = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) bound += x[3 * i + 2];
  const double ribo = total - bound;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto& s = sp[i];
    const double y = x[3 * i], m = x[3 * i + 1], c = x[3 * i + 2];
    const double binding = s.bind * m * ribo;
    const double release = (s.unbind + s.k0) * c;
    dx[3 * i] = s.k0 * c - s.gamma * y;
    dx[3 * i + 1] = s.production - binding + release - s.delta * m;
    dx[3 * i + 2] = binding - release;
  }
}

Eigen::MatrixXd jacobian(const std::vector<Species>& sp, double total, const double* x) {
  const auto n = static_cast<Eigen::Index>(3 * sp.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  double bound = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) bound += x[3 * i + 2];
  const double ribo = total - bound;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto& s = sp[i];
    const auto Y = static_cast<Eigen::Index>(3 * i), M = Y + 1, C = Y + 2;
    const double m = x[M];
    J(Y, Y) = -s.gamma;
    J(Y, C) = s.k0;
    J(M, M) = -s.bind * ribo - s.delta;
    J(C, M) = s.bind * ribo;
    for (std::size_t j = 0; j < sp.size(); ++j) {
      const auto Cj = static_cast<Eigen::Index>(3 * j + 2);
      J(M, Cj) += s.bind * m;
      J(C, Cj) -= s.bind * m;
    }
    J(M, C) += s.unbind + s.k0;
    J(C, C) -= s.unbind + s.k0;
  }
  return J;
}

double scaled_residual(const std::vector<Species>& sp, double total, const std::vector<double>& x,
                       double floor) {
  std::vector<double> dx(x.size());
  rhs(sp, total, x.data(), dx.data());
  double num = 0.0, den = floor;
  for (std::size_t k = 0; k < x.size(); ++k) {
    num = std::max(num, std::abs(dx[k]));
    den = std::max(den, std::abs(x[k]));
  }
  return num / den;
}

// Largest single reaction flux at x; rhs values below a small multiple of
// epsilon times this are indistinguishable from zero in double precision.
double gross_flux(const std::vector<Species>& sp, double total, const std::vector<double>& x) {
  double bound = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) bound += x[3 * i + 2];
  const double ribo = total - bound;
  double g = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const auto& s = sp[i];
    const double y = x[3 * i], m = x[3 * i + 1], c = x[3 * i + 2];
    g = std::max({g, s.production, s.bind * m * ribo, (s.unbind + s.k0) * c, s.gamma * y, s.delta * m});
  }
  return g;
}

// Scaled residual below tolerance, or absolute residual at the roundoff floor.
bool converged(const std::vector<Species>& sp, double total, const std::vector<double>& x,
               double tolerance, double floor) {
  if (scaled_residual(sp, total, x, floor) < tolerance) return true;
  std::vector<double> dx(x.size());
  rhs(sp, total, x.data(), dx.data());
  double r = 0.0;
  for (double v : dx) r = std::max(r, std::abs(v));
  return r <= kRoundoffMultiple * std::numeric_limits<double>::epsilon() * gross_flux(sp, total, x);
}

bool admissible(const std::vector<double>& x, double total) {
  double bound = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= 0.0)) return false;
    if (k % 3 == 2) bound += x[k];
  }
  return bound <= total;
}

double sup_norm(const std::vector<double>& v) {
  double r = 0.0;
  for (double e : v) r = std::max(r, std::abs(e));
  return r;
}

// Linearly implicit Euler from x until the scaled residual drops below
// tolerance or the step budget runs out. The binding reactions make the system
// stiff, so explicit steppers stall at their stability limit. The step grows
// as the residual falls and halves when a step leaves the admissible region.
// Returns whether it converged.
bool integrate(const std::vector<Species>& sp, double total, std::vector<double>& x,
               double tolerance, double floor, std::size_t budget) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> f(x.size()), trial(x.size()), ftrial(x.size());
  double dt = 1e-4;
  for (std::size_t step = 0; step < budget; ++step) {
    if (converged(sp, total, x, tolerance, floor)) return true;
    rhs(sp, total, x.data(), f.data());
    const Eigen::MatrixXd A = I / dt - jacobian(sp, total, x.data());
    const Eigen::VectorXd dx = A.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(f.data(), n));
    for (std::size_t k = 0; k < x.size(); ++k) trial[k] = x[k] + dx[static_cast<Eigen::Index>(k)];
    if (!dx.allFinite() || !admissible(trial, total)) {
      dt *= 0.5;
      if (dt < 1e-14) return false;
      continue;
    }
    rhs(sp, total, trial.data(), ftrial.data());
    const double before = sup_norm(f), after = sup_norm(ftrial);
    dt = std::min(dt * std::clamp(before / std::max(after, 1e-300), 0.5, 4.0), 1e12);
    x = trial;
  }
  return converged(sp, total, x, tolerance, floor);
}

// Damped Newton on rhs(x) = 0. Trial states are clipped at zero and the step
// is halved until the bound ribosomes fit and the residual decreases.
bool newton(const std::vector<Species>& sp, double total, std::vector<double>& x,
            double tolerance, double floor, std::size_t iterations) {
  const auto n = static_cast<Eigen::Index>(x.size());
  std::vector<double> f(x.size()), trial(x.size()), ftrial(x.size());
  for (std::size_t it = 0; it < iterations; ++it) {
    if (converged(sp, total, x, tolerance, floor)) return true;
    rhs(sp, total, x.data(), f.data());
    const Eigen::MatrixXd J = jacobian(sp, total, x.data());
    const Eigen::VectorXd step =
        J.partialPivLu().solve(-Eigen::Map<const Eigen::VectorXd>(f.data(), n));
    if (!step.allFinite()) return false;
    const double f0 = sup_norm(f);
    double lambda = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving, lambda *= 0.5) {
      for (std::size_t k = 0; k < x.size(); ++k)
        trial[k] = std::max(0.0, x[k] + lambda * step[static_cast<Eigen::Index>(k)]);
      if (!admissible(trial, total)) continue;
      rhs(sp, total, trial.data(), ftrial.data());
      if (sup_norm(ftrial) < f0 || lambda < 1e-3) {
        moved = true;
        break;
      }
    }
    if (!moved) return false;
    x = trial;
  }
  return converged(sp, total, x, tolerance, floor);
}

void check_state(const RreState& s, const RreParameters& p) {
  if (s.n_modules() != p.n_modules()) throw ShapeError("state and parameters disagree on module count");
  for (double v : s.values())
    if (!(v >= 0.0)) throw StateError("concentrations must be nonnegative");
  if (s.bound() > p.ribosomes)
    throw StateError("bound ribosomes exceed the total R_T");
}

void require_nonnegative(double v, const std::string& name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter(name + " must be finite and >= 0");
}

}  // namespace

void RreParameters::validate() const {
  if (modules.empty()) throw InvalidParameter("at least one module is required");
  if (!(ribosomes > 0.0) || !std::isfinite(ribosomes))
    throw InvalidParameter("total ribosome concentration must be positive");
  for (std::size_t i = 0; i < modules.size(); ++i) {
    const auto& m = modules[i];
    const std::string tag = "module " + std::to_string(i + 1) + " ";
    m.regulator.validate();
    for (auto [v, name] : {std::pair{m.dna, "dna"}, {m.bind, "a"}, {m.unbind, "d"},
                           {m.k0, "k0"}, {m.gamma, "gamma"}, {m.delta, "delta"}})
      require_nonnegative(v, tag + name);
  }
  for (auto [v, name] : {std::pair{host.a0, "A0'"}, {host.dna, "dna_cell"}, {host.bind, "a'"},
                         {host.unbind, "d'"}, {host.k0, "k0'"}, {host.gamma, "gamma'"},
                         {host.delta, "delta'"}})
    require_nonnegative(v, "host " + std::string(name));
}

double RreParameters::separation_factor() const {
  double fast = std::min(ribosomes * host.bind, host.unbind);
  double slow = std::max({host.k0, host.gamma, host.delta, host.a0});
  for (const auto& m : modules) {
    fast = std::min({fast, ribosomes * m.bind, m.unbind});
    slow = std::max({slow, m.k0, m.gamma, m.delta, m.regulator.max_value()});
  }
  return fast / slow;
}

RreParameters RreParameters::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidParameter("scaling factor must be positive");
  RreParameters q = *this;
  for (auto& m : q.modules) {
    m.bind *= factor;
    m.unbind *= factor;
  }
  q.host.bind *= factor;
  q.host.unbind *= factor;
  return q;
}

RreParameters default_rre_parameters(std::size_t n_modules) {
  RreParameters p;
  const GroundTruth truth = n_modules == 1 ? single_module_truth()
                          : n_modules == 2 ? two_module_truth()
                                           : throw InvalidParameter("defaults exist for 1 or 2 modules");
  for (std::size_t i = 0; i < n_modules; ++i) {
    GeneModule m;
    m.regulator = truth.modules[i];
    m.k0 = truth.theta[i] * m.gamma / p.ribosomes;
    p.modules.push_back(m);
  }
  return p;
}

RreState::RreState(std::vector<double> x) : x_(std::move(x)) {
  if (x_.size() < 6 || x_.size() % 3 != 0)
    throw ShapeError("state length must be 3 * (modules + 1)");
}

double RreState::bound() const {
  double b = 0.0;
  for (std::size_t i = 0; i <= n_modules(); ++i) b += complex(i);
  return b;
}

std::vector<double> rre_rhs(const RreState& state, const RreParameters& p,
                            std::span<const double> u) {
  check_state(state, p);
  const auto sp = species(p, u);
  std::vector<double> dx(state.values().size());
  rhs(sp, p.ribosomes, state.values().data(), dx.data());
  return dx;
}

double steady_state_residual(const RreState& s, const RreParameters& p,
                             std::span<const double> u, double floor) {
  const auto sp = species(p, u);
  return scaled_residual(sp, p.ribosomes, {s.values().begin(), s.values().end()}, floor);
}

RreState steady_state(const RreParameters& p, std::span<const double> u,
                      SteadyStateMethod method, const SteadyStateOptions& opts) {
  p.validate();
  const auto sp = species(p, u);
  std::vector<double> x(3 * (p.n_modules() + 1), 0.0);
  bool ok = false;
  if (method == SteadyStateMethod::integrate) {
    ok = integrate(sp, p.ribosomes, x, opts.tolerance, opts.floor, opts.max_steps);
  } else {
    // coarse implicit transient into the basin, then Newton to full tolerance
    (void)integrate(sp, p.ribosomes, x, kNewtonWarmupTolerance, opts.floor, opts.newton_warmup_steps);
    ok = newton(sp, p.ribosomes, x, opts.tolerance, opts.floor, opts.max_newton_iterations);
  }
  if (!ok) {
    const double r = scaled_residual(sp, p.ribosomes, x, opts.floor);
    throw ConvergenceError("steady state not reached, scaled residual " + std::to_string(r), r);
  }
  return RreState(std::move(x));
}

ReducedModel qssa_reduce(const RreParameters& p) {
  p.validate();
  ReducedModel r;
  if (p.host.bind == 0.0) throw InvalidParameter("host binding constant a' must be nonzero");
  r.K_host = (p.host.unbind + p.host.k0) / p.host.bind;
  r.host_load = p.host.a0 * p.host.dna / (p.host.delta * r.K_host);
  for (std::size_t i = 0; i < p.n_modules(); ++i) {
    const auto& m = p.modules[i];
    if (m.bind == 0.0)
      throw InvalidParameter("module " + std::to_string(i + 1) + " binding constant is zero");
    const double K = (m.unbind + m.k0) / m.bind;
    r.K.push_back(K);
    r.theta.push_back(m.k0 * p.ribosomes / m.gamma);
    r.f_scale.push_back(m.dna / (m.delta * K) / (1.0 + r.host_load));
  }
  return r;
}

std::vector<double> ReducedModel::module_outputs(const RreParameters& p,
                                                 std::span<const double> u) const {
  if (u.size() != f_scale.size()) throw ShapeError("input count does not match module count");
  std::vector<double> f(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) f[i] = f_scale[i] * eval_hill(p.modules[i].regulator, u[i]);
  return f;
}

std::vector<double> ReducedModel::protein(const RreParameters& p, std::span<const double> u) const {
  const auto f = module_outputs(p, u);
  std::vector<double> y(f.size());
  compose(theta, f, y);
  return y;
}

GroundTruth reduced_ground_truth(const RreParameters& p) {
  const auto r = qssa_reduce(p);
  GroundTruth t;
  for (std::size_t i = 0; i < p.n_modules(); ++i) {
    HillFunction h = p.modules[i].regulator;
    h.amplitude *= r.f_scale[i];
    h.basal *= r.f_scale[i];
    t.modules.push_back(h);
  }
  t.theta = r.theta;
  t.input_set = UniModularInputSet::unit(p.n_modules());
  return t;
}

std::vector<std::vector<double>> reduced_jacobian(const RreParameters& p,
                                                  std::span<const double> u,
                                                  std::span<const double> z) {
  const auto r = qssa_reduce(p);
  const std::size_t n = p.n_modules(), dim = 2 * n + 1;
  if (z.size() != dim) throw ShapeError("reduced state is (Y_1..Y_n, mRNA_1..mRNA_n, mRNA_cell)");
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i)
    prod[i] = eval_hill(p.modules[i].regulator, u[i]) * p.modules[i].dna;

  const auto field = [&](const std::vector<double>& s) {
    double load = 1.0 + s[2 * n] / r.K_host;
    for (std::size_t i = 0; i < n; ++i) load += s[n + i] / r.K[i];
    const double ribo = p.ribosomes / load;
    std::vector<double> ds(dim);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& m = p.modules[i];
      ds[i] = m.k0 * s[n + i] / r.K[i] * ribo - m.gamma * s[i];
      ds[n + i] = prod[i] - m.delta * s[n + i];
    }
    ds[2 * n] = p.host.a0 * p.host.dna - p.host.delta * s[2 * n];
    return ds;
  };

  std::vector<std::vector<double>> J(dim, std::vector<double>(dim));
  std::vector<double> s(z.begin(), z.end());
  for (std::size_t k = 0; k < dim; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(s[k]));
    auto plus = s, minus = s;
    plus[k] += h;
    minus[k] -= h;
    const auto fp = field(plus), fm = field(minus);
    for (std::size_t row = 0; row < dim; ++row) J[row][k] = (fp[row] - fm[row]) / (2.0 * h);
  }
  return J;
}

double reduced_spectral_abscissa(const RreParameters& p, std::span<const double> u) {
  const auto r = qssa_reduce(p);
  const std::size_t n = p.n_modules();
  std::vector<double> z(2 * n + 1);
  const auto y = r.protein(p, u);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = y[i];
    z[n + i] = eval_hill(p.modules[i].regulator, u[i]) * p.modules[i].dna / p.modules[i].delta;
  }
  z[2 * n] = p.host.a0 * p.host.dna / p.host.delta;
  const auto J = reduced_jacobian(p, u, z);
  const auto dim = static_cast<Eigen::Index>(z.size());
  Eigen::MatrixXd M(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = 0; b < dim; ++b)
      M(a, b) = J[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  return Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues().real().maxCoeff();
}

std::vector<SweepRow> separation_sweep(const RreParameters& p, std::span<const double> factors,
                                       const Matrix& inputs) {
  for (double f : factors)
    if (!(f > 0.0)) throw InvalidParameter("sweep factors must be positive");
  if (inputs.cols() != p.n_modules()) throw ShapeError("sweep inputs need one column per module");
  const std::size_t nf = factors.size(), nu = inputs.rows();
  std::vector<double> err(nf * nu, 0.0);
  std::vector<RreParameters> scaled;
  for (double f : factors) scaled.push_back(p.scaled(f));

  const auto jobs = static_cast<std::ptrdiff_t>(nf * nu);
  std::vector<std::string> failures(nf * nu);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t job = 0; job < jobs; ++job) {
    const auto k = static_cast<std::size_t>(job);
    const auto& q = scaled[k / nu];
    const auto u = inputs.row(k % nu);
    try {
      const auto full = steady_state(q, u, SteadyStateMethod::newton);
      const auto reduced = qssa_reduce(q).protein(q, u);
      double e = 0.0;
      for (std::size_t i = 0; i < reduced.size(); ++i)
        e = std::max(e, std::abs(full.protein(i) - reduced[i]) / std::max(std::abs(reduced[i]), 1e-300));
      err[k] = e;
    } catch (const Error& ex) {
      failures[k] = ex.what();
    }
  }
  for (const auto& f : failures)
    if (!f.empty()) throw ConvergenceError("separation sweep: " + f, NAN);

  std::vector<SweepRow> rows(nf);
  for (std::size_t j = 0; j < nf; ++j) {
    rows[j].factor = factors[j];
    rows[j].separation = scaled[j].separation_factor();
    for (std::size_t i = 0; i < nu; ++i) rows[j].discrepancy = std::max(rows[j].discrepancy, err[j * nu + i]);
  }
  return rows;
}

Dataset rre_dataset(const RreParameters& p, const Matrix& inputs, Provenance provenance,
                    SteadyStateMethod method) {
  p.validate();
  if (inputs.cols() != p.n_modules()) throw ShapeError("inputs need one column per module");
  Dataset d{inputs, Matrix(inputs.rows(), p.n_modules()), provenance};
  std::vector<std::string> failures(inputs.rows());
  const auto rows = static_cast<std::ptrdiff_t>(inputs.rows());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto k = static_cast<std::size_t>(r);
    try {
      const auto s = steady_state(p, inputs.row(k), method);
      for (std::size_t i = 0; i < p.n_modules(); ++i) d.outputs(k, i) = s.protein(i);
    } catch (const Error& ex) {
      failures[k] = ex.what();
    }
  }
  for (const auto& f : failures)
    if (!f.empty()) throw ConvergenceError("rre dataset: " + f, NAN);
  return d;
}

}  // namespace modid
