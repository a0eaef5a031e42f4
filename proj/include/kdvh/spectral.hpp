#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "kdvh/diffpoly.hpp"

namespace kdvh {

using cplx = std::complex<double>;

// Real 2π-periodic field on x_m = 2πm/N.  modes()[k], 0 <= k <= N/2, holds
// f̂_k = (1/N) Σ_m f(x_m) e^{-ikx_m}; negative k follow by conjugation.  The
// Nyquist mode is kept for round trips but discarded by every operation.
class SpectralField {
 public:
  SpectralField() = default;
  static SpectralField zeros(int n);
  static SpectralField from_values(std::vector<double> values);
  static SpectralField from_modes(int n, std::vector<cplx> modes);
  static SpectralField from_function(int n, const std::function<double(double)>& f);

  int size() const { return n_; }
  int max_wavenumber() const { return n_ / 2; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<cplx>& modes() const { return modes_; }
  cplx mode(int k) const;
  double x(int m) const;

 private:
  int n_ = 0;
  std::vector<double> values_;
  std::vector<cplx> modes_;
};

namespace spectral {

// Thin FFTW wrapper; plans are cached per size and shared between threads.
void forward(int n, const double* in, cplx* out);   // normalized by 1/n
void backward(int n, const cplx* in, double* out);  // n/2+1 modes in, n values out

struct Multiplier {
  enum class Kind { D, J, Deriv, Low, High };
  Kind kind = Kind::D;
  double sigma = 0;
  int m = 0;
  static Multiplier D(double sigma) { return {Kind::D, sigma, 0}; }
  static Multiplier J(double sigma) { return {Kind::J, sigma, 0}; }
  static Multiplier deriv(int m) { return {Kind::Deriv, 0, m}; }
  static Multiplier low() { return {Kind::Low, 0, 0}; }
  static Multiplier high() { return {Kind::High, 0, 0}; }
  cplx symbol(int k) const;
};

cplx ik_power(int k, int n);
SpectralField multiplier(const SpectralField& f, const Multiplier& m);
SpectralField apply_symbol(const SpectralField& f, const std::function<cplx(int)>& symbol);
SpectralField linear_combination(double a, const SpectralField& f, double b, const SpectralField& g);
// Zeroes modes with |k| > fraction·N/2.
SpectralField dealias(const SpectralField& f, double fraction);
// Same function on a finer or coarser grid (zero padding / truncation).
SpectralField resample(const SpectralField& f, int n);

// Pseudospectral evaluation with alias-free padding, then truncation to the
// modes |k| <= dealias·N/2.
SpectralField eval_diffpoly(const DiffPoly& p, const SpectralField& u, double dealias = 1.0);
// Σ_a ∂p/∂u_a(u) · ∂^a v.
SpectralField eval_linearization(const DiffPoly& p, const SpectralField& u, const SpectralField& v,
                                 double dealias = 1.0);

double integral(const SpectralField& f);  // ∫_0^{2π} f dx
double inner(const SpectralField& f, const SpectralField& g);
double functional_eval(const DiffPoly& integrand, const SpectralField& u);
double functional_eval(const IntegralExpr& e, const SpectralField& u);

// (2π Σ_k (1+k²)^s |f̂_k|²)^{1/2}
double sobolev_norm(const SpectralField& f, double s);
// ρ̂(εk) = exp(-(εk)^{2m})
SpectralField mollify(const SpectralField& f, double eps, int m);
// λ² f(λx) on a grid λ times finer, so no mode is lost.
SpectralField scale_field(const SpectralField& f, int lambda);
double scaled_time(double t, int lambda, int l);  // t / λ^{2l+1}

// Seeded random field with |f̂_k| = amplitude·k^{-decay} for 1 <= k <= kmax
// and uniformly random phases.
SpectralField random_field(int n, int kmax, double decay, double amplitude, unsigned long long seed);

struct FlowSpec {
  enum class Kind { Model, Regularized, Hierarchy, Custom };
  Kind kind = Kind::Model;
  int l = 1;
  double mu = 0;
  DiffPoly linear;     // degree-one part of the right-hand side
  DiffPoly nonlinear;  // everything else
  bool nonlinear_enabled = true;

  static FlowSpec model(int l);
  static FlowSpec regularized(int l, double mu);
  static FlowSpec hierarchy(int l);
  static FlowSpec custom(const DiffPoly& rhs);
  cplx symbol(int k) const;
  DiffPoly rhs() const;  // linear + nonlinear (without the μ term)
};

struct SolverConfig {
  int N = 256;
  double dt = 1e-3;
  double T = 1.0;
  double dealias = 2.0 / 3.0;
  int order = 4;    // 2 = ETDRK2, 4 = ETDRK4
  int cadence = 1;  // diagnostics every `cadence` steps
  void validate() const;
};

// Exponential time differencing: the linear symbol is integrated exactly,
// the nonlinear part explicitly (Cox–Matthews ETDRK2 / ETDRK4).
class ExpIntegrator {
 public:
  ExpIntegrator(const FlowSpec& flow, const SolverConfig& cfg);
  SpectralField step(const SpectralField& u, double t = 0) const;
  std::vector<cplx> step_modes(const std::vector<cplx>& uhat) const;
  std::vector<cplx> rhs_modes(const std::vector<cplx>& uhat) const;
  int size() const { return n_; }

 private:
  std::vector<cplx> nonlinear_modes(const std::vector<cplx>& uhat) const;
  FlowSpec flow_;
  int n_, kcut_, order_;
  double dt_;
  std::vector<cplx> e_, e2_, q_, f1_, f2_, f3_;
};

// One step with freshly computed coefficients.
SpectralField step(const SpectralField& u, const FlowSpec& flow, const SolverConfig& cfg);
// Evaluates u_t = rhs(u) exactly (no time stepping), truncated at `dealias`.
SpectralField flow_rhs(const FlowSpec& flow, const SpectralField& u, double dealias = 1.0);

struct DiagnosticsSpec {
  double s = 1.0;
  std::vector<int> hamiltonians = {0, 1, 2};
  std::function<double(const SpectralField&)> energy;  // optional E^s
  bool keep_snapshots = false;
};

struct DiagnosticRow {
  double t = 0, l2 = 0, hs = 0;
  std::vector<double> H;
  std::optional<double> Es;
};

struct Trajectory {
  std::vector<DiagnosticRow> rows;
  std::vector<double> snapshot_times;
  std::vector<SpectralField> snapshots;
  SpectralField final_state;
  long steps = 0;
  double dt = 0;
};

// Throws BlowUp with the failure time if the state stops being finite.
Trajectory solve(const SpectralField& u0, const FlowSpec& flow, const SolverConfig& cfg,
                 const DiagnosticsSpec& diag = {});

}  // namespace spectral
}  // namespace kdvh
