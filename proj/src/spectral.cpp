#include "kdvh/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>

#include "kdvh/errors.hpp"
#include "kdvh/hierarchy.hpp"

namespace kdvh {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

const Plans& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* r = fftw_alloc_real(n);
  fftw_complex* c = fftw_alloc_complex(n / 2 + 1);
  Plans p;
  p.r2c = fftw_plan_dft_r2c_1d(n, r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.c2r = fftw_plan_dft_c2r_1d(n, c, r, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(r);
  fftw_free(c);
  return cache.emplace(n, p).first->second;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int padded_size(int n, int degree) {
  // Alias-free for retained |k| < n/2 when m > (degree + 1) n / 2.
  long need = static_cast<long>(std::max(degree, 1) + 1) * n / 2 + 1;
  int m = n;
  while (m < need) m *= 2;
  return m;
}

// Values of ∂^a f on a grid of size m (m >= n), Nyquist discarded.
std::vector<double> padded_derivative(const std::vector<cplx>& fhat, int n, int a, int m) {
  std::vector<cplx> buf(m / 2 + 1);
  for (int k = 0; k < n / 2; ++k) buf[k] = fhat[k] * spectral::ik_power(k, a);
  std::vector<double> out(m);
  spectral::backward(m, buf.data(), out.data());
  return out;
}

class PaddedEval {
 public:
  PaddedEval(const SpectralField& u, int m) : u_(u), m_(m) {}

  const std::vector<double>& derivative(int a) {
    auto it = cache_.find(a);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(a, padded_derivative(u_.modes(), u_.size(), a, m_)).first->second;
  }

  std::vector<double> values(const DiffPoly& p) {
    std::vector<double> acc(m_, 0.0);
    for (const auto& [f, c] : p.terms()) {
      const double coeff = c.get_d();
      std::vector<double> term(m_, coeff);
      for (const auto& x : f) {
        if (x.symbol != "u") throw std::invalid_argument("spectral evaluation needs a polynomial in u");
        const auto& d = derivative(x.order);
        for (int i = 0; i < m_; ++i) term[i] *= d[i];
      }
      for (int i = 0; i < m_; ++i) acc[i] += term[i];
    }
    return acc;
  }

  int size() const { return m_; }

 private:
  const SpectralField& u_;
  int m_;
  std::map<int, std::vector<double>> cache_;
};

SpectralField truncate(const std::vector<double>& padded, int n, double fraction) {
  const int m = static_cast<int>(padded.size());
  std::vector<cplx> big(m / 2 + 1);
  spectral::forward(m, padded.data(), big.data());
  const int kcut = static_cast<int>(std::floor(fraction * n / 2 + 1e-12));
  std::vector<cplx> modes(n / 2 + 1);
  for (int k = 0; k < n / 2 && k <= kcut; ++k) modes[k] = big[k];
  return SpectralField::from_modes(n, std::move(modes));
}

}  // namespace

SpectralField SpectralField::zeros(int n) { return from_modes(n, std::vector<cplx>(n / 2 + 1)); }

SpectralField SpectralField::from_values(std::vector<double> values) {
  SpectralField f;
  f.n_ = static_cast<int>(values.size());
  if (!is_power_of_two(f.n_) || f.n_ < 4) throw std::invalid_argument("grid size must be a power of two");
  f.modes_.resize(f.n_ / 2 + 1);
  spectral::forward(f.n_, values.data(), f.modes_.data());
  f.values_ = std::move(values);
  return f;
}

SpectralField SpectralField::from_modes(int n, std::vector<cplx> modes) {
  if (!is_power_of_two(n) || n < 4) throw std::invalid_argument("grid size must be a power of two");
  if (static_cast<int>(modes.size()) != n / 2 + 1) throw std::invalid_argument("expected n/2+1 modes");
  SpectralField f;
  f.n_ = n;
  modes[0] = cplx(modes[0].real(), 0.0);
  modes[n / 2] = cplx(modes[n / 2].real(), 0.0);
  f.values_.resize(n);
  spectral::backward(n, modes.data(), f.values_.data());
  f.modes_ = std::move(modes);
  return f;
}

SpectralField SpectralField::from_function(int n, const std::function<double(double)>& fn) {
  std::vector<double> v(n);
  for (int m = 0; m < n; ++m) v[m] = fn(kTwoPi * m / n);
  return from_values(std::move(v));
}

cplx SpectralField::mode(int k) const {
  if (k < 0) return std::conj(mode(-k));
  if (k > n_ / 2) return 0.0;
  return modes_[k];
}

double SpectralField::x(int m) const { return kTwoPi * m / n_; }

namespace spectral {

void forward(int n, const double* in, cplx* out) {
  const Plans& p = plans_for(n);
  fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / n;
  for (int k = 0; k <= n / 2; ++k) out[k] *= scale;
}

void backward(int n, const cplx* in, double* out) {
  const Plans& p = plans_for(n);
  std::vector<cplx> copy(in, in + n / 2 + 1);  // c2r overwrites its input
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(copy.data()), out);
}

cplx ik_power(int k, int n) {
  // (ik)^n with exact signs for the integer powers.
  double mag = std::pow(static_cast<double>(k), n);
  switch (((n % 4) + 4) % 4) {
    case 0: return {mag, 0};
    case 1: return {0, mag};
    case 2: return {-mag, 0};
    default: return {0, -mag};
  }
}

cplx Multiplier::symbol(int k) const {
  const double kk = std::abs(static_cast<double>(k));
  switch (kind) {
    case Kind::D:
      if (k == 0) return sigma == 0 ? 1.0 : 0.0;
      return std::pow(kk, sigma);
    case Kind::J: return std::pow(1 + kk * kk, sigma / 2);
    case Kind::Deriv: return ik_power(k, m);
    case Kind::Low: return k == 0 ? 1.0 : 0.0;
    case Kind::High: return k == 0 ? 0.0 : 1.0;
  }
  return 0.0;
}

SpectralField apply_symbol(const SpectralField& f, const std::function<cplx(int)>& symbol) {
  const int n = f.size();
  std::vector<cplx> out(n / 2 + 1);
  for (int k = 0; k < n / 2; ++k) out[k] = f.modes()[k] * symbol(k);
  return SpectralField::from_modes(n, std::move(out));
}

SpectralField multiplier(const SpectralField& f, const Multiplier& m) {
  return apply_symbol(f, [&m](int k) { return m.symbol(k); });
}

SpectralField linear_combination(double a, const SpectralField& f, double b, const SpectralField& g) {
  if (f.size() != g.size()) throw std::invalid_argument("grid mismatch");
  std::vector<cplx> out(f.size() / 2 + 1);
  for (int k = 0; k < f.size() / 2; ++k) out[k] = a * f.modes()[k] + b * g.modes()[k];
  return SpectralField::from_modes(f.size(), std::move(out));
}

SpectralField dealias(const SpectralField& f, double fraction) {
  const int kcut = static_cast<int>(std::floor(fraction * f.size() / 2 + 1e-12));
  return apply_symbol(f, [kcut](int k) { return k <= kcut ? 1.0 : 0.0; });
}

SpectralField resample(const SpectralField& f, int n) {
  std::vector<cplx> out(n / 2 + 1);
  for (int k = 0; k < std::min(n, f.size()) / 2; ++k) out[k] = f.modes()[k];
  return SpectralField::from_modes(n, std::move(out));
}

SpectralField eval_diffpoly(const DiffPoly& p, const SpectralField& u, double fraction) {
  PaddedEval ev(u, padded_size(u.size(), p.max_degree()));
  return truncate(ev.values(p), u.size(), fraction);
}

SpectralField eval_linearization(const DiffPoly& p, const SpectralField& u, const SpectralField& v,
                                 double fraction) {
  const int m = padded_size(u.size(), p.max_degree());
  PaddedEval ev(u, m);
  std::vector<double> acc(m, 0.0);
  for (int a = 0; a <= p.max_order(); ++a) {
    DiffPoly dp = partial(p, {"u", a});
    if (dp.is_zero()) continue;
    auto base = ev.values(dp);
    auto dv = padded_derivative(v.modes(), v.size(), a, m);
    for (int i = 0; i < m; ++i) acc[i] += base[i] * dv[i];
  }
  return truncate(acc, u.size(), fraction);
}

double integral(const SpectralField& f) { return kTwoPi * f.modes()[0].real(); }

double inner(const SpectralField& f, const SpectralField& g) {
  double acc = f.modes()[0].real() * g.modes()[0].real();
  for (int k = 1; k < f.size() / 2; ++k) acc += 2 * std::real(f.modes()[k] * std::conj(g.modes()[k]));
  return kTwoPi * acc;
}

double functional_eval(const DiffPoly& integrand, const SpectralField& u) {
  PaddedEval ev(u, padded_size(u.size(), integrand.max_degree()));
  auto vals = ev.values(integrand);
  double sum = 0;
  for (double x : vals) sum += x;
  return kTwoPi * sum / ev.size();
}

double functional_eval(const IntegralExpr& e, const SpectralField& u) { return functional_eval(e.canonical, u); }

double sobolev_norm(const SpectralField& f, double s) {
  double acc = std::norm(f.modes()[0]);
  for (int k = 1; k < f.size() / 2; ++k) acc += 2 * std::pow(1.0 + double(k) * k, s) * std::norm(f.modes()[k]);
  return std::sqrt(kTwoPi * acc);
}

SpectralField mollify(const SpectralField& f, double eps, int m) {
  if (eps <= 0 || m < 1) throw std::invalid_argument("mollifier needs eps > 0 and m >= 1");
  return apply_symbol(f, [eps, m](int k) { return std::exp(-std::pow(eps * k, 2 * m)); });
}

SpectralField scale_field(const SpectralField& f, int lambda) {
  if (lambda < 1) throw std::invalid_argument("scaling factor must be a positive integer");
  const int n = f.size() * lambda;
  std::vector<cplx> out(n / 2 + 1);
  const double l2 = double(lambda) * lambda;
  for (int k = 0; k < f.size() / 2; ++k) out[k * lambda] = l2 * f.modes()[k];
  return SpectralField::from_modes(n, std::move(out));
}

double scaled_time(double t, int lambda, int l) { return t / std::pow(double(lambda), 2 * l + 1); }

SpectralField random_field(int n, int kmax, double decay, double amplitude, unsigned long long seed) {
  if (kmax >= n / 2) throw std::invalid_argument("kmax must stay below the Nyquist mode");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<cplx> modes(n / 2 + 1);
  for (int k = 1; k <= kmax; ++k) modes[k] = std::polar(amplitude * std::pow(double(k), -decay), phase(rng));
  return SpectralField::from_modes(n, std::move(modes));
}

// ---------------------------------------------------------------------------

FlowSpec FlowSpec::model(int l) {
  if (l < 1) throw std::invalid_argument("model flow needs l >= 1");
  FlowSpec f;
  f.kind = Kind::Model;
  f.l = l;
  f.linear = DiffPoly::monomial(-1, {{"u", 2 * l + 1}});
  f.nonlinear = DiffPoly::monomial(1, {{"u", 0}, {"u", 2 * l - 1}});
  return f;
}

FlowSpec FlowSpec::regularized(int l, double mu) {
  if (mu < 0) throw std::invalid_argument("regularization parameter must be nonnegative");
  FlowSpec f = model(l);
  f.kind = Kind::Regularized;
  f.mu = mu;
  return f;
}

namespace {

void split_rhs(const DiffPoly& rhs, FlowSpec& f) {
  for (const auto& [fl, c] : rhs.terms()) {
    if (fl.size() == 1) f.linear.add_term(fl, c);
    else f.nonlinear.add_term(fl, c);
  }
}

}  // namespace

FlowSpec FlowSpec::hierarchy(int l) {
  FlowSpec f;
  f.kind = Kind::Hierarchy;
  f.l = l;
  split_rhs(generate(l).rhs, f);
  return f;
}

FlowSpec FlowSpec::custom(const DiffPoly& rhs) {
  FlowSpec f;
  f.kind = Kind::Custom;
  split_rhs(rhs, f);
  return f;
}

cplx FlowSpec::symbol(int k) const {
  cplx s = 0;
  for (const auto& [fl, c] : linear.terms()) s += c.get_d() * ik_power(k, fl[0].order);
  if (mu > 0) s -= mu * std::pow(double(k), 2 * l + 2);
  return s;
}

DiffPoly FlowSpec::rhs() const { return linear + nonlinear; }

void SolverConfig::validate() const {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (N < 16 || !is_power_of_two(N)) throw ConfigError("N must be a power of two >= 16");
  if (!(dealias > 0 && dealias <= 1)) throw ConfigError("dealias fraction must lie in (0, 1]");
  if (order != 2 && order != 4) throw ConfigError("integrator order must be 2 or 4");
  if (!(T >= 0)) throw ConfigError("horizon must be nonnegative");
  if (cadence < 1) throw ConfigError("cadence must be positive");
}

namespace {

// φ_1, φ_2, φ_3 of the exponential integrators.
void phi(cplx z, cplx& p1, cplx& p2, cplx& p3) {
  if (std::abs(z) < 0.5) {
    p1 = p2 = p3 = 0;
    cplx zn = 1;
    double f1 = 1, f2 = 2, f3 = 6;  // (n+1)!, (n+2)!, (n+3)!
    for (int n = 0; n < 20; ++n) {
      p1 += zn / f1;
      p2 += zn / f2;
      p3 += zn / f3;
      zn *= z;
      f1 *= n + 2;
      f2 *= n + 3;
      f3 *= n + 4;
    }
    return;
  }
  const cplx ez = std::exp(z);
  p1 = (ez - 1.0) / z;
  p2 = (ez - 1.0 - z) / (z * z);
  p3 = (ez - 1.0 - z - 0.5 * z * z) / (z * z * z);
}

}  // namespace

ExpIntegrator::ExpIntegrator(const FlowSpec& flow, const SolverConfig& cfg)
    : flow_(flow), n_(cfg.N), order_(cfg.order), dt_(cfg.dt) {
  cfg.validate();
  kcut_ = static_cast<int>(std::floor(cfg.dealias * n_ / 2 + 1e-12));
  const int nm = n_ / 2 + 1;
  e_.assign(nm, 0);
  e2_.assign(nm, 0);
  q_.assign(nm, 0);
  f1_.assign(nm, 0);
  f2_.assign(nm, 0);
  f3_.assign(nm, 0);
  const double h = dt_;
  for (int k = 0; k < n_ / 2 && k <= kcut_; ++k) {
    const cplx z = flow_.symbol(k) * h;
    cplx p1, p2, p3;
    phi(z, p1, p2, p3);
    e_[k] = std::exp(z);
    if (order_ == 2) {
      f1_[k] = h * p1;
      f2_[k] = h * p2;
      continue;
    }
    cplx h1, h2, h3;
    phi(0.5 * z, h1, h2, h3);
    e2_[k] = std::exp(0.5 * z);
    q_[k] = 0.5 * h * h1;
    f1_[k] = h * (p1 - 3.0 * p2 + 4.0 * p3);
    f2_[k] = h * (p2 - 2.0 * p3);
    f3_[k] = h * (4.0 * p3 - p2);
  }
}

std::vector<cplx> ExpIntegrator::nonlinear_modes(const std::vector<cplx>& uhat) const {
  std::vector<cplx> out(n_ / 2 + 1);
  if (!flow_.nonlinear_enabled || flow_.nonlinear.is_zero()) return out;
  SpectralField u = SpectralField::from_modes(n_, uhat);
  SpectralField nl = eval_diffpoly(flow_.nonlinear, u, 2.0 * kcut_ / n_);
  for (int k = 0; k < n_ / 2 && k <= kcut_; ++k) out[k] = nl.modes()[k];
  return out;
}

std::vector<cplx> ExpIntegrator::rhs_modes(const std::vector<cplx>& uhat) const {
  auto out = nonlinear_modes(uhat);
  for (int k = 0; k < n_ / 2 && k <= kcut_; ++k) out[k] += flow_.symbol(k) * uhat[k];
  return out;
}

std::vector<cplx> ExpIntegrator::step_modes(const std::vector<cplx>& u) const {
  const int nm = n_ / 2 + 1;
  std::vector<cplx> out(nm);
  const auto nu = nonlinear_modes(u);
  if (order_ == 2) {
    std::vector<cplx> a(nm);
    for (int k = 0; k < nm; ++k) a[k] = e_[k] * u[k] + f1_[k] * nu[k];
    const auto na = nonlinear_modes(a);
    for (int k = 0; k < nm; ++k) out[k] = a[k] + f2_[k] * (na[k] - nu[k]);
    return out;
  }
  std::vector<cplx> a(nm), b(nm), c(nm);
  for (int k = 0; k < nm; ++k) a[k] = e2_[k] * u[k] + q_[k] * nu[k];
  const auto na = nonlinear_modes(a);
  for (int k = 0; k < nm; ++k) b[k] = e2_[k] * u[k] + q_[k] * na[k];
  const auto nb = nonlinear_modes(b);
  for (int k = 0; k < nm; ++k) c[k] = e2_[k] * a[k] + q_[k] * (2.0 * nb[k] - nu[k]);
  const auto nc = nonlinear_modes(c);
  for (int k = 0; k < nm; ++k)
    out[k] = e_[k] * u[k] + f1_[k] * nu[k] + 2.0 * f2_[k] * (na[k] + nb[k]) + f3_[k] * nc[k];
  return out;
}

SpectralField ExpIntegrator::step(const SpectralField& u, double t) const {
  if (u.size() != n_) throw std::invalid_argument("state grid does not match the integrator");
  auto next = step_modes(u.modes());
  for (const auto& m : next)
    if (!std::isfinite(m.real()) || !std::isfinite(m.imag()))
      throw BlowUp("non-finite Fourier mode", t + dt_);
  return SpectralField::from_modes(n_, std::move(next));
}

SpectralField step(const SpectralField& u, const FlowSpec& flow, const SolverConfig& cfg) {
  SolverConfig c = cfg;
  c.N = u.size();
  return ExpIntegrator(flow, c).step(u);
}

SpectralField flow_rhs(const FlowSpec& flow, const SpectralField& u, double fraction) {
  SpectralField lin = apply_symbol(u, [&flow](int k) { return flow.symbol(k); });
  if (!flow.nonlinear_enabled || flow.nonlinear.is_zero()) return dealias(lin, fraction);
  return dealias(linear_combination(1.0, lin, 1.0, eval_diffpoly(flow.nonlinear, u, fraction)), fraction);
}

namespace {

DiagnosticRow diagnose(double t, const SpectralField& u, const DiagnosticsSpec& d) {
  DiagnosticRow r;
  r.t = t;
  r.l2 = sobolev_norm(u, 0);
  r.hs = sobolev_norm(u, d.s);
  for (int m : d.hamiltonians) r.H.push_back(functional_eval(generate(m).H, u));
  if (d.energy) r.Es = d.energy(u);
  return r;
}

}  // namespace

Trajectory solve(const SpectralField& u0, const FlowSpec& flow, const SolverConfig& cfg,
                 const DiagnosticsSpec& diag) {
  SolverConfig c = cfg;
  c.validate();
  if (u0.size() != c.N) throw std::invalid_argument("initial field grid does not match grid.N");
  Trajectory tr;
  tr.steps = std::max<long>(1, std::lround(c.T / c.dt));
  if (c.T == 0) tr.steps = 0;
  tr.dt = tr.steps ? c.T / tr.steps : c.dt;
  c.dt = tr.dt;
  ExpIntegrator integ(flow, c);
  SpectralField u = dealias(u0, c.dealias);
  auto record = [&](long n, const SpectralField& state) {
    const double t = n * tr.dt;
    tr.rows.push_back(diagnose(t, state, diag));
    if (diag.keep_snapshots) {
      tr.snapshot_times.push_back(t);
      tr.snapshots.push_back(state);
    }
  };
  record(0, u);
  for (long n = 1; n <= tr.steps; ++n) {
    u = integ.step(u, (n - 1) * tr.dt);
    if (n % c.cadence == 0 || n == tr.steps) record(n, u);
  }
  tr.final_state = u;
  return tr;
}

}  // namespace spectral
}  // namespace kdvh
