#include "kdvh/lab.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "kdvh/errors.hpp"
#include "kdvh/hierarchy.hpp"
#include "kdvh/modenergy.hpp"

#ifndef KDVH_VERSION
#define KDVH_VERSION "0.0.0"
#endif

namespace kdvh::lab {

using nlohmann::json;
using namespace spectral;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("malformed key '" + key + "'");
    parts.push_back(p);
  }
  if (parts.empty()) throw ConfigError("empty key");
  return parts;
}

json parse_value(const std::string& v) {
  try {
    return json::parse(v);
  } catch (const json::parse_error&) {
    return v;
  }
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double rel_drift(const std::vector<DiagnosticRow>& rows, std::size_t m) {
  const double h0 = rows.front().H.at(m);
  double d = 0;
  for (const auto& r : rows) d = std::max(d, std::abs(r.H.at(m) - h0));
  return h0 == 0 ? d : d / std::abs(h0);
}

template <class F>
auto run_all(const std::vector<double>& points, F f) {
  using R = decltype(f(0.0));
  std::vector<std::future<R>> futures;
  for (double p : points) futures.push_back(std::async(std::launch::async, f, p));
  std::vector<R> out;
  for (auto& fu : futures) out.push_back(fu.get());
  return out;
}

double max_abs(const SpectralField& f) {
  double m = 0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

Config::Config(json j) : j_(std::move(j)) {
  if (!j_.is_object()) throw ConfigError("configuration must be an object");
}

Config Config::parse(const std::string& text) {
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    try {
      return Config(json::parse(t));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("invalid JSON configuration: ") + e.what());
    }
  }
  Config c;
  std::stringstream ss(text);
  int lineno = 0;
  for (std::string line; std::getline(ss, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    c.set_assignment(line);
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const json& value) {
  json* node = &j_;
  const auto parts = split_key(key);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (!next.is_object()) next = json::object();
    node = &next;
  }
  (*node)[parts.back()] = value;
}

void Config::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), parse_value(trim(assignment.substr(eq + 1))));
}

void Config::merge_defaults(const Config& defaults) {
  json merged = defaults.j_;
  merged.merge_patch(j_);
  j_ = std::move(merged);
}

bool Config::has(const std::string& key) const {
  const json* node = &j_;
  for (const auto& p : split_key(key)) {
    if (!node->is_object() || !node->contains(p)) return false;
    node = &(*node)[p];
  }
  return true;
}

const json& Config::at(const std::string& key) const {
  const json* node = &j_;
  for (const auto& p : split_key(key)) {
    if (!node->is_object() || !node->contains(p)) throw ConfigError("missing configuration key '" + key + "'");
    node = &(*node)[p];
  }
  return *node;
}

double Config::number(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

int Config::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + key + "' must be an integer");
  return static_cast<int>(v);
}

bool Config::flag(const std::string& key) const {
  const json& v = at(key);
  if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
  return v.get<bool>();
}

std::string Config::text(const std::string& key) const {
  const json& v = at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<double> Config::numbers(const std::string& key) const {
  const json& v = at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError("'" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("'" + key + "' must be a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

FlowSpec flow_from_config(const Config& c) {
  const std::string kind = c.has("flow.kind") ? c.text("flow.kind") : "model";
  const int l = c.has("flow.l") ? c.integer("flow.l") : 1;
  FlowSpec f;
  if (kind == "model") {
    f = FlowSpec::model(l);
  } else if (kind == "regularized") {
    f = FlowSpec::regularized(l, c.number("flow.mu"));
  } else if (kind == "hierarchy") {
    f = FlowSpec::hierarchy(l);
  } else {
    throw ConfigError("unknown flow.kind '" + kind + "'");
  }
  if (c.has("flow.nonlinear")) f.nonlinear_enabled = c.flag("flow.nonlinear");
  return f;
}

SolverConfig solver_from_config(const Config& c) {
  SolverConfig s;
  if (c.has("grid.N")) s.N = c.integer("grid.N");
  if (c.has("time.dt")) s.dt = c.number("time.dt");
  if (c.has("time.T")) s.T = c.number("time.T");
  if (c.has("time.cadence")) s.cadence = c.integer("time.cadence");
  if (c.has("dealias")) s.dealias = c.number("dealias");
  if (c.has("integrator.order")) s.order = c.integer("integrator.order");
  s.validate();
  return s;
}

SpectralField initial_condition(const Config& c, int n) {
  const std::string kind = c.has("ic.kind") ? c.text("ic.kind") : "cos";
  if (kind == "zero") return SpectralField::zeros(n);
  const double a = c.has("ic.amplitude") ? c.number("ic.amplitude") : 0.1;
  if (kind == "cos") {
    const int k = c.has("ic.k") ? c.integer("ic.k") : 1;
    return SpectralField::from_function(n, [&](double x) { return a * std::cos(k * x); });
  }
  if (kind == "random")
    return random_field(n, c.integer("ic.kmax"), c.number("ic.decay"), a,
                        static_cast<unsigned long long>(c.integer("ic.seed")));
  throw ConfigError("unknown ic.kind '" + kind + "'");
}

std::string trajectory_csv(const Trajectory& tr, const std::vector<int>& hamiltonians) {
  std::ostringstream out;
  out << "t,l2,hs";
  for (int m : hamiltonians) out << ",H" << m;
  const bool has_e = !tr.rows.empty() && tr.rows.front().Es.has_value();
  if (has_e) out << ",Es";
  out << "\n";
  for (const auto& r : tr.rows) {
    out << num(r.t) << ',' << num(r.l2) << ',' << num(r.hs);
    for (double h : r.H) out << ',' << num(h);
    if (has_e) out << ',' << num(*r.Es);
    out << "\n";
  }
  return out.str();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Config defaults(const std::string& experiment) {
  json j;
  if (experiment == "conservation") {
    j = {{"flow", {{"kind", "hierarchy"}, {"l", 1}}},
         {"grid", {{"N", 256}}},
         {"time", {{"dt", 1e-3}, {"T", 1.0}, {"cadence", 1}}},
         {"integrator", {{"order", 2}}},
         {"ic", {{"kind", "cos"}, {"amplitude", 0.1}, {"k", 1}}},
         {"diagnostics", {{"s", 1.0}}},
         {"threshold", {{"drift", 1e-8}, {"refinement_tolerance", 0.3}}}};
  } else if (experiment == "mu-cauchy") {
    j = {{"flow", {{"kind", "regularized"}, {"l", 2}}},
         {"mu", {{"ladder", {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4}}}},
         {"grid", {{"N", 64}}},
         {"time", {{"dt", 1e-3}, {"T", 1.0}, {"cadence", 5}}},
         {"integrator", {{"order", 4}}},
         {"ic", {{"kind", "random"}, {"kmax", 1}, {"decay", 1.0}, {"amplitude", 0.05}, {"seed", 7}}},
         {"threshold", {{"slope", 1.0}, {"slope_tolerance", 0.2}}}};
  } else if (experiment == "bona-smith") {
    j = {{"field", {{"s", 2.0}, {"eta", 0.01}, {"seed", 11}}},
         {"grid", {{"N", 32768}}},
         {"mollifier", {{"m", 2}}},
         {"eps", {{"ladder", {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024, 1.0 / 2048}}}},
         {"nu", {0.5, 1.0}},
         {"beta", {0.5, 1.0}},
         {"threshold", {{"growth_tolerance", 0.2}, {"decay_margin", 0.2}}}};
  } else if (experiment == "energy-drift") {
    j = {{"flow", {{"kind", "model"}, {"l", 2}}},
         {"energy", {{"s", 4.0}}},
         {"grid", {{"N", 128}}},
         {"time", {{"dt", 1e-3}, {"T", 1.0}, {"cadence", 50}}},
         {"integrator", {{"order", 4}}},
         {"ic", {{"kind", "random"}, {"kmax", 6}, {"decay", 5.0}, {"amplitude", 0.02}, {"seed", 5}}},
         {"contrast", {{"k0", {8, 16, 32, 64}}, {"amplitude", 0.01}, {"N", 512}}},
         {"coercivity", {{"amplitudes", {1e-3, 1e-2, 1e-1, 1.0, 3.0, 10.0, 30.0}}, {"kmax", 8}, {"seed", 13}}},
         {"threshold",
          {{"contrast_factor", 5.0}, {"constant_change", 0.1}, {"coercivity_low", 0.25}, {"coercivity_high", 0.75}}}};
  } else if (experiment == "scaling") {
    j = {{"flow", {{"kind", "model"}, {"l", 2}}},
         {"scaling", {{"lambda", 2}, {"dt_factor", 1.0}}},
         {"grid", {{"N", 64}}},
         {"time", {{"dt", 1e-3}, {"T", 0.1}, {"cadence", 1000000}}},
         {"integrator", {{"order", 4}}},
         {"ic", {{"kind", "random"}, {"kmax", 4}, {"decay", 2.0}, {"amplitude", 0.1}, {"seed", 3}}},
         {"threshold", {{"relative_error", 1e-6}}}};
  } else {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return Config(j);
}

ExperimentResult exp_conservation(const Config& c) {
  ExperimentResult r;
  r.name = "conservation";
  const FlowSpec flow = flow_from_config(c);
  const SolverConfig base = solver_from_config(c);
  const SpectralField u0 = initial_condition(c, base.N);
  DiagnosticsSpec diag;
  diag.s = c.number("diagnostics.s");
  const auto runs = run_all({base.dt, base.dt / 2}, [&](double dt) {
    SolverConfig sc = base;
    sc.dt = dt;
    return solve(u0, flow, sc, diag);
  });
  const double tol = c.number("threshold.refinement_tolerance");
  const double target = std::pow(2.0, base.order);
  bool pass = true;
  json drifts = json::array();
  for (std::size_t m = 0; m < diag.hamiltonians.size(); ++m) {
    const double d1 = rel_drift(runs[0].rows, m), d2 = rel_drift(runs[1].rows, m);
    json e = {{"H", diag.hamiltonians[m]}, {"drift", d1}, {"drift_half_dt", d2}};
    bool ok = d1 < c.number("threshold.drift");
    if (d1 == 0 && d2 == 0) {
      e["ratio"] = nullptr;
    } else {
      const double ratio = d1 / d2;
      e["ratio"] = ratio;
      ok = ok && std::abs(ratio - target) <= tol * target;
    }
    e["pass"] = ok;
    pass = pass && ok;
    drifts.push_back(e);
  }
  r.metrics = {{"order", base.order}, {"target_ratio", target}, {"hamiltonians", drifts}};
  r.pass = pass;
  r.csv = trajectory_csv(runs[0], diag.hamiltonians);
  return r;
}

ExperimentResult exp_mu_cauchy(const Config& c) {
  ExperimentResult r;
  r.name = "mu-cauchy";
  const auto ladder = c.numbers("mu.ladder");
  const SolverConfig sc = solver_from_config(c);
  const SpectralField u0 = initial_condition(c, sc.N);
  const int l = c.integer("flow.l");
  std::set<double> all(ladder.begin(), ladder.end());
  for (double mu : ladder) all.insert(mu / 2);
  const std::vector<double> points(all.begin(), all.end());
  DiagnosticsSpec diag;
  diag.hamiltonians.clear();
  diag.keep_snapshots = true;
  const auto runs = run_all(points, [&](double mu) { return solve(u0, FlowSpec::regularized(l, mu), sc, diag); });
  std::map<double, const Trajectory*> by_mu;
  for (std::size_t i = 0; i < points.size(); ++i) by_mu[points[i]] = &runs[i];

  std::vector<double> dist;
  std::ostringstream csv;
  csv << "mu,mu_half,distance\n";
  for (double mu : ladder) {
    const Trajectory& a = *by_mu.at(mu);
    const Trajectory& b = *by_mu.at(mu / 2);
    double d = 0;
    for (std::size_t i = 0; i < a.snapshots.size(); ++i)
      d = std::max(d, sobolev_norm(linear_combination(1, a.snapshots[i], -1, b.snapshots[i]), 0));
    dist.push_back(d);
    csv << num(mu) << ',' << num(mu / 2) << ',' << num(d) << "\n";
  }
  const bool degenerate = std::any_of(dist.begin(), dist.end(), [](double d) { return !(d > 0); });
  const double slope = degenerate ? std::numeric_limits<double>::quiet_NaN() : loglog_slope(ladder, dist);
  r.pass = !degenerate && std::abs(slope - c.number("threshold.slope")) <= c.number("threshold.slope_tolerance");
  r.metrics = {{"slope", degenerate ? json(nullptr) : json(slope)}, {"distances", dist}, {"mu", ladder}};
  r.csv = csv.str();
  return r;
}

ExperimentResult exp_bona_smith(const Config& c) {
  ExperimentResult r;
  r.name = "bona-smith";
  const int n = c.integer("grid.N");
  const double s = c.number("field.s"), eta = c.number("field.eta");
  const int m = c.integer("mollifier.m");
  const auto eps = c.numbers("eps.ladder");
  const auto nus = c.numbers("nu"), betas = c.numbers("beta");
  const int kmax = c.has("field.kmax") ? c.integer("field.kmax") : n / 2 - 1;
  const SpectralField phi = random_field(n, kmax, s + 0.5 + eta, 1.0,
                                         static_cast<unsigned long long>(c.integer("field.seed")));
  struct Point {
    std::vector<double> growth, decay;
  };
  const auto points = run_all(eps, [&](double e) {
    const SpectralField pe = mollify(phi, e, m);
    const SpectralField diff = linear_combination(1, phi, -1, pe);
    Point p;
    for (double nu : nus) p.growth.push_back(sobolev_norm(pe, s + nu));
    for (double b : betas) p.decay.push_back(sobolev_norm(diff, s - b));
    return p;
  });
  std::ostringstream csv;
  csv << "eps,kind,param,value\n";
  for (std::size_t i = 0; i < eps.size(); ++i) {
    for (std::size_t a = 0; a < nus.size(); ++a)
      csv << num(eps[i]) << ",growth," << num(nus[a]) << ',' << num(points[i].growth[a]) << "\n";
    for (std::size_t a = 0; a < betas.size(); ++a)
      csv << num(eps[i]) << ",decay," << num(betas[a]) << ',' << num(points[i].decay[a]) << "\n";
  }
  bool pass = true;
  json growth = json::array(), decay = json::array();
  for (std::size_t a = 0; a < nus.size(); ++a) {
    std::vector<double> y;
    for (const auto& p : points) y.push_back(p.growth[a]);
    const double slope = loglog_slope(eps, y);
    const bool ok = std::abs(slope + nus[a]) <= c.number("threshold.growth_tolerance") * nus[a];
    growth.push_back({{"nu", nus[a]}, {"slope", slope}, {"pass", ok}});
    pass = pass && ok;
  }
  for (std::size_t a = 0; a < betas.size(); ++a) {
    std::vector<double> y;
    for (const auto& p : points) y.push_back(p.decay[a]);
    const double slope = loglog_slope(eps, y);
    const bool ok = slope > 0 && slope >= betas[a] - c.number("threshold.decay_margin");
    decay.push_back({{"beta", betas[a]}, {"slope", slope}, {"pass", ok}});
    pass = pass && ok;
  }
  r.metrics = {{"growth", growth}, {"decay", decay}};
  r.pass = pass;
  r.csv = csv.str();
  return r;
}

namespace {

double frequency_ratio(const energy::EnergyBlueprint& bp, double s, int k0, double amp, int n) {
  const SpectralField u = SpectralField::from_function(n, [&](double x) {
    return amp * (std::cos(x) + std::pow(k0, -s) * (std::cos(k0 * x) + std::sin((k0 + 1) * x)));
  });
  const SpectralField ut = flow_rhs(FlowSpec::model(bp.l), u, 1.0);
  const double raw = 2 * inner(multiplier(u, Multiplier::J(2 * s)), ut);
  return std::abs(raw) / std::abs(energy::energy_rate(bp, s, u));
}

struct DriftRun {
  Trajectory tr;
  double constant = 0;
};

DriftRun drift_run(const energy::EnergyBlueprint& bp, double s, const Config& c, int n) {
  SolverConfig sc = solver_from_config(c);
  sc.N = n;
  DiagnosticsSpec diag;
  diag.s = s;
  diag.hamiltonians.clear();
  diag.keep_snapshots = true;
  diag.energy = [&](const SpectralField& u) { return energy::evaluate_energy(bp, s, u); };
  DriftRun out{solve(initial_condition(c, n), FlowSpec::model(bp.l), sc, diag)};
  for (const auto& u : out.tr.snapshots) {
    const double norm = sobolev_norm(u, s);
    double scale = 0;
    for (int k = 1; k <= bp.l; ++k) scale += std::pow(norm, k + 2);
    if (scale > 0) out.constant = std::max(out.constant, std::abs(energy::energy_rate(bp, s, u)) / scale);
  }
  return out;
}

}  // namespace

ExperimentResult exp_energy_drift(const Config& c) {
  ExperimentResult r;
  r.name = "energy-drift";
  const int l = c.integer("flow.l");
  const double s = c.number("energy.s");
  if (!(s > energy::threshold(l)))
    throw ThresholdViolation("s = " + num(s) + " does not exceed 4l - 9/2 = " + num(energy::threshold(l)));
  const energy::EnergyBlueprint bp = energy::build_energy(l);
  const int n = c.integer("grid.N");

  auto fine = std::async(std::launch::async, [&] { return drift_run(bp, s, c, 2 * n); });
  const DriftRun coarse = drift_run(bp, s, c, n);
  const DriftRun doubled = fine.get();

  double drift = 0;
  const double e0 = *coarse.tr.rows.front().Es;
  for (const auto& row : coarse.tr.rows) drift = std::max(drift, std::abs(*row.Es - e0));
  const double change = coarse.constant > 0 ? std::abs(doubled.constant - coarse.constant) / coarse.constant : 0.0;
  const bool constant_ok = change < c.number("threshold.constant_change");

  const auto k0s = c.numbers("contrast.k0");
  const double camp = c.number("contrast.amplitude");
  const int cn = c.integer("contrast.N");
  const auto ratios = run_all(k0s, [&](double k0) { return frequency_ratio(bp, s, static_cast<int>(k0), camp, cn); });
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) monotone = monotone && ratios[i] > ratios[i - 1];
  const double factor = ratios.back() / ratios.front();
  const bool contrast_ok = monotone && factor >= c.number("threshold.contrast_factor");

  const double lo = c.number("threshold.coercivity_low"), hi = c.number("threshold.coercivity_high");
  const SpectralField shape = random_field(n, c.integer("coercivity.kmax"), s + 1, 1.0,
                                           static_cast<unsigned long long>(c.integer("coercivity.seed")));
  json scan = json::array();
  double delta = 0;
  bool window_ok = true, coercive = false, first = true;
  for (double a : c.numbers("coercivity.amplitudes")) {
    const SpectralField u = linear_combination(a, shape, 0, shape);
    const double norm2 = inner(u, u) + inner(multiplier(u, Multiplier::D(s)), multiplier(u, Multiplier::D(s)));
    const double ratio = energy::evaluate_energy(bp, s, u) / norm2;
    const bool in = ratio >= lo && ratio <= hi;
    if (in && window_ok) delta = std::sqrt(norm2);
    if (!in) window_ok = false;
    scan.push_back({{"amplitude", a}, {"norm", std::sqrt(norm2)}, {"ratio", ratio}, {"in_window", in}});
    if (first) coercive = in;
    first = false;
  }

  std::ostringstream csv;
  csv << "k0,ratio\n";
  for (std::size_t i = 0; i < k0s.size(); ++i) csv << num(k0s[i]) << ',' << num(ratios[i]) << "\n";
  csv << "\n" << trajectory_csv(coarse.tr, {});

  r.metrics.update({{"drift", drift},
                    {"constant", coarse.constant},
                    {"constant_doubled_N", doubled.constant},
                    {"constant_change", change},
                    {"contrast", {{"k0", k0s}, {"ratio", ratios}, {"monotone", monotone}, {"factor", factor}}},
                    {"coercivity", {{"delta", delta}, {"smallest_in_window", coercive}, {"scan", scan}}}});
  r.pass = constant_ok && contrast_ok && coercive;
  r.csv = csv.str();
  return r;
}

ExperimentResult exp_scaling(const Config& c) {
  ExperimentResult r;
  r.name = "scaling";
  const int lambda = c.integer("scaling.lambda");
  if (lambda < 1) throw ConfigError("scaling.lambda must be a positive integer");
  const FlowSpec flow = flow_from_config(c);
  const SolverConfig sc = solver_from_config(c);
  const SpectralField u0 = initial_condition(c, sc.N);
  SolverConfig scaled = sc;
  scaled.N = sc.N * lambda;
  scaled.T = scaled_time(sc.T, lambda, flow.l);
  scaled.dt = c.number("scaling.dt_factor") * scaled_time(sc.dt, lambda, flow.l);
  auto big = std::async(std::launch::async, [&] { return solve(scale_field(u0, lambda), flow, scaled); });
  const Trajectory base = solve(u0, flow, sc);
  const Trajectory other = big.get();
  const SpectralField expected = scale_field(base.final_state, lambda);
  const double denom = max_abs(expected);
  const double err = max_abs(linear_combination(1, other.final_state, -1, expected));
  const double rel = denom > 0 ? err / denom : err;
  r.pass = rel < c.number("threshold.relative_error");
  r.metrics = {{"lambda", lambda}, {"relative_error", rel}, {"steps", base.steps}, {"scaled_steps", other.steps}};
  std::ostringstream csv;
  csv << "x,scaled_solve,rescaled_base\n";
  for (int i = 0; i < expected.size(); ++i)
    csv << num(expected.x(i)) << ',' << num(other.final_state.values()[i]) << ',' << num(expected.values()[i]) << "\n";
  r.csv = csv.str();
  return r;
}

ExperimentResult run_experiment(const std::string& name, Config c) {
  c.merge_defaults(defaults(name));
  if (name == "conservation") return exp_conservation(c);
  if (name == "mu-cauchy") return exp_mu_cauchy(c);
  if (name == "bona-smith") return exp_bona_smith(c);
  if (name == "energy-drift") return exp_energy_drift(c);
  return exp_scaling(c);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string iso_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* version() { return KDVH_VERSION; }

void RunManifest::add_output(const std::string& path, const std::string& bytes) {
  outputs.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
}

json RunManifest::to_json() const {
  return {{"command_line", command_line}, {"config", config},     {"version", version},
          {"started", started},           {"finished", finished}, {"outputs", outputs},
          {"verdict", verdict}};
}

void write_output(RunManifest& m, const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << bytes;
  m.add_output(path, bytes);
}

}  // namespace kdvh::lab
