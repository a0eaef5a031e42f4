// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Tolerances and problem sizes are pinned here and passed to the experiments
// explicitly, so changing a library default cannot move a verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "kdvh/hierarchy.hpp"
#include "kdvh/ibpcalc.hpp"
#include "kdvh/lab.hpp"
#include "kdvh/modenergy.hpp"
#include "kdvh/spectral.hpp"

using namespace kdvh;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = elapsed < budget_seconds;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("criterion %2d: %s | %s | %s | %.2fs (budget %.0fs)\n", id, pass ? "PASS" : "FAIL", title.c_str(),
              o.detail.c_str(), elapsed, budget_seconds);
  std::fflush(stdout);
}

lab::Config config(const json& j) { return lab::Config(j); }

DiffPoly u(int order = 0) { return DiffPoly::var("u", order); }

}  // namespace

int main() {
  criterion(1, "diagonal law alpha_{l,l} = (-1)^{l+1}(2l+1), 1 <= l <= 12", 1.0, [] {
    std::ostringstream bad;
    for (int l = 1; l <= 12; ++l) {
      const Rational want = (l % 2 == 1 ? 1 : -1) * (2 * l + 1);
      const AlphaTable t = alpha_coeffs(l);
      if (static_cast<int>(t.alphas.size()) != l || t.alpha(l) != want)
        bad << " l=" << l << ":" << to_fraction_string(t.alpha(l));
    }
    return Outcome{bad.str().empty(), bad.str().empty() ? "exact for all 12 levels" : "mismatch" + bad.str()};
  });

  criterion(2, "identity certified by the Euler operator, 0 <= l <= 6", 30.0, [] {
    std::ostringstream bad;
    for (int l = 0; l <= 6; ++l)
      if (!verify_identity(l)) bad << " " << l;
    return Outcome{bad.str().empty(), bad.str().empty() ? "verified" : "failed at l =" + bad.str()};
  });

  criterion(3, "G_2 golden value and rank audit for l <= 8", 60.0, [] {
    const DiffPoly g2 = u(4) + DiffPoly::constant(frac(5, 3)) * u() * u(2) +
                        DiffPoly::constant(frac(5, 6)) * u(1) * u(1) +
                        DiffPoly::constant(frac(5, 18)) * u() * u() * u();
    if (generate(2).G != g2) return Outcome{false, "G_2 = " + to_string(generate(2).G)};
    for (int l = 0; l <= 8; ++l) {
      const HierarchyLevel& h = generate(l);
      const RankReport rep = classify(h);
      for (const auto& grp : rep.groups) {
        if (grp.weight != 2 * (l - grp.degree) + 3)
          return Outcome{false, "weight at l=" + std::to_string(l) + " degree " + std::to_string(grp.degree)};
      }
      for (const auto& m : h.rhs.monomials())
        if (rank_of(m) != frac(2 * l + 3, 2))
          return Outcome{false, "rank at l=" + std::to_string(l)};
    }
    return Outcome{true, "G_2 exact; every rhs monomial has rank l + 3/2"};
  });

  criterion(4, "modified-energy cancellation for l in {2,3,4,5}, symbolic s", 120.0, [] {
    std::ostringstream detail;
    for (int l = 2; l <= 5; ++l) {
      const energy::EnergyBlueprint bp = energy::build_energy(l);
      const Rational law = (l % 2 == 1 ? 1 : -1) * (2 * l + 1);
      if (bp.stages.empty()) return Outcome{false, "no stages at l=" + std::to_string(l)};
      for (const auto& st : bp.stages) {
        if (!st.resonant_residue.empty())
          return Outcome{false, "residue at l=" + std::to_string(l) + " order " + std::to_string(st.order)};
        for (const auto& d : st.diagonals)
          if (d == 0) return Outcome{false, "zero diagonal at l=" + std::to_string(l)};
      }
      for (const auto& d : bp.stages.front().diagonals)
        if (d != law) return Outcome{false, "cubic diagonal " + to_fraction_string(d) + " at l=" + std::to_string(l)};
      if (!bp.cancelled()) return Outcome{false, "not cancelled at l=" + std::to_string(l)};
      detail << " l=" << l << ":" << bp.stages.size() << " stages";
    }
    return Outcome{true, "residues empty;" + detail.str()};
  });

  criterion(5, "symbolic dE/dt vs finite differences, l=2 s=4 N=128", 60.0, [] {
    const energy::EnergyBlueprint bp = energy::build_energy(2);
    const double s = 4;
    const SpectralField v = spectral::random_field(128, 16, 2.0, 0.1, 20240601);
    const DiffPoly rate = evolution_derivative(energy::instantiate(bp, 4), "u", energy::model_rhs(2));
    const double predicted = spectral::functional_eval(rate, v);
    const SpectralField r = spectral::flow_rhs(spectral::FlowSpec::model(2), v, 1.0);
    auto central = [&](double h) {
      return (energy::evaluate_energy(bp, s, spectral::linear_combination(1, v, h, r)) -
              energy::evaluate_energy(bp, s, spectral::linear_combination(1, v, -h, r))) /
             (2 * h);
    };
    const double h = 1e-4 / spectral::sobolev_norm(r, 0);
    const double measured = (4 * central(h / 2) - central(h)) / 3;
    const double rel = std::abs(measured - predicted) / std::abs(predicted);
    char buf[160];
    std::snprintf(buf, sizeof buf, "predicted %.12e measured %.12e rel %.2e (tol 1e-6)", predicted, measured, rel);
    return Outcome{rel < 1e-6, buf};
  });

  criterion(6, "conservation of H_0, H_1, H_2 under KdV, N=256 dt=1e-3 T=1", 60.0, [] {
    const auto r = lab::run_experiment(
        "conservation", config({{"flow", {{"kind", "hierarchy"}, {"l", 1}}},
                                {"grid", {{"N", 256}}},
                                {"time", {{"dt", 1e-3}, {"T", 1.0}, {"cadence", 1}}},
                                {"integrator", {{"order", 2}}},
                                {"ic", {{"kind", "cos"}, {"amplitude", 0.1}, {"k", 1}}},
                                {"threshold", {{"drift", 1e-8}, {"refinement_tolerance", 0.3}}}}));
    bool ok = true;
    std::ostringstream d;
    for (const auto& h : r.metrics["hamiltonians"]) {
      const double drift = h["drift"], ratio = h["ratio"];
      ok = ok && drift < 1e-8 && std::abs(ratio - 4.0) <= 0.3 * 4.0;
      d << " H" << h["H"].get<int>() << ": drift " << drift << " ratio " << ratio << ";";
    }
    return Outcome{ok && r.pass, "p=2, target ratio 4 +/- 30%;" + d.str()};
  });

  criterion(7, "mu-Cauchy slope 1.0 +/- 0.2, model l=2", 60.0, [] {
    const auto r = lab::run_experiment(
        "mu-cauchy", config({{"flow", {{"kind", "regularized"}, {"l", 2}}},
                             {"mu", {{"ladder", {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4}}}},
                             {"grid", {{"N", 64}}},
                             {"time", {{"dt", 1e-3}, {"T", 1.0}, {"cadence", 5}}},
                             {"ic", {{"kind", "random"}, {"kmax", 1}, {"decay", 1.0}, {"amplitude", 0.05}, {"seed", 7}}},
                             {"threshold", {{"slope", 1.0}, {"slope_tolerance", 0.2}}}}));
    if (r.metrics["slope"].is_null()) return Outcome{false, "degenerate distances"};
    const double slope = r.metrics["slope"];
    return Outcome{std::abs(slope - 1.0) <= 0.2 && r.pass, "slope " + std::to_string(slope)};
  });

  criterion(8, "Bona-Smith growth slopes -nu +/- 20%, decay slopes >= beta - 0.2", 60.0, [] {
    const auto r = lab::run_experiment(
        "bona-smith",
        config({{"field", {{"s", 2.0}, {"eta", 0.01}, {"seed", 11}}},
                {"grid", {{"N", 32768}}},
                {"mollifier", {{"m", 2}}},
                {"eps", {{"ladder", {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024, 1.0 / 2048}}}},
                {"nu", {0.5, 1.0}},
                {"beta", {0.5, 1.0}},
                {"threshold", {{"growth_tolerance", 0.2}, {"decay_margin", 0.2}}}}));
    bool ok = true;
    std::ostringstream d;
    for (const auto& g : r.metrics["growth"]) {
      const double nu = g["nu"], slope = g["slope"];
      ok = ok && std::abs(slope + nu) <= 0.2 * nu;
      d << " nu=" << nu << ": " << slope << ";";
    }
    for (const auto& g : r.metrics["decay"]) {
      const double beta = g["beta"], slope = g["slope"];
      ok = ok && slope > 0 && slope >= beta - 0.2;
      d << " beta=" << beta << ": " << slope << ";";
    }
    return Outcome{ok && r.pass, d.str()};
  });

  criterion(9, "scaling symmetry lambda=2, l=2, T=0.1", 60.0, [] {
    const auto r = lab::run_experiment(
        "scaling", config({{"flow", {{"kind", "model"}, {"l", 2}}},
                           {"scaling", {{"lambda", 2}, {"dt_factor", 1.0}}},
                           {"grid", {{"N", 64}}},
                           {"time", {{"dt", 1e-3}, {"T", 0.1}}},
                           {"ic", {{"kind", "random"}, {"kmax", 4}, {"decay", 2.0}, {"amplitude", 0.1}, {"seed", 3}}},
                           {"threshold", {{"relative_error", 1e-6}}}}));
    const double err = r.metrics["relative_error"];
    char buf[96];
    std::snprintf(buf, sizeof buf, "max relative error %.2e (tol 1e-6)", err);
    return Outcome{err < 1e-6 && r.pass, buf};
  });

  criterion(10, "frequency-growth contrast over k0 in {8,16,32,64}, l=2 s=4", 120.0, [] {
    const auto r = lab::run_experiment(
        "energy-drift", config({{"flow", {{"kind", "model"}, {"l", 2}}},
                                {"energy", {{"s", 4.0}}},
                                {"contrast", {{"k0", {8, 16, 32, 64}}, {"amplitude", 0.01}, {"N", 512}}},
                                {"threshold", {{"contrast_factor", 5.0}}}}));
    const auto& c = r.metrics["contrast"];
    const std::vector<double> ratio = c["ratio"];
    bool monotone = true;
    for (std::size_t i = 1; i < ratio.size(); ++i) monotone = monotone && ratio[i] > ratio[i - 1];
    const double factor = ratio.back() / ratio.front();
    std::ostringstream d;
    d << "ratios";
    for (double x : ratio) d << " " << x;
    d << "; factor " << factor << " (need >= 5, monotone)";
    return Outcome{monotone && factor >= 5.0, d.str()};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
