#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kdvh/errors.hpp"
#include "kdvh/hierarchy.hpp"
#include "kdvh/ibpcalc.hpp"
#include "kdvh/lab.hpp"
#include "kdvh/modenergy.hpp"
#include "kdvh/spectral.hpp"

using namespace kdvh;
using nlohmann::json;

namespace {

constexpr int kPass = 0, kFail = 1, kError = 2;

struct Common {
  std::string manifest;
  std::string output;
  std::string command_line;
};

lab::RunManifest start_manifest(const Common& common, const json& config) {
  lab::RunManifest m;
  m.command_line = common.command_line;
  m.config = config;
  m.version = lab::version();
  m.started = lab::iso_timestamp(std::chrono::system_clock::now());
  return m;
}

void finish_manifest(lab::RunManifest& m, const std::string& path) {
  m.finished = lab::iso_timestamp(std::chrono::system_clock::now());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << m.to_json().dump(2) << "\n";
}

// Symbolic outputs go to --output or stdout; a manifest only on request.
void emit(const Common& common, const json& config, const std::string& bytes) {
  lab::RunManifest m = start_manifest(common, config);
  if (common.output.empty()) {
    std::cout << bytes;
    m.add_output("-", bytes);
  } else {
    lab::write_output(m, common.output, bytes);
  }
  m.verdict = "PASS";
  if (!common.manifest.empty()) finish_manifest(m, common.manifest);
}

std::string hierarchy_gen(int l, const std::string& format) {
  const HierarchyLevel& h = generate(l);
  if (format == "json")
    return json{{"l", l}, {"G", to_json(h.G)}, {"H", to_json(h.H.canonical)}, {"rhs", to_json(h.rhs)}}.dump(2) + "\n";
  std::ostringstream out;
  if (format == "latex") {
    out << "G_{" << l << "} = " << to_latex(h.G) << "\n";
    out << "H_{" << l << "} = \\int " << to_latex(h.H.canonical) << "\n";
  } else if (format == "text") {
    out << "G_" << l << " = " << to_string(h.G) << "\n";
    out << "H_" << l << " = int " << to_string(h.H.canonical) << "\n";
    out << "u_t = " << to_string(h.rhs) << "\n";
  } else {
    throw ConfigError("unknown format '" + format + "'");
  }
  return out.str();
}

lab::Config load_config(const std::string& path, const std::vector<std::string>& sets) {
  lab::Config c = path.empty() ? lab::Config() : lab::Config::from_file(path);
  for (const auto& s : sets) c.set_assignment(s);
  return c;
}

int run_solve(const Common& common, const lab::Config& c) {
  lab::RunManifest m = start_manifest(common, c.data());
  const auto flow = lab::flow_from_config(c);
  const auto sc = lab::solver_from_config(c);
  spectral::DiagnosticsSpec diag;
  if (c.has("diagnostics.s")) diag.s = c.number("diagnostics.s");
  std::optional<energy::EnergyBlueprint> bp;
  if (c.has("diagnostics.energy") && c.flag("diagnostics.energy")) {
    if (flow.kind != spectral::FlowSpec::Kind::Model) throw ConfigError("diagnostics.energy needs flow.kind = model");
    if (!(diag.s > energy::threshold(flow.l)))
      throw ThresholdViolation("diagnostics.s must exceed 4l - 9/2 for the modified energy");
    bp = energy::build_energy(flow.l);
    diag.energy = [&](const SpectralField& u) { return energy::evaluate_energy(*bp, diag.s, u); };
  }
  const auto tr = spectral::solve(lab::initial_condition(c, sc.N), flow, sc, diag);
  const std::string csv = lab::trajectory_csv(tr, diag.hamiltonians);
  std::string out = common.output;
  if (out.empty() && c.has("output.path")) out = c.text("output.path");
  if (out.empty()) {
    std::cout << csv;
    m.add_output("-", csv);
  } else {
    lab::write_output(m, out, csv);
  }
  m.verdict = "PASS";
  if (!common.manifest.empty()) finish_manifest(m, common.manifest);
  return kPass;
}

int run_exp(const Common& common, const std::string& name, lab::Config c, const std::string& dir) {
  c.merge_defaults(lab::defaults(name));
  lab::RunManifest m = start_manifest(common, c.data());
  const lab::ExperimentResult r = lab::run_experiment(name, c);
  std::filesystem::create_directories(dir);
  const std::filesystem::path base = std::filesystem::path(dir) / name;
  lab::write_output(m, base.string() + ".csv", r.csv);
  json summary = {{"experiment", name}, {"pass", r.pass}, {"metrics", r.metrics}};
  lab::write_output(m, base.string() + ".json", summary.dump(2) + "\n");
  m.verdict = r.pass ? "PASS" : "FAIL";
  finish_manifest(m, common.manifest.empty() ? base.string() + ".manifest.json" : common.manifest);
  std::cout << name << ": " << (r.pass ? "PASS" : "FAIL") << " " << r.metrics.dump() << "\n";
  return r.pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KdV hierarchy laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lab::version());
  Common common;
  for (int i = 0; i < argc; ++i) common.command_line += (i ? " " : "") + std::string(argv[i]);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--manifest", common.manifest, "Write a run manifest to this path");
    sub->add_option("--output,-o", common.output, "Output file (default: stdout)");
  };

  int l = 2;
  std::string format = "text";
  auto* hier = app.add_subcommand("hierarchy", "Symbolic hierarchy levels");
  hier->require_subcommand(1);
  auto* gen = hier->add_subcommand("gen", "Print G_l, H_l and the flow at level l");
  gen->add_option("--l", l, "Level")->required()->check(CLI::Range(0, 64));
  gen->add_option("--format", format, "text | json | latex");
  add_common(gen);

  bool verify = false;
  auto* ibp = app.add_subcommand("ibp", "Integration-by-parts coefficients");
  ibp->require_subcommand(1);
  auto* alpha = ibp->add_subcommand("alpha", "Print the α table at level l as JSON");
  alpha->add_option("--l", l, "Level")->required()->check(CLI::Range(1, 64));
  alpha->add_flag("--verify", verify, "Certify the identity with the Euler operator");
  add_common(alpha);

  double s = 0;
  auto* en = app.add_subcommand("energy", "Modified energy construction");
  en->require_subcommand(1);
  auto* build = en->add_subcommand("build", "Print the energy blueprint at level l as JSON");
  build->add_option("--l", l, "Level")->required()->check(CLI::Range(2, 12));
  auto* s_opt = build->add_option("--s", s, "Regularity; checked against 4l - 9/2");
  add_common(build);

  std::string config_path;
  std::vector<std::string> sets;
  auto* solve = app.add_subcommand("solve", "Integrate a flow and print diagnostics as CSV");
  solve->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  solve->add_option("--set", sets, "Override a key: --set time.dt=1e-3");
  add_common(solve);

  std::string exp_name, dir = ".";
  auto* exp = app.add_subcommand("exp", "Run an experiment and print its verdict");
  exp->add_option("name", exp_name, "conservation | mu-cauchy | bona-smith | energy-drift | scaling")
      ->required()
      ->check(CLI::IsMember({"conservation", "mu-cauchy", "bona-smith", "energy-drift", "scaling"}));
  exp->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  exp->add_option("--set", sets, "Override a key: --set time.dt=1e-3");
  exp->add_option("--dir", dir, "Directory for CSV, JSON and manifest outputs");
  exp->add_option("--manifest", common.manifest, "Manifest path (default: <dir>/<name>.manifest.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kError;
  }

  try {
    if (*gen) {
      emit(common, {{"l", l}, {"format", format}}, hierarchy_gen(l, format));
      return kPass;
    }
    if (*alpha) {
      const AlphaTable t = alpha_coeffs(l);
      json j = {{"l", l}, {"alphas", json::array()}, {"diagonal", to_fraction_string(t.diagonal())}};
      for (const auto& a : t.alphas) j["alphas"].push_back(to_fraction_string(a));
      bool ok = true;
      if (verify) {
        ok = verify_identity(l);
        j["verified"] = ok;
      }
      emit(common, {{"l", l}, {"verify", verify}}, j.dump(2) + "\n");
      return ok ? kPass : kFail;
    }
    if (*build) {
      if (*s_opt && !(s > energy::threshold(l)))
        throw ThresholdViolation("s = " + std::to_string(s) + " does not exceed 4l - 9/2");
      const auto bp = energy::build_energy(l);
      json j = energy::to_json(bp);
      if (*s_opt) j["s"] = s;
      emit(common, {{"l", l}, {"s", *s_opt ? json(s) : json(nullptr)}}, j.dump(2) + "\n");
      return bp.cancelled() ? kPass : kFail;
    }
    if (*solve) return run_solve(common, load_config(config_path, sets));
    if (*exp) return run_exp(common, exp_name, load_config(config_path, sets), dir);
  } catch (const BlowUp& e) {
    std::cerr << "blow-up at t = " << e.time << ": " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
