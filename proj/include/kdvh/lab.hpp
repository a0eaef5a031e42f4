#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdvh/spectral.hpp"

namespace kdvh::lab {

// Nested JSON settings addressed by dotted keys ("time.dt").  Files may be
// JSON objects or flat `key = value` lines; values are parsed as JSON when
// possible and kept as strings otherwise.
class Config {
 public:
  Config() = default;
  explicit Config(nlohmann::json j);
  static Config parse(const std::string& text);
  static Config from_file(const std::string& path);

  void set(const std::string& key, const nlohmann::json& value);
  void set_assignment(const std::string& assignment);  // "key=value"
  // Fills in every key missing from *this.
  void merge_defaults(const Config& defaults);

  bool has(const std::string& key) const;
  const nlohmann::json& at(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;

  const nlohmann::json& data() const { return j_; }

 private:
  nlohmann::json j_ = nlohmann::json::object();
};

spectral::FlowSpec flow_from_config(const Config& c);
spectral::SolverConfig solver_from_config(const Config& c);
// ic.kind: zero | cos (ic.amplitude·cos(ic.k x)) | random (ic.kmax, ic.decay,
// ic.amplitude, ic.seed).
SpectralField initial_condition(const Config& c, int n);

std::string trajectory_csv(const spectral::Trajectory& tr, const std::vector<int>& hamiltonians);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ExperimentResult {
  std::string name;
  bool pass = false;
  nlohmann::json metrics = nlohmann::json::object();
  std::string csv;
};

// Default settings per experiment; the threshold.* entries are the verdict
// thresholds.
Config defaults(const std::string& experiment);

ExperimentResult exp_conservation(const Config& c);
ExperimentResult exp_mu_cauchy(const Config& c);
ExperimentResult exp_bona_smith(const Config& c);
ExperimentResult exp_energy_drift(const Config& c);
ExperimentResult exp_scaling(const Config& c);
// Dispatches on the experiment name after merging defaults.
ExperimentResult run_experiment(const std::string& name, Config c);

std::string sha256_hex(const std::string& bytes);
std::string iso_timestamp(std::chrono::system_clock::time_point t);
const char* version();

struct RunManifest {
  std::string command_line;
  nlohmann::json config = nlohmann::json::object();
  std::string version;
  std::string started, finished;
  nlohmann::json outputs = nlohmann::json::array();  // [{path, sha256, bytes}]
  nlohmann::json verdict;

  void add_output(const std::string& path, const std::string& bytes);
  nlohmann::json to_json() const;
};

// Writes `bytes` to `path` and records it in the manifest.
void write_output(RunManifest& m, const std::string& path, const std::string& bytes);

}  // namespace kdvh::lab
