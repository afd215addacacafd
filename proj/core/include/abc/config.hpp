#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace abc {

/// A configuration problem, with the 1-based source line when known (0
/// otherwise) and the dotted field name.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0, std::string field = {});
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// One experiment. Serialised as the tables run, model, data, summary and
/// engine; every key is optional and unknown keys are rejected.
struct ExperimentConfig {
  // [run]
  /// preset, rejection, is, mcmc, semiauto, sequential or baseline.
  std::string kind = "preset";
  std::string preset;
  /// smoke, desk or paper.
  std::string profile = "desk";
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out = "abc-out";

  // [model]
  std::string model = "discrete-toy";
  /// Number of observations; zero keeps the model default.
  std::size_t model_size = 0;

  // [data] observed data: explicit values, a one-column CSV file, or a
  // simulation at theta (stream "observed").
  std::vector<double> theta;
  std::vector<double> values;
  std::string data_file;

  // [summary]
  std::string summary = "identity";
  /// Candidate feature maps for semi-automatic ABC.
  std::vector<std::string> features;
  /// Pilot summaries for semi-automatic ABC.
  std::string pilot;

  // [engine]
  /// uniform or gaussian.
  std::string kernel = "uniform";
  double bandwidth = 1.0;
  /// Keep this fraction of closest simulations instead of a fixed bandwidth.
  double accept_fraction = 0.0;
  std::size_t proposals = 10000;
  std::size_t length = 10000;
  bool noisy = false;
  std::vector<double> proposal_sd;
  std::vector<double> theta0;
  std::size_t budget = 100000;
  std::size_t particles = 1000;
  double shrinkage = 0.98;
  std::size_t replicates = 500;
  /// Baseline method: beaumont, synthlik or indirect.
  std::string method;
  /// Observed state components for sequential ABC: full or prey-only.
  std::string mask = "full";
};

const std::vector<std::string>& experiment_kinds();

/// Parses a TOML document (the subset of tables, strings, numbers, booleans
/// and arrays), or JSON when the first non-blank character is '{'.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON: sorted keys, two-space indent, every field present.
std::string config_to_json(const ExperimentConfig& config);
std::string config_to_toml(const ExperimentConfig& config);

/// SHA-256 of the canonical JSON.
std::string config_hash(const ExperimentConfig& config);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace abc
