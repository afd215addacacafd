#pragma once

#include "abc/config.hpp"
#include "abc/csv.hpp"
#include "abc/engines.hpp"
#include "abc/models.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace abc {

struct ExperimentRecord {
  std::string config_hash;
  /// "ok" or "failed".
  std::string status = "ok";
  std::string error;
  double wall_seconds = 0.0;
  std::map<std::string, double> acceptance_rates;
  std::map<std::string, std::size_t> stage_simulations;
  /// Output file name to SHA-256.
  std::map<std::string, std::string> output_digests;
  std::vector<std::string> warnings;
};

std::string record_to_json(const ExperimentRecord& record);

/// Output directory, file bookkeeping and record notes for one run.
class RunContext {
 public:
  RunContext(ExperimentConfig config, std::filesystem::path out_dir);

  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  /// Stream options for one stage of the run.
  RunOptions options(const std::string& label) const;

  /// Opens a CSV under the output directory and registers it as an output.
  std::unique_ptr<CsvWriter> csv(const std::string& name, std::vector<std::string> header);

  void note_rate(const std::string& name, double rate) { record_.acceptance_rates[name] = rate; }
  void note_simulations(const std::string& stage, std::size_t n) { record_.stage_simulations[stage] += n; }
  void warn(const std::string& message) { record_.warnings.push_back(message); }

  const std::vector<std::string>& outputs() const { return outputs_; }
  ExperimentRecord& record() { return record_; }

 private:
  ExperimentConfig config_;
  std::filesystem::path out_dir_;
  std::vector<std::string> outputs_;
  ExperimentRecord record_;
};

/// Observed data from the configuration: explicit values, a CSV file (one
/// row per observation, a header row is skipped), or one simulation at
/// theta on stream (seed, "observed", 0).
Dataset observed_data(const ExperimentConfig& config, const Model& model);

/// Runs the configured pipeline or preset. All outputs go to config.out;
/// record.json is written atomically on success and on handled failure,
/// and the other outputs of a failed run are removed. Throws only for
/// errors before the output directory exists.
ExperimentRecord run_config(const ExperimentConfig& config);
ExperimentRecord run_config_file(const std::filesystem::path& path);

struct PresetInfo {
  std::string id;
  std::string description;
  /// Output files compared by the determinism check.
  std::vector<std::string> primary_outputs;
};

const std::vector<PresetInfo>& preset_list();
void run_preset(const std::string& id, RunContext& context);

/// Writes a weighted sample as (index, parameters..., weight).
void write_samples(RunContext& context, const std::string& name, const WeightedSample& sample,
                   const std::vector<std::string>& param_names);

/// Thread count from the flag, else ABC_THREADS, else zero (hardware).
int threads_from_environment(int flag);

}  // namespace abc
