#include "abc/config.hpp"
#include "abc/harness.hpp"
#include "abc/models.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace {

/// Flags shared by every run subcommand. A config file, when given, is the
/// base; explicit flags override it.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

void add_common(CLI::App& app, Common& common) {
  app.add_option("--config", common.config_path, "Base configuration file (TOML or JSON)");
  app.add_option("--seed", common.seed, "Master seed");
  app.add_option("--threads", common.threads, "Worker threads (default: ABC_THREADS, else all cores)");
  app.add_option("--out", common.out, "Output directory");
}

abc::ExperimentConfig base_config(const Common& common, const std::string& kind) {
  abc::ExperimentConfig config = common.config_path.empty() ? abc::ExperimentConfig{} : abc::load_config(common.config_path);
  config.kind = kind;
  if (common.seed) config.seed = *common.seed;
  if (common.threads) config.threads = *common.threads;
  if (common.out) config.out = *common.out;
  return config;
}

template <typename T>
void set_if(const std::optional<T>& value, T& target) {
  if (value) target = *value;
}

/// Model and observed-data flags.
struct DataFlags {
  std::optional<std::string> model;
  std::optional<std::size_t> size;
  std::optional<std::vector<double>> theta;
  std::optional<std::string> data_file;
  std::optional<std::string> summary;

  void add(CLI::App& app, const char* data_flag = "--data") {
    app.add_option("--model", model, "Model id (see list-models)");
    app.add_option("--size", size, "Observation count override");
    app.add_option("--theta", theta, "Simulate the observed data at this parameter")->delimiter(',');
    app.add_option(data_flag, data_file, "Observed data CSV");
    app.add_option("--summary", summary, "Summary specification");
  }
  void apply(abc::ExperimentConfig& config) const {
    set_if(model, config.model);
    set_if(size, config.model_size);
    set_if(theta, config.theta);
    set_if(data_file, config.data_file);
    set_if(summary, config.summary);
  }
};

int report(const abc::ExperimentRecord& record, const abc::ExperimentConfig& config) {
  if (record.status != "ok") {
    std::cerr << "abc: run failed: " << record.error << "\n";
    return 1;
  }
  std::cout << "wrote " << record.output_digests.size() << " outputs to " << config.out << " (config "
            << record.config_hash.substr(0, 12) << ", " << record.wall_seconds << " s)\n";
  for (const std::string& warning : record.warnings) std::cerr << "warning: " << warning << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-free inference with approximate Bayesian computation"};
  app.require_subcommand(1);
  // "--h" is the bandwidth flag, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  // rejection / is / mcmc share their flags.
  Common engine_common;
  DataFlags engine_data;
  std::optional<std::string> kernel;
  std::optional<double> bandwidth;
  std::optional<double> target_rate;
  std::optional<std::size_t> count;
  std::optional<std::vector<double>> proposal_sd;
  std::optional<std::vector<double>> theta0;
  bool noisy = false;
  std::vector<CLI::App*> engines;
  const std::pair<const char*, const char*> engine_kinds[] = {
      {"rejection", "Run rejection ABC"}, {"is", "Run importance-sampling ABC"}, {"mcmc", "Run MCMC ABC"}};
  for (const auto& [name, description] : engine_kinds) {
    CLI::App* sub = app.add_subcommand(name, description);
    add_common(*sub, engine_common);
    engine_data.add(*sub);
    sub->add_option("--kernel", kernel, "uniform or gaussian");
    sub->add_option("--h", bandwidth, "Kernel bandwidth");
    sub->add_option("--target-rate", target_rate, "Accept this fraction of closest simulations (rejection)");
    sub->add_option("--n", count, "Proposals, or chain length for mcmc");
    sub->add_option("--proposal-sd", proposal_sd, "Random-walk or proposal standard deviations")->delimiter(',');
    sub->add_option("--theta0", theta0, "Proposal centre or chain start")->delimiter(',');
    sub->add_flag("--noisy", noisy, "Perturb the observed summary once by the kernel");
    engines.push_back(sub);
  }

  Common semi_common;
  DataFlags semi_data;
  std::optional<std::string> pilot;
  std::optional<std::vector<std::string>> features;
  std::optional<std::size_t> budget;
  CLI::App* semiauto = app.add_subcommand("semiauto", "Pilot, regression training and final ABC run");
  add_common(*semiauto, semi_common);
  semi_data.add(*semiauto);
  semiauto->add_option("--pilot-summary", pilot, "Pilot summary specification");
  semiauto->add_option("--features", features, "Candidate feature specifications")->delimiter(',');
  semiauto->add_option("--budget", budget, "Total simulated datasets");

  Common seq_common;
  DataFlags seq_data;
  std::optional<std::string> mask;
  std::optional<std::size_t> particles;
  std::optional<double> seq_h;
  bool seq_noisy = false;
  CLI::App* sequential = app.add_subcommand("sequential", "Sequential ABC for state-space models");
  add_common(*sequential, seq_common);
  seq_data.add(*sequential, "--obs");
  sequential->add_option("--mask", mask, "full or prey-only");
  sequential->add_option("--n-particles", particles, "Particle count");
  sequential->add_option("--h", seq_h, "Kernel bandwidth");
  sequential->add_flag("--noisy", seq_noisy, "Noisy ABC perturbation per step");

  Common base_common;
  DataFlags base_data;
  std::optional<std::string> method;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> base_n;
  std::optional<double> base_rate;
  std::optional<std::vector<double>> base_theta0;
  CLI::App* baseline = app.add_subcommand("baseline", "Regression correction, synthetic likelihood or indirect inference");
  add_common(*baseline, base_common);
  base_data.add(*baseline);
  baseline->add_option("--method", method, "beaumont, synthlik or indirect")->required();
  baseline->add_option("--replicates", replicates, "Simulations per parameter value");
  baseline->add_option("--n", base_n, "Proposals or chain length");
  baseline->add_option("--target-rate", base_rate, "Acceptance fraction before regression correction");
  baseline->add_option("--theta0", base_theta0, "Starting parameter")->delimiter(',');

  Common exp_common;
  std::string exp_path;
  std::optional<std::string> preset;
  std::optional<std::string> profile;
  CLI::App* experiment = app.add_subcommand("experiment", "Run a configuration file or a named preset");
  add_common(*experiment, exp_common);
  experiment->add_option("file", exp_path, "Configuration file");
  experiment->add_option("--preset", preset, "Preset id (see list-presets)");
  experiment->add_option("--profile", profile, "smoke, desk or paper");

  CLI::App* list_models = app.add_subcommand("list-models", "List model ids");
  CLI::App* list_presets = app.add_subcommand("list-presets", "List experiment presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_models->parsed()) {
      for (const std::string& id : abc::model_ids()) std::cout << id << "\n";
      return 0;
    }
    if (list_presets->parsed()) {
      for (const abc::PresetInfo& info : abc::preset_list()) std::cout << info.id << "\t" << info.description << "\n";
      return 0;
    }

    abc::ExperimentConfig config;
    for (CLI::App* sub : engines)
      if (sub->parsed()) {
        config = base_config(engine_common, sub->get_name());
        engine_data.apply(config);
        set_if(kernel, config.kernel);
        set_if(bandwidth, config.bandwidth);
        set_if(target_rate, config.accept_fraction);
        if (count) (sub->get_name() == "mcmc" ? config.length : config.proposals) = *count;
        set_if(proposal_sd, config.proposal_sd);
        set_if(theta0, config.theta0);
        if (noisy) config.noisy = true;
      }
    if (semiauto->parsed()) {
      config = base_config(semi_common, "semiauto");
      semi_data.apply(config);
      set_if(pilot, config.pilot);
      set_if(features, config.features);
      set_if(budget, config.budget);
    }
    if (sequential->parsed()) {
      config = base_config(seq_common, "sequential");
      seq_data.apply(config);
      set_if(mask, config.mask);
      set_if(particles, config.particles);
      set_if(seq_h, config.bandwidth);
      if (seq_noisy) config.noisy = true;
    }
    if (baseline->parsed()) {
      config = base_config(base_common, "baseline");
      base_data.apply(config);
      set_if(method, config.method);
      set_if(replicates, config.replicates);
      if (base_n) config.proposals = config.length = *base_n;
      set_if(base_rate, config.accept_fraction);
      set_if(base_theta0, config.theta0);
    }
    if (experiment->parsed()) {
      if (exp_path.empty() && !preset) throw abc::ConfigError("experiment needs a config file or --preset");
      exp_common.config_path = exp_path;
      config = base_config(exp_common, exp_path.empty() ? "preset" : abc::load_config(exp_path).kind);
      set_if(preset, config.preset);
      if (preset) config.kind = "preset";
      set_if(profile, config.profile);
    }
    // Re-parse so flag overrides pass the same validation as a file.
    config = abc::parse_config(abc::config_to_json(config));
    return report(abc::run_config(config), config);
  } catch (const abc::ConfigError& e) {
    std::cerr << "abc: configuration error";
    if (!e.field().empty()) std::cerr << " in " << e.field();
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "abc: " << e.what() << "\n";
    return 1;
  }
}
