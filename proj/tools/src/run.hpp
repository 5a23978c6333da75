#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mosanet/config/config.hpp"
#include "mosanet/enhancer/pipeline.hpp"
#include "mosanet/training/train.hpp"

namespace mosanet::cli {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_dir = "runs";
  std::string run_id;
  std::int64_t seed = -1;
  int jobs = 0;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts);

struct Run {
  std::string command;
  config::Config cfg;
  std::filesystem::path dir;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Every key any command reads.
std::set<std::string> declared_keys();

/// Merges the config file and overrides, rejects unknown keys, creates
/// <output_dir>/<run_id> and writes config.toml and run.json into it.
Run open_run(const std::string& command, const CommonOptions& opts);

void note(const Run& run, const std::string& msg);

training::TrainConfig train_config_from(const config::Config& cfg, std::uint64_t seed);
training::LossWeights loss_weights_from(const config::Config& cfg);
enhancer::SeTrainConfig se_train_config_from(const config::Config& cfg, std::uint64_t seed);

/// The selected subcommand's body; runs after parsing succeeds.
using Action = std::function<void()>;

void register_prep(CLI::App& app, Action& action);
void register_label(CLI::App& app, Action& action);
void register_train(CLI::App& app, Action& action);
void register_adapt(CLI::App& app, Action& action);
void register_eval(CLI::App& app, Action& action);
void register_enhance(CLI::App& app, Action& action);
void register_plot(CLI::App& app, Action& action);

}  // namespace mosanet::cli
