#include "run.hpp"

#include <chrono>
#include <ctime>
#include <iostream>
#include <nlohmann/json.hpp>

#include "mosanet/assessor/config.hpp"
#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/parallel.hpp"

namespace mosanet::cli {

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_file, "TOML-like config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override a config key: section.key=value (repeatable)");
  cmd->add_option("-o,--output-dir", opts.output_dir, "Parent directory of run directories")->capture_default_str();
  cmd->add_option("--run-id", opts.run_id, "Run directory name (default: <command>-<UTC time>)");
  cmd->add_option("--seed", opts.seed, "Seed; overrides run.seed");
  cmd->add_option("-j,--jobs", opts.jobs, "Worker threads for per-utterance work (0 = logical cores)")
      ->capture_default_str();
}

std::set<std::string> declared_keys() {
  std::set<std::string> keys{
      "run.seed",
      "corpus.noise_types", "corpus.unseen_noises", "corpus.snrs_db", "corpus.unseen_snrs_db",
      "corpus.degraded_per_clean", "corpus.synthetic_duration_s", "corpus.test_fraction",
      "labels.metrics", "labels.pesq_command", "labels.pesq_cache", "labels.overwrite",
      "train.optimizer", "train.learning_rate", "train.batch_size", "train.epochs", "train.patience",
      "train.heldout_fraction", "train.clip_norm", "train.gamma_q", "train.gamma_i", "train.gamma_d",
      "train.alpha_q", "train.alpha_i", "train.alpha_d",
      "adapt.learning_rate", "adapt.warm_start", "adapt.freeze_ssl_projection", "adapt.quality_target",
      "adapt.intelligibility_target",
      "se_train.optimizer", "se_train.learning_rate", "se_train.epochs", "se_train.batch_size", "se_train.clip_norm",
      "eval.group_size", "enhance.side_outputs"};
  for (const auto& k : assessor::assessor_config_keys()) keys.insert(k);
  for (const auto& k : enhancer::enhancer_config_keys()) keys.insert(k);
  return keys;
}

namespace {

std::string utc_stamp(const char* fmt) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, fmt, &tm);
  return buf;
}

}  // namespace

Run open_run(const std::string& command, const CommonOptions& opts) {
  Run run;
  run.command = command;
  if (!opts.config_file.empty()) run.cfg = config::Config::load(opts.config_file);
  for (const auto& o : opts.overrides) run.cfg.apply_override(o);
  if (opts.seed >= 0) run.cfg.apply_override("run.seed=" + std::to_string(opts.seed));
  run.cfg.check_known(declared_keys());
  const std::int64_t seed = run.cfg.get_int("run.seed", 0);
  if (seed < 0) throw UsageError("run.seed must be non-negative");
  run.seed = static_cast<std::uint64_t>(seed);
  if (opts.jobs < 0) throw UsageError("--jobs must be non-negative");
  run.jobs = resolve_jobs(opts.jobs);

  std::string id = opts.run_id;
  if (id.empty()) {
    id = command + "-" + utc_stamp("%Y%m%d-%H%M%S");
    const std::string base = id;
    for (int k = 2; std::filesystem::exists(std::filesystem::path(opts.output_dir) / id); ++k) {
      id = base + "-" + std::to_string(k);
    }
  }
  if (id.find('/') != std::string::npos || id == "." || id == "..") throw UsageError("invalid run id '" + id + "'");
  run.dir = std::filesystem::path(opts.output_dir) / id;
  std::filesystem::create_directories(run.dir);

  config::Config effective = run.cfg;
  effective.set("run.seed", config::Value{static_cast<double>(run.seed)});
  write_file_atomic(run.dir / "config.toml", effective.to_toml());
  nlohmann::json meta{{"command", command},
                      {"run_id", id},
                      {"seed", run.seed},
                      {"jobs", run.jobs},
                      {"version", MOSANET_VERSION},
                      {"started_utc", utc_stamp("%Y-%m-%dT%H:%M:%SZ")}};
  write_file_atomic(run.dir / "run.json", meta.dump(2) + "\n");
  note(run, "run directory " + run.dir.string());
  return run;
}

void note(const Run& run, const std::string& msg) { std::cerr << "mosanet " << run.command << ": " << msg << "\n"; }

training::TrainConfig train_config_from(const config::Config& cfg, std::uint64_t seed) {
  training::TrainConfig c;
  c.optimizer = cfg.get_string("train.optimizer", c.optimizer);
  c.learning_rate = cfg.get_double("train.learning_rate", c.learning_rate);
  c.batch_size = static_cast<int>(cfg.get_int("train.batch_size", c.batch_size));
  c.epochs = static_cast<int>(cfg.get_int("train.epochs", c.epochs));
  c.early_stop_patience = static_cast<int>(cfg.get_int("train.patience", c.early_stop_patience));
  c.heldout_fraction = cfg.get_double("train.heldout_fraction", c.heldout_fraction);
  c.clip_norm = cfg.get_double("train.clip_norm", c.clip_norm);
  c.seed = seed;
  training::validate(c);
  return c;
}

training::LossWeights loss_weights_from(const config::Config& cfg) {
  training::LossWeights w;
  w.gamma_q = cfg.get_double("train.gamma_q", w.gamma_q);
  w.gamma_i = cfg.get_double("train.gamma_i", w.gamma_i);
  w.gamma_d = cfg.get_double("train.gamma_d", w.gamma_d);
  w.alpha_q = cfg.get_double("train.alpha_q", w.alpha_q);
  w.alpha_i = cfg.get_double("train.alpha_i", w.alpha_i);
  w.alpha_d = cfg.get_double("train.alpha_d", w.alpha_d);
  training::validate(w);
  return w;
}

enhancer::SeTrainConfig se_train_config_from(const config::Config& cfg, std::uint64_t seed) {
  enhancer::SeTrainConfig c;
  c.optimizer = cfg.get_string("se_train.optimizer", c.optimizer);
  c.learning_rate = cfg.get_double("se_train.learning_rate", c.learning_rate);
  c.epochs = static_cast<int>(cfg.get_int("se_train.epochs", c.epochs));
  c.batch_size = static_cast<int>(cfg.get_int("se_train.batch_size", c.batch_size));
  c.clip_norm = cfg.get_double("se_train.clip_norm", c.clip_norm);
  c.seed = seed;
  enhancer::validate(c);
  return c;
}

}  // namespace mosanet::cli
