#include <memory>

#include "mosanet/assessor/checkpoint.hpp"
#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "run.hpp"

namespace mosanet::cli {

namespace {

struct TrainCmdOptions {
  CommonOptions common;
  std::string manifest;
  std::string pretrained;  // adapt only
};

corpus::Manifest train_split(const corpus::Manifest& m) {
  corpus::Manifest out;
  for (const auto& e : m) {
    if (e.split == corpus::Split::Train) out.push_back(e);
  }
  if (out.empty()) throw UsageError("manifest has no train entries");
  return out;
}

void write_predictions(const std::filesystem::path& path, const training::EvalReport& report) {
  CsvWriter csv({"split", "task", "utt_id", "predicted", "truth"});
  for (const auto& p : report.predictions) {
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
      csv.add_row({p.split, p.task, p.ids[i], format_double(p.predicted[i]), format_double(p.truth[i])});
    }
  }
  csv.write(path);
}

void finish(const Run& run, const assessor::Assessor& model, const training::TrainResult& result,
            const corpus::Manifest& manifest, double lr, const std::string& optimizer) {
  assessor::CheckpointMeta meta;
  meta.epoch = result.best_epoch;
  meta.optimizer = optimizer;
  meta.learning_rate = lr;
  meta.history = result.history;
  assessor::save_checkpoint(run.dir / "model.bin", model, meta);
  training::write_history_csv(run.dir / "history.csv", result.history, model.config().tasks);

  const auto report = training::evaluate_model(model, manifest, run.command, run.jobs);
  for (const auto& w : report.warnings) note(run, "warning: " + w);
  training::write_results_csv(run.dir / "results.csv", report.rows);
  write_predictions(run.dir / "predictions.csv", report);
  note(run, "best epoch " + std::to_string(result.best_epoch) + " of " + std::to_string(result.epochs_run) +
                (result.stopped_early ? " (early stop)" : ""));
}

training::EpochCallback progress(const Run& run) {
  return [&run](const assessor::EpochRecord& r) {
    note(run, "epoch " + std::to_string(r.epoch) + " loss " + format_double(r.total_loss) + " heldout " +
                  format_double(r.heldout_loss));
  };
}

void run_train(const TrainCmdOptions& o) {
  Run run = open_run("train", o.common);
  const auto cfg = assessor::assessor_config_from(run.cfg);
  const auto tc = train_config_from(run.cfg, run.seed);
  const auto weights = loss_weights_from(run.cfg);
  const auto manifest = corpus::read_manifest(o.manifest);

  assessor::Assessor model(cfg, run.seed);
  const auto data = training::prepare_dataset(train_split(manifest), model, run.jobs);
  std::vector<const features::FeatureInputs*> inputs;
  for (const auto& d : data) inputs.push_back(&d.inputs);
  model.fit_normalization(inputs);
  note(run, std::to_string(data.size()) + " training utterances, " + std::to_string(model.parameter_count()) +
                " parameters");
  const auto result = training::train(model, data, tc, weights, progress(run));
  finish(run, model, result, manifest, tc.learning_rate, tc.optimizer);
}

void run_adapt(const TrainCmdOptions& o) {
  Run run = open_run("adapt", o.common);
  const auto pretrained = assessor::load_checkpoint(o.pretrained);
  training::AdaptConfig ac;
  ac.train = train_config_from(run.cfg, run.seed);
  ac.learning_rate_set = run.cfg.contains("adapt.learning_rate");
  if (ac.learning_rate_set) ac.train.learning_rate = run.cfg.get_double("adapt.learning_rate", 0.0);
  ac.warm_start = run.cfg.get_bool("adapt.warm_start", ac.warm_start);
  ac.freeze_ssl_projection = run.cfg.get_bool("adapt.freeze_ssl_projection", ac.freeze_ssl_projection);
  ac.quality_target = run.cfg.get_string("adapt.quality_target", ac.quality_target);
  ac.intelligibility_target = run.cfg.get_string("adapt.intelligibility_target", ac.intelligibility_target);
  const auto weights = loss_weights_from(run.cfg);
  const auto manifest = corpus::read_manifest(o.manifest);

  auto result = training::adapt(pretrained, train_split(manifest), ac, weights, run.jobs, progress(run));
  note(run, "learning rate " + format_double(result.learning_rate));
  finish(run, *result.model, result.train, manifest, result.learning_rate, ac.train.optimizer);
}

}  // namespace

void register_train(CLI::App& app, Action& action) {
  auto o = std::make_shared<TrainCmdOptions>();
  auto* cmd = app.add_subcommand("train", "Train an assessment model on a labeled manifest");
  add_common_options(cmd, o->common);
  cmd->add_option("-m,--manifest", o->manifest, "Labeled manifest")->required()->check(CLI::ExistingFile);
  cmd->callback([&action, o] { action = [o] { run_train(*o); }; });
}

void register_adapt(CLI::App& app, Action& action) {
  auto o = std::make_shared<TrainCmdOptions>();
  auto* cmd = app.add_subcommand("adapt", "Fine-tune a trained model on subjective MOS/intelligibility labels");
  add_common_options(cmd, o->common);
  cmd->add_option("-p,--pretrained", o->pretrained, "Checkpoint from `train`")->required()->check(CLI::ExistingFile);
  cmd->add_option("-m,--manifest", o->manifest, "Manifest with mos and intel scores")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->callback([&action, o] { action = [o] { run_adapt(*o); }; });
}

}  // namespace mosanet::cli
