#include <map>
#include <memory>

#include "mosanet/assessor/checkpoint.hpp"
#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/evalstats/stats.hpp"
#include "run.hpp"

namespace mosanet::cli {

namespace {

struct EvalCmdOptions {
  CommonOptions common;
  std::vector<std::string> models;  // PATH or NAME=PATH
  std::string manifest;
};

void run_eval(const EvalCmdOptions& o) {
  Run run = open_run("eval", o.common);
  const int group_size = static_cast<int>(run.cfg.get_int("eval.group_size", 5));
  if (group_size < 1) throw UsageError("eval.group_size must be positive");
  const auto manifest = corpus::read_manifest(o.manifest);

  std::vector<training::EvalRow> rows;
  std::vector<std::pair<std::string, training::EvalReport>> reports;
  std::set<std::string> names;
  for (const auto& spec : o.models) {
    const auto eq = spec.find('=');
    std::string name = eq == std::string::npos ? std::filesystem::path(spec).stem().string() : spec.substr(0, eq);
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    if (!names.insert(name).second) throw UsageError("two models are named '" + name + "'; use NAME=PATH");
    const auto loaded = assessor::load_checkpoint(path);
    auto report = training::evaluate_model(*loaded.model, manifest, name, run.jobs);
    for (const auto& w : report.warnings) note(run, "warning: " + name + ": " + w);
    rows.insert(rows.end(), report.rows.begin(), report.rows.end());
    for (const auto& p : report.predictions) {
      const std::string stem = name + "_" + p.split + "_" + p.task;
      if (p.ids.size() >= 2) {
        evalstats::scatter_emit(p.predicted, p.truth, p.ids, run.dir / "scatter" / (stem + ".svg"), "ground truth",
                                "predicted");
      }
    }
    reports.emplace_back(name, std::move(report));
  }
  training::write_results_csv(run.dir / "results.csv", rows);

  // Paired comparisons of per-utterance squared error against the first model.
  CsvWriter ttests({"comparison", "split", "task", "metric", "t", "p", "n_pairs", "significant_0.05"});
  for (std::size_t m = 1; m < reports.size(); ++m) {
    for (const auto& pa : reports.front().second.predictions) {
      for (const auto& pb : reports[m].second.predictions) {
        if (pa.split != pb.split || pa.task != pb.task) continue;
        std::map<std::string, double> err_b;
        for (std::size_t i = 0; i < pb.ids.size(); ++i) {
          const double d = pb.predicted[i] - pb.truth[i];
          err_b[pb.ids[i]] = d * d;
        }
        std::vector<double> a, b;
        for (std::size_t i = 0; i < pa.ids.size(); ++i) {
          auto it = err_b.find(pa.ids[i]);
          if (it == err_b.end()) continue;
          const double d = pa.predicted[i] - pa.truth[i];
          a.push_back(d * d);
          b.push_back(it->second);
        }
        const std::size_t usable = a.size() / static_cast<std::size_t>(group_size) * static_cast<std::size_t>(group_size);
        if (usable < 2 * static_cast<std::size_t>(group_size)) {
          note(run, "warning: too few matched utterances for a t-test on " + pa.split + "/" + pa.task);
          continue;
        }
        a.resize(usable);
        b.resize(usable);
        const auto r = evalstats::grouped_ttest(a, b, group_size, run.seed);
        ttests.add_row({reports.front().first + "_vs_" + reports[m].first, pa.split, pa.task, "squared_error",
                        format_double(r.t), format_double(r.p), std::to_string(r.n_pairs), r.p < 0.05 ? "yes" : "no"});
      }
    }
  }
  if (reports.size() > 1) ttests.write(run.dir / "ttest.csv");
  note(run, std::to_string(rows.size()) + " result rows");
}

}  // namespace

void register_eval(CLI::App& app, Action& action) {
  auto o = std::make_shared<EvalCmdOptions>();
  auto* cmd = app.add_subcommand("eval", "Score checkpoints on a manifest: LCC, SRCC, MSE, scatter plots, t-tests");
  add_common_options(cmd, o->common);
  cmd->add_option("--model", o->models, "Checkpoint as PATH or NAME=PATH (repeatable)")->required();
  cmd->add_option("-m,--manifest", o->manifest, "Labeled manifest")->required()->check(CLI::ExistingFile);
  cmd->callback([&action, o] { action = [o] { run_eval(*o); }; });
}

}  // namespace mosanet::cli
