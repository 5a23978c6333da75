#include <memory>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/labels/gen_labels.hpp"
#include "run.hpp"

namespace mosanet::cli {

namespace {

struct LabelCmdOptions {
  CommonOptions common;
  std::string manifest;
};

void run_label(const LabelCmdOptions& o) {
  Run run = open_run("label", o.common);
  const auto& cfg = run.cfg;
  labels::LabelOptions opts;
  const auto metrics = cfg.get_string_list("labels.metrics", {"pesq", "stoi", "sdi"});
  opts.metrics = std::set<std::string>(metrics.begin(), metrics.end());
  for (const auto& m : opts.metrics) {
    if (m != "pesq" && m != "stoi" && m != "sdi") throw UsageError("labels.metrics: unknown metric '" + m + "'");
  }
  opts.jobs = run.jobs;
  opts.overwrite = cfg.get_bool("labels.overwrite", false);

  std::unique_ptr<labels::PesqScorer> scorer;
  if (opts.metrics.count("pesq")) {
    if (auto cmd = labels::PesqScorer::resolve_command(cfg.get_string("labels.pesq_command", ""))) {
      scorer = std::make_unique<labels::PesqScorer>(*cmd, cfg.get_string("labels.pesq_cache", ""));
      opts.pesq = scorer.get();
    } else {
      note(run, "warning: no PESQ adapter (set MOSANET_PESQ_CMD or labels.pesq_command); pesq stays unlabeled");
    }
  }

  // Inputs are never edited in place; the labeled copy lives in the run.
  const auto report = labels::gen_labels(corpus::read_manifest(o.manifest), opts);
  corpus::write_manifest(run.dir / "manifest.jsonl", report.manifest);
  CsvWriter failures({"utt_id", "metric", "message"});
  for (const auto& f : report.failures) failures.add_row({f.utt_id, f.metric, f.message});
  failures.write(run.dir / "label_failures.csv");
  note(run, std::to_string(report.manifest.size()) + " entries, " + std::to_string(report.failures.size()) +
                " metric failures");
}

}  // namespace

void register_label(CLI::App& app, Action& action) {
  auto o = std::make_shared<LabelCmdOptions>();
  auto* cmd = app.add_subcommand("label", "Compute objective labels (PESQ, STOI, SDI) for a manifest");
  add_common_options(cmd, o->common);
  cmd->add_option("-m,--manifest", o->manifest, "Input manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  cmd->callback([&action, o] { action = [o] { run_label(*o); }; });
}

}  // namespace mosanet::cli
