#include <cmath>
#include <map>
#include <memory>
#include <optional>

#include "mosanet/assessor/checkpoint.hpp"
#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/parallel.hpp"
#include "mosanet/corpus/wav.hpp"
#include "mosanet/labels/envelope.hpp"
#include "mosanet/labels/metrics.hpp"
#include "mosanet/labels/pesq.hpp"
#include "run.hpp"

namespace mosanet::cli {

namespace {

struct EnhanceCmdOptions {
  CommonOptions common;
  std::string manifest;
  std::string assessor;
  std::string se;
};

struct UttMetrics {
  std::optional<double> pesq, stoi, csig, ssnri;
};

void write_spectrogram_csv(const std::filesystem::path& path, const Matrix& lps) {
  std::vector<std::string> header{"frame"};
  for (Eigen::Index b = 0; b < lps.cols(); ++b) header.push_back("bin" + std::to_string(b));
  CsvWriter csv(header);
  for (Eigen::Index t = 0; t < lps.rows(); ++t) {
    std::vector<std::string> row{std::to_string(t)};
    for (Eigen::Index b = 0; b < lps.cols(); ++b) row.push_back(format_double(lps(t, b)));
    csv.add_row(std::move(row));
  }
  csv.write(path);
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void run_enhance(const EnhanceCmdOptions& o) {
  Run run = open_run("enhance", o.common);
  const auto manifest = corpus::read_manifest(o.manifest);
  const bool side_outputs = run.cfg.get_bool("enhance.side_outputs", false);

  std::unique_ptr<assessor::LoadedAssessor> judge;
  if (!o.assessor.empty()) judge = std::make_unique<assessor::LoadedAssessor>(assessor::load_checkpoint(o.assessor));
  const assessor::Assessor* frozen = judge ? judge->model.get() : nullptr;

  std::unique_ptr<enhancer::Enhancer> se;
  if (!o.se.empty()) {
    auto loaded = enhancer::load_se_checkpoint(o.se);
    enhancer::check_pairing(loaded, frozen);
    se = std::move(loaded.model);
    note(run, "loaded enhancer " + o.se);
  } else {
    auto ec = enhancer::enhancer_config_from(run.cfg);
    if (ec.use_latent) {
      if (!frozen) throw UsageError("enhancer.use_latent needs --assessor (or set enhancer.use_latent=false)");
      ec.latent_dim = frozen->latent_dim();
    }
    const auto sc = se_train_config_from(run.cfg, run.seed);
    std::vector<enhancer::SePair> pairs;
    for (const auto& e : manifest) {
      if (e.split != corpus::Split::Train || e.kind != corpus::Kind::Noisy) continue;
      pairs.push_back({e.utt_id, corpus::load_waveform(e.degraded_path), corpus::load_waveform(e.clean_path)});
    }
    if (pairs.empty()) throw UsageError("manifest has no noisy train entries to fit the enhancer");
    const auto examples = enhancer::prepare_examples(pairs, ec, frozen, run.jobs);
    se = std::make_unique<enhancer::Enhancer>(ec, run.seed);
    note(run, std::to_string(examples.size()) + " training pairs, " + std::to_string(se->parameter_count()) +
                  " parameters");
    const auto result = enhancer::train_se(*se, ec.use_latent ? frozen : nullptr, examples, sc,
                                           [&](const enhancer::SeEpoch& r) {
                                             note(run, "epoch " + std::to_string(r.epoch) + " lps mse " +
                                                           format_double(r.loss));
                                           });
    enhancer::SeCheckpointMeta meta;
    meta.epoch = sc.epochs;
    meta.optimizer = sc.optimizer;
    meta.learning_rate = sc.learning_rate;
    meta.history = result.history;
    if (ec.use_latent) {
      meta.assessor_config_hash = assessor::hex64(assessor::config_hash(frozen->config()));
      meta.assessor_parameter_hash = assessor::hex64(frozen->state_hash());
    }
    enhancer::save_se_checkpoint(run.dir / "se.bin", *se, meta);
    CsvWriter hist({"epoch", "lps_mse"});
    for (const auto& r : result.history) hist.add_row({std::to_string(r.epoch), format_double(r.loss)});
    hist.write(run.dir / "se_history.csv");
  }
  const assessor::Assessor* latent_source = se->config().use_latent ? frozen : nullptr;

  std::vector<const corpus::ManifestEntry*> targets;
  for (const auto& e : manifest) {
    if (e.split != corpus::Split::Train && e.kind == corpus::Kind::Noisy) targets.push_back(&e);
  }
  if (targets.empty()) throw UsageError("manifest has no noisy test entries to enhance");

  std::unique_ptr<labels::PesqScorer> scorer;
  if (auto cmd = labels::PesqScorer::resolve_command(run.cfg.get_string("labels.pesq_command", ""))) {
    scorer = std::make_unique<labels::PesqScorer>(*cmd, run.cfg.get_string("labels.pesq_cache", ""));
  } else {
    note(run, "warning: no PESQ adapter; PESQ and CSIG columns stay empty");
  }

  std::filesystem::create_directories(run.dir / "enhanced");
  if (side_outputs) std::filesystem::create_directories(run.dir / "side");
  std::vector<UttMetrics> metrics(targets.size());
  parallel_for(targets.size(), run.jobs, [&](std::size_t i) {
    const auto& e = *targets[i];
    const Waveform noisy = corpus::load_waveform(e.degraded_path);
    const Waveform clean = corpus::load_waveform(e.clean_path);
    const auto out_path = run.dir / "enhanced" / (e.utt_id + ".wav");
    corpus::save_waveform(out_path, enhancer::enhance_utterance(*se, latent_source, noisy, e.utt_id));
    // Score what was written, after 16-bit quantization.
    const Waveform enhanced = corpus::load_waveform(out_path);
    UttMetrics& m = metrics[i];
    try {
      m.stoi = labels::stoi(clean, enhanced);
    } catch (const UsageError&) {
    }
    m.ssnri = labels::ssnri(clean, noisy, enhanced);
    if (scorer) {
      m.pesq = scorer->score(e.clean_path, out_path);
      const auto l = labels::llr(clean, enhanced);
      const auto w = labels::wss(clean, enhanced);
      if (l.frames > 0 && w.frames > 0) m.csig = labels::csig(l.value, *m.pesq, w.value);
    }
    if (side_outputs) {
      labels::write_envelope_csv(run.dir / "side" / (e.utt_id + ".clean_env.csv"), labels::envelope_band2(clean));
      labels::write_envelope_csv(run.dir / "side" / (e.utt_id + ".noisy_env.csv"), labels::envelope_band2(noisy));
      labels::write_envelope_csv(run.dir / "side" / (e.utt_id + ".enhanced_env.csv"),
                                 labels::envelope_band2(enhanced));
      const auto lps = features::log_power_spec(features::stft(enhanced, se->config().stft)).values;
      write_spectrogram_csv(run.dir / "side" / (e.utt_id + ".enhanced_lps.csv"), lps);
    }
  });

  CsvWriter per_utt({"utt_id", "split", "noise_type", "snr_db", "PESQ", "STOI", "CSIG", "SSNRI"});
  // (split, snr) -> sums; snr key "all" aggregates a split.
  struct Acc {
    double sum[4] = {0, 0, 0, 0};
    int n[4] = {0, 0, 0, 0};
    int utts = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> table;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& e = *targets[i];
    const auto& m = metrics[i];
    const std::string split = corpus::to_string(e.split);
    const std::string snr = e.snr_db ? format_double(*e.snr_db) : "";
    per_utt.add_row({e.utt_id, split, e.noise_type.value_or(""), snr, cell(m.pesq), cell(m.stoi), cell(m.csig),
                     cell(m.ssnri)});
    const std::optional<double> vals[4] = {m.pesq, m.stoi, m.csig, m.ssnri};
    for (const std::string& key : {snr, std::string("all")}) {
      Acc& a = table[{split, key}];
      ++a.utts;
      for (int k = 0; k < 4; ++k) {
        if (vals[k]) {
          a.sum[k] += *vals[k];
          ++a.n[k];
        }
      }
    }
  }
  per_utt.write(run.dir / "enhance_utterances.csv");
  CsvWriter summary({"split", "snr_db", "n", "PESQ", "STOI", "CSIG", "SSNRI"});
  for (const auto& [key, a] : table) {
    std::vector<std::string> row{key.first, key.second, std::to_string(a.utts)};
    for (int k = 0; k < 4; ++k) row.push_back(a.n[k] ? format_double(a.sum[k] / a.n[k]) : "");
    summary.add_row(std::move(row));
  }
  summary.write(run.dir / "results.csv");
  note(run, "enhanced " + std::to_string(targets.size()) + " utterances");
}

}  // namespace

void register_enhance(CLI::App& app, Action& action) {
  auto o = std::make_shared<EnhanceCmdOptions>();
  auto* cmd = app.add_subcommand("enhance", "Train (or load) the enhancer and enhance the noisy test entries");
  add_common_options(cmd, o->common);
  cmd->add_option("-m,--manifest", o->manifest, "Manifest with noisy entries and their clean references")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--assessor", o->assessor, "Frozen assessor checkpoint supplying latents")->check(CLI::ExistingFile);
  cmd->add_option("--se", o->se, "Enhancer checkpoint; skips training")->check(CLI::ExistingFile);
  cmd->callback([&action, o] { action = [o] { run_enhance(*o); }; });
}

}  // namespace mosanet::cli
