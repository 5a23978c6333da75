#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>

#include "mosanet/assessor/checkpoint.hpp"
#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/rng.hpp"
#include "mosanet/corpus/manifest.hpp"
#include "mosanet/corpus/mixing.hpp"
#include "mosanet/corpus/synth.hpp"
#include "mosanet/corpus/wav.hpp"
#include "run.hpp"

namespace mosanet::cli {

namespace {

struct PrepOptions {
  CommonOptions common;
  std::string clean_list;
  int synthetic = 0;
  std::vector<std::string> noises;  // TYPE=PATH
  std::string se_checkpoint;
  std::string assessor_checkpoint;
};

// "path" or "path train|test" per line; '#' starts a comment.
std::vector<corpus::CleanUtterance> read_clean_list(const std::filesystem::path& list, double test_fraction,
                                                    std::uint64_t seed) {
  std::ifstream in(list);
  if (!in) throw UsageError("cannot open clean list " + list.string());
  std::vector<corpus::CleanUtterance> out;
  std::vector<bool> has_split;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream ss(line);
    std::string path, split;
    if (!(ss >> path)) continue;
    ss >> split;
    corpus::CleanUtterance u;
    u.path = std::filesystem::path(path);
    if (u.path.is_relative()) u.path = list.parent_path() / u.path;
    u.utt_id = u.path.stem().string();
    if (split == "test" || split == "test_seen") {
      u.split = corpus::Split::TestSeen;
    } else if (!split.empty() && split != "train") {
      throw UsageError("clean list: unknown split '" + split + "' for " + path);
    }
    has_split.push_back(!split.empty());
    out.push_back(u);
  }
  if (out.empty()) throw UsageError("clean list " + list.string() + " is empty");
  std::set<std::string> ids;
  for (const auto& u : out) {
    if (!ids.insert(u.utt_id).second) throw UsageError("clean list: duplicate utterance id '" + u.utt_id + "'");
  }
  if (std::none_of(has_split.begin(), has_split.end(), [](bool b) { return b; })) {
    std::vector<std::size_t> idx(out.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(derive_seed(seed, "prep.test_split"));
    rng.shuffle(idx);
    const auto n_test = static_cast<std::size_t>(test_fraction * static_cast<double>(out.size()) + 0.5);
    for (std::size_t k = 0; k < n_test; ++k) out[idx[k]].split = corpus::Split::TestSeen;
  }
  return out;
}

void run_prep(const PrepOptions& o) {
  if (o.clean_list.empty() == (o.synthetic == 0)) throw UsageError("give exactly one of --clean-list or --synthetic");
  if (o.synthetic < 0) throw UsageError("--synthetic must be positive");
  Run run = open_run("prep", o.common);
  const auto& cfg = run.cfg;
  const auto seen = cfg.get_string_list("corpus.noise_types", {"white", "hum"});
  const auto unseen = cfg.get_string_list("corpus.unseen_noises", {"pink", "babble"});
  const double test_fraction = cfg.get_double("corpus.test_fraction", 0.2);
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw UsageError("corpus.test_fraction must be in [0, 1)");
  const double synth_duration = cfg.get_double("corpus.synthetic_duration_s", 2.0);

  std::vector<corpus::CleanUtterance> clean;
  if (o.synthetic > 0) {
    std::filesystem::create_directories(run.dir / "clean");
    std::vector<std::string> lines;
    for (int i = 0; i < o.synthetic; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "synth_%04d", i);
      const auto path = run.dir / "clean" / (std::string(name) + ".wav");
      corpus::save_waveform(path, corpus::synth_speech(derive_seed(run.seed, name), synth_duration));
      lines.push_back(path.filename().string());
    }
    std::string text;
    for (const auto& l : lines) text += "clean/" + l + "\n";
    write_file_atomic(run.dir / "clean_list.txt", text);
    clean = read_clean_list(run.dir / "clean_list.txt", test_fraction, run.seed);
  } else {
    clean = read_clean_list(o.clean_list, test_fraction, run.seed);
  }

  corpus::BuildOptions opts;
  opts.output_dir = run.dir;
  opts.jobs = run.jobs;
  double longest = 0.0;
  for (const auto& u : clean) longest = std::max(longest, corpus::load_waveform(u.path).duration_s());
  for (const auto& spec : o.noises) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--noise expects TYPE=PATH, got '" + spec + "'");
    opts.noise_files[spec.substr(0, eq)] = spec.substr(eq + 1);
  }
  std::vector<std::string> all = seen;
  all.insert(all.end(), unseen.begin(), unseen.end());
  const auto kinds = corpus::synth_noise_kinds();
  for (const auto& name : all) {
    if (opts.noise_files.count(name)) continue;
    if (std::find(kinds.begin(), kinds.end(), name) == kinds.end()) {
      throw UsageError("noise type '" + name + "' has no --noise file and is not a synthetic kind");
    }
    const auto path = run.dir / "noise" / (name + ".wav");
    corpus::save_waveform(path, corpus::synth_noise(name, derive_seed(run.seed, "noise." + name), longest + 5.0));
    opts.noise_files[name] = path;
    note(run, "synthesized noise '" + name + "'");
  }

  std::unique_ptr<enhancer::LoadedEnhancer> se;
  std::unique_ptr<assessor::LoadedAssessor> judge;
  if (!o.se_checkpoint.empty()) {
    se = std::make_unique<enhancer::LoadedEnhancer>(enhancer::load_se_checkpoint(o.se_checkpoint));
    if (!o.assessor_checkpoint.empty()) {
      judge = std::make_unique<assessor::LoadedAssessor>(assessor::load_checkpoint(o.assessor_checkpoint));
    }
    enhancer::check_pairing(*se, judge ? judge->model.get() : nullptr);
    opts.enhancer = [&](const Waveform& noisy) {
      return enhancer::enhance_utterance(*se->model, judge ? judge->model.get() : nullptr, noisy);
    };
  }

  std::vector<corpus::CleanUtterance> train_list, test_list;
  for (const auto& u : clean) (u.split == corpus::Split::Train ? train_list : test_list).push_back(u);
  corpus::MixSpec train_spec;
  train_spec.noise_types = seen;
  std::vector<double> grid = corpus::paper_snr_grid_db();
  train_spec.snr_grid_db = cfg.get_double_list("corpus.snrs_db", grid);
  train_spec.seed = run.seed;
  train_spec.degraded_per_clean = static_cast<int>(cfg.get_int("corpus.degraded_per_clean", 1));

  corpus::Manifest all_entries;
  if (!train_list.empty()) all_entries = corpus::build_manifest(train_list, train_spec, opts);
  if (!test_list.empty()) {
    corpus::MixSpec test_spec = train_spec;
    test_spec.noise_types = all;
    test_spec.snr_grid_db = cfg.get_double_list("corpus.unseen_snrs_db", corpus::paper_unseen_snrs_db());
    test_spec.seed = derive_seed(run.seed, "prep.test");
    const auto t = corpus::build_manifest(test_list, test_spec, opts);
    all_entries.insert(all_entries.end(), t.begin(), t.end());
  }
  const auto split = corpus::split_seen_unseen(all_entries, unseen);
  corpus::Manifest merged = split.train;
  merged.insert(merged.end(), split.test_seen.begin(), split.test_seen.end());
  merged.insert(merged.end(), split.test_unseen.begin(), split.test_unseen.end());
  corpus::write_manifest(run.dir / "manifest.jsonl", merged);
  corpus::write_manifest(run.dir / "train.jsonl", split.train);
  corpus::write_manifest(run.dir / "test_seen.jsonl", split.test_seen);
  corpus::write_manifest(run.dir / "test_unseen.jsonl", split.test_unseen);
  note(run, std::to_string(merged.size()) + " entries (" + std::to_string(split.train.size()) + " train, " +
                std::to_string(split.test_seen.size()) + " test_seen, " + std::to_string(split.test_unseen.size()) +
                " test_unseen)");
}

}  // namespace

void register_prep(CLI::App& app, Action& action) {
  auto o = std::make_shared<PrepOptions>();
  auto* cmd = app.add_subcommand("prep", "Mix clean speech with noise into a manifest");
  add_common_options(cmd, o->common);
  cmd->add_option("--clean-list", o->clean_list, "Text file: one clean WAV per line, optional 'train'/'test' column")
      ->check(CLI::ExistingFile);
  cmd->add_option("--synthetic", o->synthetic, "Generate this many synthetic clean utterances instead");
  cmd->add_option("--noise", o->noises, "Noise recording as TYPE=PATH (repeatable)");
  cmd->add_option("--enhancer", o->se_checkpoint, "Enhancer checkpoint; adds enhanced entries")
      ->check(CLI::ExistingFile);
  cmd->add_option("--assessor", o->assessor_checkpoint, "Assessor checkpoint the enhancer was trained with")
      ->check(CLI::ExistingFile);
  cmd->callback([&action, o] { action = [o] { run_prep(*o); }; });
}

}  // namespace mosanet::cli
