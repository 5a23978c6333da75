#include "mosanet/corpus/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "mosanet/common/error.hpp"
#include "mosanet/common/parallel.hpp"
#include "mosanet/common/rng.hpp"
#include "mosanet/corpus/mixing.hpp"
#include "mosanet/corpus/wav.hpp"

namespace mosanet::corpus {

using nlohmann::json;

std::string to_string(Kind k) {
  switch (k) {
    case Kind::Clean: return "clean";
    case Kind::Noisy: return "noisy";
    case Kind::Enhanced: return "enhanced";
  }
  return "?";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::TestSeen: return "test_seen";
    case Split::TestUnseen: return "test_unseen";
  }
  return "?";
}

Kind parse_kind(const std::string& s) {
  if (s == "clean") return Kind::Clean;
  if (s == "noisy") return Kind::Noisy;
  if (s == "enhanced") return Kind::Enhanced;
  throw UsageError("unknown entry kind '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test_seen") return Split::TestSeen;
  if (s == "test_unseen") return Split::TestUnseen;
  throw UsageError("unknown split '" + s + "'");
}

namespace {
const char* const kScoreKeys[] = {"pesq", "stoi", "sdi", "mos", "intel"};
}

std::optional<double> Scores::get(const std::string& key) const {
  if (key == "pesq") return pesq;
  if (key == "stoi") return stoi;
  if (key == "sdi") return sdi;
  if (key == "mos") return mos;
  if (key == "intel") return intel;
  throw UsageError("unknown score key '" + key + "'");
}

void Scores::set(const std::string& key, double value) {
  if (key == "pesq") pesq = value;
  else if (key == "stoi") stoi = value;
  else if (key == "sdi") sdi = value;
  else if (key == "mos") mos = value;
  else if (key == "intel") intel = value;
  else throw UsageError("unknown score key '" + key + "'");
}

void validate(const ManifestEntry& e) {
  const std::string who = "entry '" + e.utt_id + "': ";
  if (e.utt_id.empty()) throw UsageError("manifest entry without utt_id");
  if (e.kind == Kind::Clean) {
    if (e.degraded_path != e.clean_path) throw UsageError(who + "clean entry must have degraded_path == clean_path");
    if (e.snr_db) throw UsageError(who + "clean entry must not carry snr_db");
  }
  if (e.kind == Kind::Noisy && (!e.noise_type || !e.snr_db)) {
    throw UsageError(who + "noisy entry requires noise_type and snr_db");
  }
  if (e.snr_db && !std::isfinite(*e.snr_db)) throw UsageError(who + "non-finite snr_db");
  auto in = [&](const std::optional<double>& v, double lo, double hi, const char* name) {
    if (v && !(*v >= lo && *v <= hi)) {
      throw UsageError(who + name + " score " + std::to_string(*v) + " out of range");
    }
  };
  in(e.scores.stoi, 0.0, 1.0, "stoi");
  in(e.scores.mos, 1.0, 5.0, "mos");
  in(e.scores.intel, 0.0, 1.0, "intel");
  in(e.scores.sdi, 0.0, INFINITY, "sdi");
  if (e.scores.pesq && !std::isfinite(*e.scores.pesq)) throw UsageError(who + "non-finite pesq");
}

std::string to_json_line(const ManifestEntry& e) {
  json j = json::object();
  j["utt_id"] = e.utt_id;
  j["clean_path"] = e.clean_path.string();
  j["degraded_path"] = e.degraded_path.string();
  j["kind"] = to_string(e.kind);
  j["noise_type"] = e.noise_type ? json(*e.noise_type) : json(nullptr);
  j["snr_db"] = e.snr_db ? json(*e.snr_db) : json(nullptr);
  j["split"] = to_string(e.split);
  json scores = json::object();
  for (const char* key : kScoreKeys) {
    if (auto v = e.scores.get(key)) scores[key] = *v;
  }
  j["scores"] = scores;
  return j.dump();
}

ManifestEntry parse_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw UsageError(std::string("malformed manifest line: ") + ex.what());
  }
  ManifestEntry e;
  try {
    e.utt_id = j.at("utt_id").get<std::string>();
    e.clean_path = j.at("clean_path").get<std::string>();
    e.degraded_path = j.at("degraded_path").get<std::string>();
    e.kind = parse_kind(j.at("kind").get<std::string>());
    if (j.contains("noise_type") && !j["noise_type"].is_null()) e.noise_type = j["noise_type"].get<std::string>();
    if (j.contains("snr_db") && !j["snr_db"].is_null()) e.snr_db = j["snr_db"].get<double>();
    e.split = parse_split(j.at("split").get<std::string>());
    if (j.contains("scores") && !j["scores"].is_null()) {
      for (const auto& [key, value] : j["scores"].items()) e.scores.set(key, value.get<double>());
    }
  } catch (const json::exception& ex) {
    throw UsageError(std::string("manifest entry: ") + ex.what());
  }
  validate(e);
  return e;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ostringstream os;
  for (const auto& e : m) {
    validate(e);
    os << to_json_line(e) << '\n';
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write manifest " + path.string());
    out << os.str();
  }
  std::filesystem::rename(tmp, path);
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.push_back(parse_json_line(line));
    } catch (const UsageError& ex) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return m;
}

void validate(const MixSpec& spec) {
  if (spec.noise_types.empty()) throw UsageError("mix spec: no noise types");
  if (spec.snr_grid_db.empty()) throw UsageError("mix spec: empty SNR grid");
  for (double s : spec.snr_grid_db) {
    if (!std::isfinite(s)) throw UsageError("mix spec: non-finite SNR");
  }
  if (spec.degraded_per_clean < 1) throw UsageError("mix spec: degraded_per_clean must be >= 1");
}

namespace {

std::string snr_tag(double snr) {
  std::ostringstream os;
  os << (snr < 0 ? "m" : "p") << std::abs(snr);
  std::string s = os.str();
  std::replace(s.begin(), s.end(), '.', '_');
  return s + "dB";
}

}  // namespace

Manifest build_manifest(const std::vector<CleanUtterance>& clean, const MixSpec& spec,
                        const BuildOptions& options) {
  if (clean.empty()) throw UsageError("build_manifest: clean list is empty");
  validate(spec);
  std::map<std::string, Waveform> noises;
  for (const auto& name : spec.noise_types) {
    auto it = options.noise_files.find(name);
    if (it == options.noise_files.end()) throw UsageError("no file for noise type '" + name + "'");
    noises.emplace(name, load_waveform(it->second));
  }
  const bool enhance = static_cast<bool>(options.enhancer);
  const std::size_t per_clean = 1 + static_cast<std::size_t>(spec.degraded_per_clean) * (enhance ? 2 : 1);
  std::vector<Manifest> slots(clean.size());

  parallel_for(clean.size(), options.jobs, [&](std::size_t i) {
    const auto& utt = clean[i];
    try {
      if (utt.split == Split::TestUnseen) throw UsageError("clean list items must be train or test_seen");
      Manifest& out = slots[i];
      out.reserve(per_clean);
      const Waveform wav = load_waveform(utt.path);
      ManifestEntry ce;
      ce.utt_id = utt.utt_id;
      ce.clean_path = utt.path;
      ce.degraded_path = utt.path;
      ce.kind = Kind::Clean;
      ce.split = utt.split;
      out.push_back(ce);

      Rng rng(derive_seed(spec.seed, utt.utt_id));
      for (int k = 0; k < spec.degraded_per_clean; ++k) {
        const auto& noise_name = spec.noise_types[rng.below(spec.noise_types.size())];
        const double snr = spec.snr_grid_db[rng.below(spec.snr_grid_db.size())];
        const MixResult mix = mix_at_snr(wav, noises.at(noise_name), snr, rng);
        ManifestEntry ne;
        ne.utt_id = utt.utt_id + "_" + noise_name + "_" + snr_tag(snr) + "_" + std::to_string(k);
        ne.clean_path = utt.path;
        ne.degraded_path = options.output_dir / "noisy" / (ne.utt_id + ".wav");
        ne.kind = Kind::Noisy;
        ne.noise_type = noise_name;
        ne.snr_db = snr;
        ne.split = utt.split;
        save_waveform(ne.degraded_path, mix.mixture);
        out.push_back(ne);
        if (enhance) {
          ManifestEntry ee = ne;
          ee.utt_id = ne.utt_id + "_enh";
          ee.kind = Kind::Enhanced;
          ee.degraded_path = options.output_dir / "enhanced" / (ee.utt_id + ".wav");
          save_waveform(ee.degraded_path, options.enhancer(mix.mixture));
          out.push_back(ee);
        }
      }
    } catch (const UsageError& ex) {
      throw UsageError("utterance '" + utt.utt_id + "': " + ex.what());
    } catch (const std::exception& ex) {
      throw Error("utterance '" + utt.utt_id + "': " + ex.what());
    }
  });

  Manifest m;
  m.reserve(clean.size() * per_clean);
  for (auto& s : slots) std::move(s.begin(), s.end(), std::back_inserter(m));
  return m;
}

SplitResult split_seen_unseen(const Manifest& manifest, const std::vector<std::string>& unseen_noises) {
  const std::set<std::string> unseen(unseen_noises.begin(), unseen_noises.end());
  SplitResult r;
  for (const auto& e : manifest) {
    const bool is_unseen = e.noise_type && unseen.count(*e.noise_type) > 0;
    if (is_unseen && e.split == Split::Train) {
      throw UsageError("unseen noise '" + *e.noise_type + "' also appears in training entry '" + e.utt_id + "'");
    }
    ManifestEntry copy = e;
    if (is_unseen) {
      copy.split = Split::TestUnseen;
      r.test_unseen.push_back(std::move(copy));
    } else if (e.split == Split::Train) {
      r.train.push_back(std::move(copy));
    } else if (e.split == Split::TestSeen) {
      r.test_seen.push_back(std::move(copy));
    } else {
      throw UsageError("entry '" + e.utt_id + "' is tagged test_unseen but its noise is not in the unseen list");
    }
  }
  return r;
}

std::vector<std::string> paper_unseen_noises() { return {"car", "pink", "street", "babble"}; }
std::vector<double> paper_unseen_snrs_db() { return {-10, -5, 0, 5, 10, 15}; }

}  // namespace mosanet::corpus
