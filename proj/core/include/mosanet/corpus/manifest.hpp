#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mosanet/common/waveform.hpp"

namespace mosanet::corpus {

enum class Kind { Clean, Noisy, Enhanced };
enum class Split { Train, TestSeen, TestUnseen };

std::string to_string(Kind k);
std::string to_string(Split s);
Kind parse_kind(const std::string& s);
Split parse_split(const std::string& s);

/// Score labels. Keys are the JSON names: pesq, stoi, sdi, mos, intel.
struct Scores {
  std::optional<double> pesq, stoi, sdi, mos, intel;

  std::optional<double> get(const std::string& key) const;
  void set(const std::string& key, double value);
  bool operator==(const Scores&) const = default;
};

struct ManifestEntry {
  std::string utt_id;
  std::filesystem::path clean_path;
  std::filesystem::path degraded_path;
  Kind kind = Kind::Clean;
  std::optional<std::string> noise_type;
  std::optional<double> snr_db;
  Split split = Split::Train;
  Scores scores;

  bool operator==(const ManifestEntry&) const = default;
};

using Manifest = std::vector<ManifestEntry>;

/// Throws UsageError naming the utterance when an invariant is broken.
void validate(const ManifestEntry& e);

std::string to_json_line(const ManifestEntry& e);
ManifestEntry parse_json_line(const std::string& line);

/// JSON lines, one entry per line, UTF-8.
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

struct CleanUtterance {
  std::string utt_id;
  std::filesystem::path path;
  Split split = Split::Train;  // Train or TestSeen
};

struct MixSpec {
  std::vector<std::string> noise_types;
  std::vector<double> snr_grid_db;
  std::uint64_t seed = 0;
  int degraded_per_clean = 1;  // 10 in the full-size corpus
};

void validate(const MixSpec& spec);

using Enhancer = std::function<Waveform(const Waveform& noisy)>;

struct BuildOptions {
  std::filesystem::path output_dir;            // receives noisy/ and enhanced/ WAVs
  std::map<std::string, std::filesystem::path> noise_files;  // noise type -> file
  Enhancer enhancer;                           // empty: no enhanced entries
  int jobs = 1;
};

/// One clean entry per utterance, `degraded_per_clean` noisy entries with
/// noise type, SNR and crop drawn from a generator seeded by (seed, utt id),
/// and one enhanced entry per noisy entry when an enhancer is given.
Manifest build_manifest(const std::vector<CleanUtterance>& clean, const MixSpec& spec,
                        const BuildOptions& options);

struct SplitResult {
  Manifest train, test_seen, test_unseen;
};

/// Moves every test entry whose noise is in `unseen_noises` to test_unseen.
/// A training entry carrying an unseen noise is an error.
SplitResult split_seen_unseen(const Manifest& manifest, const std::vector<std::string>& unseen_noises);

std::vector<std::string> paper_unseen_noises();
std::vector<double> paper_unseen_snrs_db();

}  // namespace mosanet::corpus
