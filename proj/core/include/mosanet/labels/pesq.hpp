#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

namespace mosanet::labels {

/// External PESQ scorer. The command is run as `<cmd> <clean.wav> <degraded.wav>`
/// and must print a single decimal score on stdout. Scores are cached per
/// (clean, degraded) pair, optionally in a JSONL file of
/// {clean, degraded, metric, value} records.
class PesqScorer {
 public:
  PesqScorer(std::string command, std::filesystem::path cache_file = {});

  /// Command from MOSANET_PESQ_CMD, else `configured`; nullopt when neither.
  static std::optional<std::string> resolve_command(const std::string& configured);

  double score(const std::filesystem::path& clean, const std::filesystem::path& degraded);
  const std::string& command() const { return command_; }

 private:
  std::string command_;
  std::filesystem::path cache_file_;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, double> cache_;
};

/// Throws UsageError("pesq adapter unavailable ...") when `scorer` is null.
double pesq_external(PesqScorer* scorer, const std::filesystem::path& clean,
                     const std::filesystem::path& degraded);

}  // namespace mosanet::labels
