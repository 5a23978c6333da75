#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mosanet/config/config.hpp"
#include "mosanet/features/bundle.hpp"
#include "mosanet/nn/layers.hpp"

namespace mosanet::assessor {

/// Q: quality branch, I: intelligibility branch, D: distortion branch.
enum class Task { Q, I, D };

std::string to_string(Task t);
Task parse_task(const std::string& s);
/// "Q,I,D", "QID" or "Q+I"; result sorted in canonical Q, I, D order.
std::vector<Task> parse_tasks(const std::string& s);
std::string join_tasks(const std::vector<Task>& tasks);

enum class Arch { BLSTM, CNN, CRNN, CRNN_AT };

std::string to_string(Arch a);
Arch parse_arch(const std::string& s);

std::string to_string(nn::InitScheme s);
nn::InitScheme parse_init(const std::string& s);

struct AssessorConfig {
  Arch arch = Arch::CRNN_AT;
  std::vector<Task> tasks{Task::Q, Task::I, Task::D};
  std::vector<features::Stream> streams{features::Stream::PS};
  /// Manifest score key each task regresses onto.
  std::map<Task, std::string> targets{{Task::Q, "pesq"}, {Task::I, "stoi"}, {Task::D, "sdi"}};

  std::vector<int> conv_channels{16, 32, 64, 128};
  int conv_layers = 12;
  std::vector<int> conv_strides{1, 1, 3};  // frequency-axis strides within a block
  int blstm_units = 128;
  int fc_units = 128;
  int common_dim = 128;
  int ssl_dim = 8;
  bool lfb_learnable = true;
  nn::InitScheme init = nn::InitScheme::HeUniform;
  features::FeatureConfig features;

  bool has_task(Task t) const;
  bool has_stream(features::Stream s) const;
};

/// Throws UsageError on an inconsistent configuration.
void validate(const AssessorConfig& c);

/// Reads the [model] section plus the feature sections.
AssessorConfig assessor_config_from(const config::Config& cfg);
std::set<std::string> assessor_config_keys();

/// Canonical JSON text and its FNV-1a hash; the seed is not part of it.
std::string to_json(const AssessorConfig& c);
AssessorConfig assessor_config_from_json(const std::string& text);
std::uint64_t config_hash(const AssessorConfig& c);

}  // namespace mosanet::assessor
