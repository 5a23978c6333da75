#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mosanet/assessor/model.hpp"

namespace mosanet::assessor {

struct EpochRecord {
  int epoch = 0;
  double total_loss = 0.0;
  std::map<std::string, double> task_loss;  // keyed by task letter
  double heldout_loss = 0.0;
  double max_grad_norm = 0.0;  // before clipping
  int clipped_steps = 0;
  double wall_s = 0.0;
};

struct CheckpointMeta {
  int epoch = 0;
  std::string optimizer = "adam";
  double learning_rate = 1e-4;
  std::vector<EpochRecord> history;
};

/// Writes `<path>` (parameter archive) and `<path>.json` (sidecar with the
/// model config, its hash, tasks, streams, epoch, seed, init scheme and
/// training history).
void save_checkpoint(const std::filesystem::path& path, const Assessor& model, const CheckpointMeta& meta);

struct LoadedAssessor {
  std::unique_ptr<Assessor> model;
  CheckpointMeta meta;
};

/// Rebuilds the model from the sidecar config, checks that the config hash
/// matches, and loads every parameter.
LoadedAssessor load_checkpoint(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace mosanet::assessor
