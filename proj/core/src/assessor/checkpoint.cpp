#include "mosanet/assessor/checkpoint.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/nn/archive.hpp"

namespace mosanet::assessor {

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void save_checkpoint(const std::filesystem::path& path, const Assessor& model, const CheckpointMeta& meta) {
  const AssessorConfig& c = model.config();
  json history = json::array();
  for (const auto& r : meta.history) {
    history.push_back({{"epoch", r.epoch},
                       {"total_loss", r.total_loss},
                       {"task_loss", r.task_loss},
                       {"heldout_loss", r.heldout_loss},
                       {"max_grad_norm", r.max_grad_norm},
                       {"clipped_steps", r.clipped_steps},
                       {"wall_s", r.wall_s}});
  }
  json j{{"kind", "assessor"},
         {"config", json::parse(to_json(c))},
         {"config_hash", hex64(config_hash(c))},
         {"arch", to_string(c.arch)},
         {"tasks", join_tasks(c.tasks)},
         {"streams", features::join_streams(c.streams)},
         {"epoch", meta.epoch},
         {"seed", model.seed()},
         {"init", to_string(c.init)},
         {"optimizer", meta.optimizer},
         {"learning_rate", meta.learning_rate},
         {"head_to_input_frame_ratio", 1},
         {"parameter_count", model.parameter_count()},
         {"parameter_hash", hex64(model.state_hash())},
         {"history", history}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  nn::write_archive(path, model.state());
  write_file_atomic(sidecar_path(path), j.dump(2) + "\n");
}

LoadedAssessor load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path) || !std::filesystem::exists(sidecar_path(path))) {
    throw UsageError("checkpoint " + path.string() + " or its .json sidecar is missing");
  }
  json j;
  try {
    j = json::parse(read_text_file(sidecar_path(path)));
  } catch (const json::exception& ex) {
    throw UsageError("checkpoint sidecar: " + std::string(ex.what()));
  }
  if (j.value("kind", "") != "assessor") throw UsageError(path.string() + " is not an assessor checkpoint");
  const AssessorConfig c = assessor_config_from_json(j.at("config").dump());
  if (hex64(config_hash(c)) != j.at("config_hash").get<std::string>()) {
    throw UsageError("checkpoint " + path.string() + ": config hash does not match its config");
  }
  LoadedAssessor out;
  out.model = std::make_unique<Assessor>(c, j.at("seed").get<std::uint64_t>());
  out.model->load_state(nn::read_archive(path), true);
  out.meta.epoch = j.value("epoch", 0);
  out.meta.optimizer = j.value("optimizer", "adam");
  out.meta.learning_rate = j.value("learning_rate", 1e-4);
  for (const auto& r : j.value("history", json::array())) {
    EpochRecord e;
    e.epoch = r.at("epoch").get<int>();
    e.total_loss = r.at("total_loss").get<double>();
    e.task_loss = r.at("task_loss").get<std::map<std::string, double>>();
    e.heldout_loss = r.at("heldout_loss").get<double>();
    e.max_grad_norm = r.at("max_grad_norm").get<double>();
    e.clipped_steps = r.at("clipped_steps").get<int>();
    e.wall_s = r.at("wall_s").get<double>();
    out.meta.history.push_back(std::move(e));
  }
  return out;
}

}  // namespace mosanet::assessor
