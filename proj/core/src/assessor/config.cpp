#include "mosanet/assessor/config.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>

#include "mosanet/common/error.hpp"
#include "mosanet/common/rng.hpp"

namespace mosanet::assessor {

using nlohmann::json;

std::string to_string(Task t) {
  switch (t) {
    case Task::Q: return "Q";
    case Task::I: return "I";
    case Task::D: return "D";
  }
  return "?";
}

Task parse_task(const std::string& s) {
  if (s == "Q" || s == "q") return Task::Q;
  if (s == "I" || s == "i") return Task::I;
  if (s == "D" || s == "d") return Task::D;
  throw UsageError("unknown task '" + s + "' (expected Q, I or D)");
}

std::vector<Task> parse_tasks(const std::string& s) {
  std::vector<Task> out;
  for (char c : s) {
    if (c == ',' || c == '+' || c == ' ') continue;
    const Task t = parse_task(std::string(1, c));
    if (std::find(out.begin(), out.end(), t) != out.end()) throw UsageError("task listed twice in '" + s + "'");
    out.push_back(t);
  }
  if (out.empty()) throw UsageError("no tasks given");
  std::sort(out.begin(), out.end());
  return out;
}

std::string join_tasks(const std::vector<Task>& tasks) {
  std::string out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i) out += ",";
    out += to_string(tasks[i]);
  }
  return out;
}

std::string to_string(Arch a) {
  switch (a) {
    case Arch::BLSTM: return "BLSTM";
    case Arch::CNN: return "CNN";
    case Arch::CRNN: return "CRNN";
    case Arch::CRNN_AT: return "CRNN_AT";
  }
  return "?";
}

Arch parse_arch(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "BLSTM") return Arch::BLSTM;
  if (u == "CNN") return Arch::CNN;
  if (u == "CRNN") return Arch::CRNN;
  if (u == "CRNN_AT" || u == "CRNN+AT") return Arch::CRNN_AT;
  throw UsageError("unknown architecture '" + s + "'");
}

std::string to_string(nn::InitScheme s) {
  switch (s) {
    case nn::InitScheme::HeUniform: return "he_uniform";
    case nn::InitScheme::LecunUniform: return "lecun_uniform";
    case nn::InitScheme::Zeros: return "zeros";
  }
  return "?";
}

nn::InitScheme parse_init(const std::string& s) {
  if (s == "he_uniform") return nn::InitScheme::HeUniform;
  if (s == "lecun_uniform") return nn::InitScheme::LecunUniform;
  if (s == "zeros") return nn::InitScheme::Zeros;
  throw UsageError("unknown init scheme '" + s + "'");
}

bool AssessorConfig::has_task(Task t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

bool AssessorConfig::has_stream(features::Stream s) const {
  return std::find(streams.begin(), streams.end(), s) != streams.end();
}

void validate(const AssessorConfig& c) {
  if (c.tasks.empty()) throw UsageError("model: at least one task is required");
  if (!std::is_sorted(c.tasks.begin(), c.tasks.end())) throw UsageError("model: tasks must be in Q, I, D order");
  if (c.streams.empty()) throw UsageError("model: at least one feature stream is required");
  for (Task t : c.tasks) {
    if (!c.targets.count(t) || c.targets.at(t).empty()) throw UsageError("model: no target for task " + to_string(t));
  }
  if (c.conv_channels.empty() || c.conv_strides.empty()) throw UsageError("model: empty conv layout");
  if (c.conv_layers != static_cast<int>(c.conv_channels.size() * c.conv_strides.size())) {
    throw UsageError("model: conv_layers must equal channels x strides per block");
  }
  for (int v : c.conv_channels) {
    if (v < 1) throw UsageError("model: conv channels must be positive");
  }
  for (int v : c.conv_strides) {
    if (v < 1) throw UsageError("model: conv strides must be positive");
  }
  if (c.blstm_units < 1 || c.fc_units < 1 || c.common_dim < 1 || c.ssl_dim < 1) {
    throw UsageError("model: layer sizes must be positive");
  }
}

AssessorConfig assessor_config_from(const config::Config& cfg) {
  AssessorConfig c;
  c.arch = parse_arch(cfg.get_string("model.arch", to_string(c.arch)));
  c.tasks = parse_tasks(cfg.get_string("model.tasks", join_tasks(c.tasks)));
  c.streams = features::parse_streams(cfg.get_string("model.streams", features::join_streams(c.streams)));
  c.targets[Task::Q] = cfg.get_string("model.target_q", c.targets[Task::Q]);
  c.targets[Task::I] = cfg.get_string("model.target_i", c.targets[Task::I]);
  c.targets[Task::D] = cfg.get_string("model.target_d", c.targets[Task::D]);
  auto ints = [&](const std::string& key, const std::vector<int>& fallback) {
    std::vector<double> d(fallback.begin(), fallback.end());
    std::vector<int> out;
    for (double v : cfg.get_double_list(key, d)) out.push_back(static_cast<int>(v));
    return out;
  };
  c.conv_channels = ints("model.conv_channels", c.conv_channels);
  c.conv_strides = ints("model.conv_strides", c.conv_strides);
  c.conv_layers = static_cast<int>(cfg.get_int("model.conv_layers", c.conv_layers));
  c.blstm_units = static_cast<int>(cfg.get_int("model.blstm_units", c.blstm_units));
  c.fc_units = static_cast<int>(cfg.get_int("model.fc_units", c.fc_units));
  c.common_dim = static_cast<int>(cfg.get_int("model.common_dim", c.common_dim));
  c.lfb_learnable = cfg.get_bool("model.lfb_learnable", c.lfb_learnable);
  c.init = parse_init(cfg.get_string("model.init", to_string(c.init)));
  c.features = features::feature_config_from(cfg);
  c.ssl_dim = static_cast<int>(cfg.get_int("model.ssl_dim", c.features.ssl_stub_dim));
  validate(c);
  return c;
}

std::set<std::string> assessor_config_keys() {
  std::set<std::string> keys{"model.arch",          "model.tasks",        "model.streams",     "model.target_q",
                             "model.target_i",      "model.target_d",     "model.conv_channels", "model.conv_strides",
                             "model.conv_layers",   "model.blstm_units",  "model.fc_units",    "model.common_dim",
                             "model.lfb_learnable", "model.init",         "model.ssl_dim"};
  auto f = features::feature_config_keys();
  keys.insert(f.begin(), f.end());
  return keys;
}

namespace {

json features_json(const features::FeatureConfig& f) {
  return json{{"n_fft", f.stft.n_fft},
              {"win_length", f.stft.win_length},
              {"hop", f.stft.hop},
              {"window", f.stft.window == features::WindowKind::Hamming ? "hamming" : "hann"},
              {"lfb_filters", f.lfb_filters},
              {"lfb_taps", f.lfb_taps},
              {"ssl_provider", f.ssl_provider},
              {"ssl_command", f.ssl_command},
              {"ssl_name", f.ssl_name},
              {"ssl_dim", f.ssl_stub_dim},
              {"ssl_seed", f.ssl_seed}};
}

}  // namespace

std::string to_json(const AssessorConfig& c) {
  json targets = json::object();
  for (Task t : c.tasks) targets[to_string(t)] = c.targets.at(t);
  json j{{"arch", to_string(c.arch)},
         {"tasks", join_tasks(c.tasks)},
         {"streams", features::join_streams(c.streams)},
         {"targets", targets},
         {"conv_channels", c.conv_channels},
         {"conv_layers", c.conv_layers},
         {"conv_strides", c.conv_strides},
         {"blstm_units", c.blstm_units},
         {"fc_units", c.fc_units},
         {"common_dim", c.common_dim},
         {"ssl_dim", c.ssl_dim},
         {"lfb_learnable", c.lfb_learnable},
         {"init", to_string(c.init)},
         {"features", features_json(c.features)}};
  return j.dump();
}

AssessorConfig assessor_config_from_json(const std::string& text) {
  AssessorConfig c;
  try {
    const json j = json::parse(text);
    c.arch = parse_arch(j.at("arch").get<std::string>());
    c.tasks = parse_tasks(j.at("tasks").get<std::string>());
    c.streams = features::parse_streams(j.at("streams").get<std::string>());
    c.targets.clear();
    for (const auto& [k, v] : j.at("targets").items()) c.targets[parse_task(k)] = v.get<std::string>();
    c.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    c.conv_layers = j.at("conv_layers").get<int>();
    c.conv_strides = j.at("conv_strides").get<std::vector<int>>();
    c.blstm_units = j.at("blstm_units").get<int>();
    c.fc_units = j.at("fc_units").get<int>();
    c.common_dim = j.at("common_dim").get<int>();
    c.ssl_dim = j.at("ssl_dim").get<int>();
    c.lfb_learnable = j.at("lfb_learnable").get<bool>();
    c.init = parse_init(j.at("init").get<std::string>());
    const json& f = j.at("features");
    c.features.stft.n_fft = f.at("n_fft").get<int>();
    c.features.stft.win_length = f.at("win_length").get<int>();
    c.features.stft.hop = f.at("hop").get<int>();
    c.features.stft.window =
        f.at("window").get<std::string>() == "hann" ? features::WindowKind::Hann : features::WindowKind::Hamming;
    c.features.lfb_filters = f.at("lfb_filters").get<int>();
    c.features.lfb_taps = f.at("lfb_taps").get<int>();
    c.features.ssl_provider = f.at("ssl_provider").get<std::string>();
    c.features.ssl_command = f.at("ssl_command").get<std::string>();
    c.features.ssl_name = f.at("ssl_name").get<std::string>();
    c.features.ssl_stub_dim = f.at("ssl_dim").get<int>();
    c.features.ssl_seed = f.at("ssl_seed").get<std::uint64_t>();
  } catch (const json::exception& ex) {
    throw UsageError(std::string("model config: ") + ex.what());
  }
  validate(c);
  return c;
}

std::uint64_t config_hash(const AssessorConfig& c) { return fnv1a(to_json(c)); }

}  // namespace mosanet::assessor
