#include "mosanet/labels/pesq.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"

namespace mosanet::labels {

namespace {

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

PesqScorer::PesqScorer(std::string command, std::filesystem::path cache_file)
    : command_(std::move(command)), cache_file_(std::move(cache_file)) {
  if (command_.empty()) throw UsageError("pesq adapter unavailable: empty command");
  if (!cache_file_.empty() && std::filesystem::exists(cache_file_)) {
    std::ifstream in(cache_file_);
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("metric") || j["metric"] != "pesq") continue;
      cache_[{j.at("clean").get<std::string>(), j.at("degraded").get<std::string>()}] = j.at("value").get<double>();
    }
  }
}

std::optional<std::string> PesqScorer::resolve_command(const std::string& configured) {
  if (const char* env = std::getenv("MOSANET_PESQ_CMD"); env && *env) return std::string(env);
  if (!configured.empty()) return configured;
  return std::nullopt;
}

double PesqScorer::score(const std::filesystem::path& clean, const std::filesystem::path& degraded) {
  const std::pair<std::string, std::string> key{clean.string(), degraded.string()};
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  char tmpl[] = "/tmp/mosanet_pesq_XXXXXX";
  const int fd = mkstemp(tmpl);
  if (fd < 0) throw Error("pesq adapter: cannot create temporary file");
  close(fd);
  const std::string err_path = tmpl;
  const std::string cmd = command_ + " " + quote(key.first) + " " + quote(key.second) + " 2>" + quote(err_path);
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    std::remove(err_path.c_str());
    throw Error("pesq adapter: cannot start '" + command_ + "'");
  }
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  std::string diag = read_text_file(err_path);
  std::remove(err_path.c_str());
  if (status != 0) {
    throw Error("pesq adapter failed (status " + std::to_string(status) + ") on " + key.second + ": " + trim(diag));
  }
  const std::string text = trim(out);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error("pesq adapter printed '" + text + "', expected one decimal score");
  }
  std::lock_guard lock(mutex_);
  cache_[key] = value;
  if (!cache_file_.empty()) {
    nlohmann::json j{{"clean", key.first}, {"degraded", key.second}, {"metric", "pesq"}, {"value", value}};
    if (cache_file_.has_parent_path()) std::filesystem::create_directories(cache_file_.parent_path());
    std::ofstream app(cache_file_, std::ios::app);
    app << j.dump() << '\n';
  }
  return value;
}

double pesq_external(PesqScorer* scorer, const std::filesystem::path& clean, const std::filesystem::path& degraded) {
  if (!scorer) {
    throw UsageError("pesq adapter unavailable: set MOSANET_PESQ_CMD or pesq.command");
  }
  return scorer->score(clean, degraded);
}

}  // namespace mosanet::labels
