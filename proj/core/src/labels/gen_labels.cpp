#include "mosanet/labels/gen_labels.hpp"

#include <algorithm>

#include "mosanet/common/error.hpp"
#include "mosanet/common/parallel.hpp"
#include "mosanet/corpus/wav.hpp"
#include "mosanet/labels/metrics.hpp"

namespace mosanet::labels {

LabelReport gen_labels(const corpus::Manifest& manifest, const LabelOptions& options) {
  for (const auto& m : options.metrics) {
    if (m != "pesq" && m != "stoi" && m != "sdi") throw UsageError("gen_labels: unknown metric '" + m + "'");
  }
  LabelReport report;
  report.manifest = manifest;
  std::vector<std::vector<LabelFailure>> failures(manifest.size());

  parallel_for(manifest.size(), options.jobs, [&](std::size_t i) {
    corpus::ManifestEntry& e = report.manifest[i];
    auto wanted = [&](const std::string& metric) {
      return options.metrics.count(metric) && (options.overwrite || !e.scores.get(metric));
    };
    auto attempt = [&](const std::string& metric, auto&& compute) {
      if (!wanted(metric)) return;
      try {
        e.scores.set(metric, compute());
      } catch (const std::exception& ex) {
        failures[i].push_back({e.utt_id, metric, ex.what()});
      }
    };
    if (e.kind == corpus::Kind::Clean) {
      attempt("stoi", [] { return 1.0; });
      attempt("sdi", [] { return 0.0; });
      attempt("pesq", [&] { return pesq_external(options.pesq, e.clean_path, e.clean_path); });
      return;
    }
    if (!wanted("stoi") && !wanted("sdi") && !wanted("pesq")) return;
    Waveform clean, degraded;
    try {
      clean = corpus::load_waveform(e.clean_path);
      degraded = corpus::load_waveform(e.degraded_path);
    } catch (const std::exception& ex) {
      failures[i].push_back({e.utt_id, "io", ex.what()});
      return;
    }
    // Manifest scores keep stoi in [0, 1]; raw values can dip slightly below 0.
    attempt("stoi", [&] { return std::max(0.0, stoi(clean, degraded)); });
    attempt("sdi", [&] { return sdi(clean, degraded); });
    attempt("pesq", [&] { return pesq_external(options.pesq, e.clean_path, e.degraded_path); });
  });

  for (auto& f : failures) {
    for (auto& x : f) report.failures.push_back(std::move(x));
  }
  return report;
}

}  // namespace mosanet::labels
