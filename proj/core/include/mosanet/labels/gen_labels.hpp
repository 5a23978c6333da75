#pragma once

#include <set>
#include <string>
#include <vector>

#include "mosanet/corpus/manifest.hpp"
#include "mosanet/labels/pesq.hpp"

namespace mosanet::labels {

struct LabelOptions {
  std::set<std::string> metrics{"pesq", "stoi", "sdi"};
  PesqScorer* pesq = nullptr;  // no adapter: pesq is left missing and reported
  int jobs = 0;
  bool overwrite = false;      // recompute scores that are already present
};

struct LabelFailure {
  std::string utt_id;
  std::string metric;
  std::string message;
};

struct LabelReport {
  corpus::Manifest manifest;
  std::vector<LabelFailure> failures;  // in manifest order
};

/// Fills objective scores for every entry. Clean entries get stoi = 1,
/// sdi = 0 and the adapter's self-score for pesq. A failing metric is
/// recorded and the run continues; already-present scores are kept unless
/// `overwrite` is set, so re-running is a no-op.
LabelReport gen_labels(const corpus::Manifest& manifest, const LabelOptions& options);

}  // namespace mosanet::labels
