#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mosanet::evalstats {

/// Pearson correlation. Throws UsageError("... degenerate ...") when either
/// input has zero variance or the lengths differ or are below 2.
double lcc(std::span<const double> pred, std::span<const double> truth);

/// 1-based ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation of average ranks.
double srcc(std::span<const double> pred, std::span<const double> truth);

double mse(std::span<const double> pred, std::span<const double> truth);

/// Two-tailed p-value of Student's t with `df` degrees of freedom.
double t_two_tailed_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int n_pairs = 0;  // number of groups
  std::uint64_t seed = 0;
  std::vector<std::size_t> order;  // shuffled utterance order used for grouping
};

/// Shuffles utterance indices with `seed`, forms consecutive groups of
/// `group_size`, averages a and b within each group and runs a paired
/// two-tailed t-test on the group means. Zero-variance differences give
/// p = 1 when the mean difference is 0, else t = +-inf and p = 1e-300.
TTestResult grouped_ttest(std::span<const double> a, std::span<const double> b, int group_size = 5,
                          std::uint64_t seed = 0);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line truth -> predicted (x = truth, y = predicted).
LineFit least_squares(std::span<const double> x, std::span<const double> y);

/// Writes an SVG scatter plot (points, least-squares line, identity
/// diagonal) and a sidecar CSV of the pairs next to it (same stem, .csv).
void scatter_emit(std::span<const double> pred, std::span<const double> truth, const std::vector<std::string>& ids,
                  const std::filesystem::path& svg_path, const std::string& x_label, const std::string& y_label);

struct ScatterPairs {
  std::vector<std::string> ids;
  std::vector<double> pred;
  std::vector<double> truth;
};
ScatterPairs read_scatter_csv(const std::filesystem::path& csv_path);

}  // namespace mosanet::evalstats
