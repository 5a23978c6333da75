#include "mosanet/evalstats/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/common/rng.hpp"

namespace mosanet::evalstats {

namespace {

void check_pairs(std::span<const double> a, std::span<const double> b, std::size_t min_len, const char* who) {
  if (a.size() != b.size()) throw UsageError(std::string(who) + ": length mismatch");
  if (a.size() < min_len) throw UsageError(std::string(who) + ": need at least " + std::to_string(min_len) + " pairs");
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

double lcc(std::span<const double> pred, std::span<const double> truth) {
  check_pairs(pred, truth, 2, "lcc");
  const double mx = mean_of(pred), my = mean_of(truth);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i] - mx, dy = truth[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UsageError("lcc: degenerate input (zero variance)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> truth) {
  check_pairs(pred, truth, 2, "srcc");
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  try {
    return lcc(rp, rt);
  } catch (const UsageError&) {
    throw UsageError("srcc: degenerate input (all values equal)");
  }
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_pairs(pred, truth, 1, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double t_two_tailed_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TTestResult grouped_ttest(std::span<const double> a, std::span<const double> b, int group_size, std::uint64_t seed) {
  check_pairs(a, b, 1, "grouped_ttest");
  if (group_size < 1) throw UsageError("grouped_ttest: group size must be positive");
  if (a.size() % static_cast<std::size_t>(group_size) != 0) {
    throw UsageError("grouped_ttest: length is not divisible by the group size");
  }
  const std::size_t groups = a.size() / group_size;
  if (groups < 2) throw UsageError("grouped_ttest: fewer than 2 groups");
  TTestResult r;
  r.seed = seed;
  r.n_pairs = static_cast<int>(groups);
  r.order.resize(a.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  Rng rng(derive_seed(seed, "grouped_ttest"));
  rng.shuffle(r.order);
  std::vector<double> diff(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    double sa = 0.0, sb = 0.0;
    for (int k = 0; k < group_size; ++k) {
      const std::size_t i = r.order[g * group_size + k];
      sa += a[i];
      sb += b[i];
    }
    diff[g] = sa / group_size - sb / group_size;
  }
  const double md = mean_of(diff);
  double ss = 0.0;
  for (double d : diff) ss += (d - md) * (d - md);
  const double sd = std::sqrt(ss / static_cast<double>(groups - 1));
  if (sd == 0.0) {
    if (md == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = md > 0 ? INFINITY : -INFINITY;
      r.p = 1e-300;
    }
    return r;
  }
  r.t = md / (sd / std::sqrt(static_cast<double>(groups)));
  r.p = std::max(t_two_tailed_p(r.t, static_cast<double>(groups - 1)), 1e-300);
  return r;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  check_pairs(x, y, 2, "least_squares");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw UsageError("least_squares: degenerate x");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void scatter_emit(std::span<const double> pred, std::span<const double> truth, const std::vector<std::string>& ids,
                  const std::filesystem::path& svg_path, const std::string& x_label, const std::string& y_label) {
  check_pairs(pred, truth, 2, "scatter_emit");
  if (!ids.empty() && ids.size() != pred.size()) throw UsageError("scatter_emit: id count mismatch");

  auto csv_path = svg_path;
  csv_path.replace_extension(".csv");
  CsvWriter csv({"id", "predicted", "truth"});
  for (std::size_t i = 0; i < pred.size(); ++i) {
    csv.add_row({ids.empty() ? std::to_string(i) : ids[i], format_double(pred[i]), format_double(truth[i])});
  }
  csv.write(csv_path);

  double lo = std::min(*std::min_element(pred.begin(), pred.end()), *std::min_element(truth.begin(), truth.end()));
  double hi = std::max(*std::max_element(pred.begin(), pred.end()), *std::max_element(truth.begin(), truth.end()));
  if (hi == lo) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  constexpr double W = 480, H = 480, M = 60;
  auto sx = [&](double v) { return M + (v - lo) / (hi - lo) * (W - 2 * M); };
  auto sy = [&](double v) { return H - M - (v - lo) / (hi - lo) * (H - 2 * M); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<line class=\"diagonal\" x1=\"" << sx(lo) << "\" y1=\"" << sy(lo) << "\" x2=\"" << sx(hi) << "\" y2=\""
     << sy(hi) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  bool have_fit = true;
  LineFit fit;
  try {
    fit = least_squares(truth, pred);
  } catch (const UsageError&) {
    have_fit = false;
  }
  if (have_fit) {
    os << "<line class=\"regression\" x1=\"" << sx(lo) << "\" y1=\"" << sy(fit.intercept + fit.slope * lo)
       << "\" x2=\"" << sx(hi) << "\" y2=\"" << sy(fit.intercept + fit.slope * hi)
       << "\" stroke=\"red\" data-slope=\"" << format_double(fit.slope) << "\" data-intercept=\""
       << format_double(fit.intercept) << "\"/>\n";
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    os << "<circle cx=\"" << sx(truth[i]) << "\" cy=\"" << sy(pred[i]) << "\" r=\"2.5\" fill=\"steelblue\"/>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
     << "</text>\n";
  os << "<text x=\"15\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << H / 2 << ")\">"
     << xml_escape(y_label) << "</text>\n";
  os << "</svg>\n";
  write_file_atomic(svg_path, os.str());
}

ScatterPairs read_scatter_csv(const std::filesystem::path& csv_path) {
  const auto rows = read_csv(csv_path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"id", "predicted", "truth"}) {
    throw UsageError(csv_path.string() + ": not a scatter CSV");
  }
  ScatterPairs p;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw UsageError(csv_path.string() + ": malformed row");
    p.ids.push_back(rows[i][0]);
    p.pred.push_back(std::stod(rows[i][1]));
    p.truth.push_back(std::stod(rows[i][2]));
  }
  return p;
}

}  // namespace mosanet::evalstats
