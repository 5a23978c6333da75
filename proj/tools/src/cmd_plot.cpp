#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "mosanet/common/csv.hpp"
#include "mosanet/common/error.hpp"
#include "mosanet/evalstats/stats.hpp"
#include "run.hpp"

namespace mosanet::cli {

namespace {

struct PlotOptions {
  CommonOptions common;
  std::vector<std::string> scatter;
  std::string history;
  std::vector<std::string> envelope;
};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

const char* kColours[] = {"steelblue", "firebrick", "darkgreen", "darkorange", "purple", "gray"};

void line_plot(const std::filesystem::path& path, const std::vector<Series>& series, const std::string& x_label,
               const std::string& y_label) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) {
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  constexpr double W = 640, H = 400, M = 60;
  auto sx = [&](double v) { return M + (v - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double v) { return H - M - (v - y0) / (y1 - y0) * (H - 2 * M); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
     << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* colour = kColours[k % std::size(kColours)];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (std::isfinite(series[k].y[i])) os << sx(series[k].x[i]) << "," << sy(series[k].y[i]) << " ";
    }
    os << "\"/>\n<text x=\"" << W - M + 5 << "\" y=\"" << M + 15 * k + 10 << "\" font-size=\"11\" fill=\"" << colour
       << "\">" << series[k].name << "</text>\n";
  }
  os << "<text x=\"" << M << "\" y=\"" << H - M + 15 << "\" font-size=\"11\">" << format_double(x0) << "</text>\n"
     << "<text x=\"" << W - M << "\" y=\"" << H - M + 15 << "\" font-size=\"11\" text-anchor=\"end\">"
     << format_double(x1) << "</text>\n"
     << "<text x=\"" << M - 5 << "\" y=\"" << H - M << "\" font-size=\"11\" text-anchor=\"end\">" << format_double(y0)
     << "</text>\n"
     << "<text x=\"" << M - 5 << "\" y=\"" << M + 10 << "\" font-size=\"11\" text-anchor=\"end\">"
     << format_double(y1) << "</text>\n"
     << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << x_label << "</text>\n"
     << "<text x=\"15\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << H / 2 << ")\">"
     << y_label << "</text>\n</svg>\n";
  write_file_atomic(path, os.str());
}

double number(const std::string& s) {
  if (s.empty()) return NAN;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
}

void run_plot(const PlotOptions& o) {
  if (o.scatter.empty() && o.history.empty() && o.envelope.empty()) {
    throw UsageError("nothing to plot; give --scatter, --history or --envelope");
  }
  Run run = open_run("plot", o.common);
  for (const auto& csv : o.scatter) {
    const auto p = evalstats::read_scatter_csv(csv);
    const auto stem = std::filesystem::path(csv).stem().string();
    evalstats::scatter_emit(p.pred, p.truth, p.ids, run.dir / (stem + ".svg"), "ground truth", "predicted");
  }
  if (!o.history.empty()) {
    const auto rows = read_csv(o.history);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "epoch") throw UsageError(o.history + ": not a history CSV");
    std::vector<Series> series;
    for (std::size_t c = 1; c < rows[0].size(); ++c) {
      const auto& name = rows[0][c];
      if (name.find("loss") == std::string::npos && name != "lps_mse") continue;
      Series s{name, {}, {}};
      for (std::size_t r = 1; r < rows.size(); ++r) {
        s.x.push_back(number(rows[r][0]));
        s.y.push_back(number(rows[r][c]));
      }
      series.push_back(std::move(s));
    }
    line_plot(run.dir / "history.svg", series, "epoch", "loss");
  }
  if (!o.envelope.empty()) {
    std::vector<Series> series;
    for (const auto& csv : o.envelope) {
      const auto rows = read_csv(csv);
      if (rows.empty() || rows[0] != std::vector<std::string>{"time_s", "value"}) {
        throw UsageError(csv + ": not an envelope CSV");
      }
      Series s{std::filesystem::path(csv).stem().string(), {}, {}};
      for (std::size_t r = 1; r < rows.size(); ++r) {
        s.x.push_back(number(rows[r][0]));
        s.y.push_back(number(rows[r][1]));
      }
      series.push_back(std::move(s));
    }
    line_plot(run.dir / "envelope.svg", series, "time (s)", "band envelope");
  }
}

}  // namespace

void register_plot(CLI::App& app, Action& action) {
  auto o = std::make_shared<PlotOptions>();
  auto* cmd = app.add_subcommand("plot", "Render SVG plots from scatter, history or envelope CSVs");
  add_common_options(cmd, o->common);
  cmd->add_option("--scatter", o->scatter, "Scatter CSV (id,predicted,truth) from eval (repeatable)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--history", o->history, "history.csv or se_history.csv")->check(CLI::ExistingFile);
  cmd->add_option("--envelope", o->envelope, "Envelope CSVs to overlay (repeatable)")->check(CLI::ExistingFile);
  cmd->callback([&action, o] { action = [o] { run_plot(*o); }; });
}

}  // namespace mosanet::cli
