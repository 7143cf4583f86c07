#pragma once

// Static SVG rendering of run artifacts: metric-vs-iteration and
// metric-vs-feval panels, plus 2-d contour plots with trajectory overlays.
// Hand-rolled SVG keeps the artifacts dependency-free and diffable.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ncstep/harness.hpp"
#include "ncstep/problems.hpp"
#include "ncstep/trace.hpp"

namespace ncstep {
namespace plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline const char* color(size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % 8];
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  void pad() {
    if (!valid()) {
      lo = 0;
      hi = 1;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace detail

inline constexpr double kWidth = 640, kHeight = 440;
inline constexpr double kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;

/// Write a line panel. When `log_y` is set, nonpositive values are dropped
/// from that series (standard semi-log behavior).
inline void line_panel(const std::string& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool log_y) {
  detail::Extent ex, ey;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double yv = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : NAN) : s.y[i];
      if (!std::isfinite(yv)) continue;
      ex.add(s.x[i]);
      ey.add(yv);
    }
  }
  ex.pad();
  ey.pad();
  auto px = [&](double v) {
    return kMarginL + (v - ex.lo) / (ex.hi - ex.lo) * (kWidth - kMarginL - kMarginR);
  };
  auto py = [&](double v) {
    return kHeight - kMarginB -
           (v - ey.lo) / (ey.hi - ey.lo) * (kHeight - kMarginT - kMarginB);
  };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='"
      << kHeight << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-size='15'>"
      << title << "</text>\n";
  // axes
  svg << "<line x1='" << kMarginL << "' y1='" << kHeight - kMarginB << "' x2='"
      << kWidth - kMarginR << "' y2='" << kHeight - kMarginB
      << "' stroke='black'/>\n"
      << "<line x1='" << kMarginL << "' y1='" << kMarginT << "' x2='" << kMarginL
      << "' y2='" << kHeight - kMarginB << "' stroke='black'/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = ex.lo + (ex.hi - ex.lo) * t / 4.0;
    const double fy = ey.lo + (ey.hi - ey.lo) * t / 4.0;
    svg << "<text x='" << px(fx) << "' y='" << kHeight - kMarginB + 18
        << "' text-anchor='middle' font-size='11'>" << detail::fmt(fx) << "</text>\n";
    svg << "<text x='" << kMarginL - 6 << "' y='" << py(fy) + 4
        << "' text-anchor='end' font-size='11'>"
        << (log_y ? "1e" + detail::fmt(fy) : detail::fmt(fy)) << "</text>\n";
    svg << "<line x1='" << kMarginL << "' y1='" << py(fy) << "' x2='"
        << kWidth - kMarginR << "' y2='" << py(fy)
        << "' stroke='#dddddd' stroke-width='0.5'/>\n";
  }
  svg << "<text x='" << kWidth / 2 << "' y='" << kHeight - 12
      << "' text-anchor='middle' font-size='12'>" << xlabel << "</text>\n"
      << "<text x='16' y='" << kHeight / 2
      << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
      << kHeight / 2 << ")'>" << ylabel << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    std::ostringstream pts;
    bool pen_down = false;
    std::string paths;
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double yv = log_y ? (s.y[i] > 0 ? std::log10(s.y[i]) : NAN) : s.y[i];
      if (!std::isfinite(yv) || !std::isfinite(s.x[i])) {
        pen_down = false;
        continue;
      }
      pts << (pen_down ? " L" : " M") << detail::fmt(px(s.x[i])) << ' '
          << detail::fmt(py(yv));
      pen_down = true;
    }
    paths = pts.str();
    if (!paths.empty())
      svg << "<path d='" << paths << "' fill='none' stroke='" << detail::color(si)
          << "' stroke-width='1.3'/>\n";
    svg << "<text x='" << kWidth - kMarginR - 4 << "' y='"
        << kMarginT + 14 * (si + 1) << "' text-anchor='end' font-size='11' fill='"
        << detail::color(si) << "'>" << s.name << "</text>\n";
  }
  svg << "</svg>\n";
  harness::write_text_file(path, svg.str());
}

/// Marching-squares contour segments of callable `f` on [xlo,xhi]x[ylo,yhi].
inline std::vector<std::array<double, 4>> contour_segments(
    const std::function<double(double, double)>& f, double level, double xlo,
    double xhi, double ylo, double yhi, int grid_n) {
  std::vector<std::array<double, 4>> segments;
  const double dx = (xhi - xlo) / grid_n;
  const double dy = (yhi - ylo) / grid_n;
  std::vector<std::vector<double>> vals(grid_n + 1, std::vector<double>(grid_n + 1));
  for (int i = 0; i <= grid_n; ++i)
    for (int j = 0; j <= grid_n; ++j)
      vals[i][j] = f(xlo + i * dx, ylo + j * dy);
  auto interp = [level](double a, double b) {
    const double d = b - a;
    return d == 0.0 ? 0.5 : std::clamp((level - a) / d, 0.0, 1.0);
  };
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      const double v00 = vals[i][j], v10 = vals[i + 1][j];
      const double v01 = vals[i][j + 1], v11 = vals[i + 1][j + 1];
      const double x0 = xlo + i * dx, y0 = ylo + j * dy;
      std::vector<std::pair<double, double>> pts;
      if ((v00 < level) != (v10 < level))
        pts.emplace_back(x0 + dx * interp(v00, v10), y0);
      if ((v10 < level) != (v11 < level))
        pts.emplace_back(x0 + dx, y0 + dy * interp(v10, v11));
      if ((v01 < level) != (v11 < level))
        pts.emplace_back(x0 + dx * interp(v01, v11), y0 + dy);
      if ((v00 < level) != (v01 < level))
        pts.emplace_back(x0, y0 + dy * interp(v00, v01));
      if (pts.size() >= 2)
        segments.push_back({pts[0].first, pts[0].second, pts[1].first, pts[1].second});
      if (pts.size() == 4)
        segments.push_back({pts[2].first, pts[2].second, pts[3].first, pts[3].second});
    }
  }
  return segments;
}

/// Contour panel with overlaid trajectory (2-d problems only).
inline void contour_panel(const std::string& path, const std::string& title,
                          const ProblemSpec& problem,
                          const std::vector<Eigen::VectorXd>& trajectory) {
  detail::Extent ex, ey;
  for (const auto& p : trajectory) {
    ex.add(p[0]);
    ey.add(p[1]);
  }
  ex.pad();
  ey.pad();
  // widen a little and keep the classic window when the trajectory is tiny
  const double spanx = std::max(ex.hi - ex.lo, 1.0);
  const double spany = std::max(ey.hi - ey.lo, 1.0);
  const double xlo = ex.lo - 0.3 * spanx, xhi = ex.hi + 0.3 * spanx;
  const double ylo = ey.lo - 0.3 * spany, yhi = ey.hi + 0.3 * spany;

  auto f2 = [&problem](double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return problem.eval_f(v);
  };
  detail::Extent ev;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j)
      ev.add(f2(xlo + (xhi - xlo) * i / 40.0, ylo + (yhi - ylo) * j / 40.0));
  ev.pad();

  auto px = [&](double v) {
    return kMarginL + (v - xlo) / (xhi - xlo) * (kWidth - kMarginL - kMarginR);
  };
  auto py = [&](double v) {
    return kHeight - kMarginB - (v - ylo) / (yhi - ylo) * (kHeight - kMarginT - kMarginB);
  };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='"
      << kHeight << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-size='15'>"
      << title << "</text>\n";
  const int n_levels = 12;
  for (int li = 1; li <= n_levels; ++li) {
    // quadratic spacing resolves the valley floor better than linear
    const double frac = static_cast<double>(li) / (n_levels + 1);
    const double level = ev.lo + (ev.hi - ev.lo) * frac * frac;
    for (const auto& seg : contour_segments(f2, level, xlo, xhi, ylo, yhi, 120)) {
      svg << "<line x1='" << detail::fmt(px(seg[0])) << "' y1='"
          << detail::fmt(py(seg[1])) << "' x2='" << detail::fmt(px(seg[2]))
          << "' y2='" << detail::fmt(py(seg[3]))
          << "' stroke='#99bbdd' stroke-width='0.6'/>\n";
    }
  }
  std::ostringstream pts;
  for (size_t i = 0; i < trajectory.size(); ++i)
    pts << (i ? " L" : "M") << detail::fmt(px(trajectory[i][0])) << ' '
        << detail::fmt(py(trajectory[i][1]));
  svg << "<path d='" << pts.str()
      << "' fill='none' stroke='#d62728' stroke-width='1.2'/>\n";
  if (!trajectory.empty()) {
    svg << "<circle cx='" << detail::fmt(px(trajectory.front()[0])) << "' cy='"
        << detail::fmt(py(trajectory.front()[1])) << "' r='4' fill='#2ca02c'/>\n"
        << "<circle cx='" << detail::fmt(px(trajectory.back()[0])) << "' cy='"
        << detail::fmt(py(trajectory.back()[1])) << "' r='4' fill='#d62728'/>\n";
  }
  svg << "</svg>\n";
  harness::write_text_file(path, svg.str());
}

struct PlotReport {
  std::vector<std::string> written;
  std::vector<std::string> notices;
};

/// Render panels for every trace under `artifact_dir` into `out_dir`:
/// per-directory metric overlays plus one contour/trajectory panel per
/// 2-d trace.
inline PlotReport cmd_plot(const std::string& artifact_dir, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(artifact_dir))
    throw harness::IoError("no such directory: " + artifact_dir);
  std::vector<fs::path> traces;
  for (const auto& entry : fs::recursive_directory_iterator(artifact_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().string();
    if (name.size() > 10 && name.substr(name.size() - 10) == ".trace.csv")
      traces.push_back(entry.path());
  }
  std::sort(traces.begin(), traces.end());
  if (traces.empty())
    throw harness::IoError("no traces found under " + artifact_dir);

  PlotReport report;
  std::vector<Series> f_series, grad_series, lambda_series, step_series, f_feval;
  struct Pending {
    std::string stem;
    std::string problem_name;
    long dim = 0;
    std::vector<Eigen::VectorXd> traj;
  };
  std::vector<Pending> contour_jobs;
  for (const auto& tp : traces) {
    const auto records = trace::read_trace_file(tp.string());
    if (records.empty())
      throw harness::IoError("empty trace: " + tp.string());
    std::string stem = tp.filename().string();
    stem.erase(stem.size() - 10);
    Series sf{stem, {}, {}}, sg{stem, {}, {}}, sl{stem, {}, {}}, sa{stem, {}, {}},
        sff{stem, {}, {}};
    Pending pend;
    pend.stem = stem;
    pend.dim = records.front().x.size();
    for (const auto& rec : records) {
      const double k = static_cast<double>(rec.k);
      sf.x.push_back(k);
      sf.y.push_back(rec.f_true);
      sg.x.push_back(k);
      sg.y.push_back(rec.grad_true_norm);
      sl.x.push_back(k);
      sl.y.push_back(rec.lambda_true);
      sa.x.push_back(k);
      sa.y.push_back(rec.alpha_k);
      sff.x.push_back(static_cast<double>(rec.fevals_so_far));
      sff.y.push_back(rec.f_true);
      pend.traj.push_back(rec.x);
    }
    f_series.push_back(std::move(sf));
    grad_series.push_back(std::move(sg));
    lambda_series.push_back(std::move(sl));
    step_series.push_back(std::move(sa));
    f_feval.push_back(std::move(sff));
    // recover the problem from the config snapshot if present
    std::string base = tp.string();
    base.erase(base.size() - 10);
    std::ifstream cfg_is(base + ".config.txt");
    if (cfg_is) {
      const FlatConfig cfg = FlatConfig::parse(cfg_is);
      pend.problem_name = cfg.get_string("problem.name", "");
    }
    contour_jobs.push_back(std::move(pend));
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw harness::IoError("cannot create plot dir: " + out_dir);
  auto emit = [&](const std::string& file, const std::string& title,
                  const std::string& xl, const std::string& yl,
                  const std::vector<Series>& s, bool logy) {
    const std::string path = out_dir + "/" + file;
    line_panel(path, title, xl, yl, s, logy);
    report.written.push_back(path);
  };
  emit("objective_vs_iter.svg", "objective value", "iteration", "f", f_series, false);
  emit("gradnorm_vs_iter.svg", "gradient norm", "iteration", "||grad f||",
       grad_series, true);
  emit("lambda_vs_iter.svg", "minimum Hessian eigenvalue", "iteration",
       "lambda_min", lambda_series, false);
  emit("stepsize_vs_iter.svg", "step size", "iteration", "alpha", step_series, true);
  emit("objective_vs_fevals.svg", "objective value", "function evaluations", "f",
       f_feval, false);

  for (const auto& job : contour_jobs) {
    if (job.dim != 2) {
      report.notices.push_back("skipping contour for " + job.stem +
                               " (dim = " + std::to_string(job.dim) + ")");
      continue;
    }
    if (job.problem_name.empty()) {
      report.notices.push_back("skipping contour for " + job.stem +
                               " (no config snapshot)");
      continue;
    }
    const ProblemSpec prob = make_problem(job.problem_name, job.dim);
    const std::string path = out_dir + "/contour_" + job.stem + ".svg";
    contour_panel(path, "trajectory: " + job.stem, prob, job.traj);
    report.written.push_back(path);
  }
  return report;
}

}  // namespace plot
}  // namespace ncstep
