#include "bodx/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bodx/common.hpp"

namespace bodx::report {

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

struct Extent {
  double lo = kInf;
  double hi = kNegInf;

  void cover(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Shorter tick labels than full precision, stable across platforms.
std::string tick_label(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

struct Frame {
  double x0, y0, w, h;  // plot box in panel coordinates
  Extent ex, ey;

  double px(double x) const { return x0 + (x - ex.lo) / (ex.hi - ex.lo) * w; }
  double py(double y) const {
    return y0 + h - (y - ey.lo) / (ey.hi - ey.lo) * h;
  }
};

void draw_panel(std::ostream& out, const Panel& p, double ox, double oy,
                int pw, int ph) {
  constexpr double kLeft = 48.0, kRight = 12.0, kTop = 26.0, kBottom = 36.0;
  Frame fr;
  fr.x0 = kLeft;
  fr.y0 = kTop;
  fr.w = pw - kLeft - kRight;
  fr.h = ph - kTop - kBottom;
  for (const auto& b : p.bands) {
    for (double v : b.x) fr.ex.cover(v);
    for (double v : b.lo) fr.ey.cover(v);
    for (double v : b.hi) fr.ey.cover(v);
  }
  for (const auto& s : p.series) {
    for (double v : s.x) fr.ex.cover(v);
    for (double v : s.y) fr.ey.cover(v);
  }
  fr.ex.finish();
  fr.ey.finish();

  out << "<g transform=\"translate(" << num(ox) << ',' << num(oy) << ")\">\n";
  out << "<rect x=\"" << num(fr.x0) << "\" y=\"" << num(fr.y0) << "\" width=\""
      << num(fr.w) << "\" height=\"" << num(fr.h)
      << "\" fill=\"#ffffff\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  if (!p.title.empty())
    out << "<text x=\"" << num(pw / 2.0)
        << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\" "
           "fill=\"#111111\">"
        << p.title << "</text>\n";

  constexpr int kTicks = 4;
  for (int t = 0; t <= kTicks; ++t) {
    const double fx = fr.ex.lo + (fr.ex.hi - fr.ex.lo) * t / kTicks;
    const double gx = fr.px(fx);
    out << "<line x1=\"" << num(gx) << "\" y1=\"" << num(fr.y0 + fr.h)
        << "\" x2=\"" << num(gx) << "\" y2=\"" << num(fr.y0 + fr.h + 4)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num(gx) << "\" y=\"" << num(fr.y0 + fr.h + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\" fill=\"#333333\">"
        << tick_label(fx) << "</text>\n";
    const double fy = fr.ey.lo + (fr.ey.hi - fr.ey.lo) * t / kTicks;
    const double gy = fr.py(fy);
    out << "<line x1=\"" << num(fr.x0 - 4) << "\" y1=\"" << num(gy)
        << "\" x2=\"" << num(fr.x0) << "\" y2=\"" << num(gy)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << num(fr.x0 - 6) << "\" y=\"" << num(gy + 3)
        << "\" text-anchor=\"end\" font-size=\"10\" fill=\"#333333\">"
        << tick_label(fy) << "</text>\n";
  }
  if (!p.x_label.empty())
    out << "<text x=\"" << num(fr.x0 + fr.w / 2.0) << "\" y=\""
        << num(ph - 6.0)
        << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#111111\">"
        << p.x_label << "</text>\n";
  if (!p.y_label.empty())
    out << "<text x=\"12\" y=\"" << num(fr.y0 + fr.h / 2.0)
        << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#111111\" "
           "transform=\"rotate(-90 12 "
        << num(fr.y0 + fr.h / 2.0) << ")\">" << p.y_label << "</text>\n";

  for (const auto& b : p.bands) {
    const std::size_t n = std::min({b.x.size(), b.lo.size(), b.hi.size()});
    if (n < 2) continue;
    out << "<path d=\"M";
    for (std::size_t i = 0; i < n; ++i)
      out << (i ? " L" : "") << num(fr.px(b.x[i])) << ' '
          << num(fr.py(b.hi[i]));
    for (std::size_t i = n; i-- > 0;)
      out << " L" << num(fr.px(b.x[i])) << ' ' << num(fr.py(b.lo[i]));
    out << " Z\" fill=\"" << b.fill << "\" fill-opacity=\"" << num(b.opacity)
        << "\" stroke=\"none\"/>\n";
  }
  for (const auto& s : p.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (n < 2) continue;
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"" << num(s.width) << "\" points=\"";
    for (std::size_t i = 0; i < n; ++i)
      out << (i ? " " : "") << num(fr.px(s.x[i])) << ',' << num(fr.py(s.y[i]));
    out << "\"/>\n";
  }
  out << "</g>\n";
}

}  // namespace

void write_svg_panels(std::ostream& out, const std::vector<Panel>& panels,
                      int panel_w, int panel_h, int cols) {
  require(panel_w > 80 && panel_h > 80, "panel size too small to draw");
  require(cols >= 1, "panel grid needs at least one column");
  const int n = static_cast<int>(panels.size());
  const int c = std::max(1, std::min(cols, std::max(n, 1)));
  const int rows = n > 0 ? (n + c - 1) / c : 1;
  const int w = c * panel_w, h = rows * panel_h;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
      << "\" font-family=\"Helvetica, Arial, sans-serif\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"#ffffff\"/>\n";
  for (int i = 0; i < n; ++i)
    draw_panel(out, panels[i], (i % c) * panel_w, (i / c) * panel_h, panel_w,
               panel_h);
  out << "</svg>\n";
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.precision(12);
  return f;
}

}  // namespace

void write_profile_files(const efficiency::ProfileReport& rep,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  require(!dir.empty(), "profile output directory must be named");
  fs::create_directories(dir);
  const fs::path base(dir);

  std::vector<Panel> panels;
  for (const auto& c : rep.coords) {
    auto f = open_out(base / ("profile_coord_" + std::to_string(c.coord) +
                              ".csv"));
    f << "beta,mean,q10,q90\n";
    for (std::size_t k = 0; k < c.beta.size(); ++k)
      f << c.beta[k] << ',' << c.mean[k] << ',' << c.q10[k] << ',' << c.q90[k]
        << '\n';

    Panel p;
    p.title = c.label;
    p.x_label = c.label;
    p.y_label = "efficiency";
    Band band;
    band.x = c.beta;
    band.lo = c.q10;
    band.hi = c.q90;
    p.bands.push_back(std::move(band));
    Series mean;
    mean.x = c.beta;
    mean.y = c.mean;
    p.series.push_back(std::move(mean));
    panels.push_back(std::move(p));
  }

  {
    auto f = open_out(base / "marginal_kde.csv");
    f << "eff,density\n";
    for (std::size_t k = 0; k < rep.kde_eff.size(); ++k)
      f << rep.kde_eff[k] << ',' << rep.kde_density[k] << '\n';
  }

  Panel marginal;
  marginal.title = "marginal efficiency";
  marginal.x_label = "efficiency";
  marginal.y_label = "density";
  Series dens;
  dens.x = rep.kde_eff;
  dens.y = rep.kde_density;
  dens.color = "#7a1f1f";
  marginal.series.push_back(std::move(dens));
  panels.push_back(std::move(marginal));

  auto svg = open_out(base / "profile.svg");
  write_svg_panels(svg, panels);
}

}  // namespace bodx::report
