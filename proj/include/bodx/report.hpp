#ifndef BODX_REPORT_HPP
#define BODX_REPORT_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bodx/efficiency.hpp"

// CSV quoting, static SVG line charts, and the profile report file set.
namespace bodx::report {

// RFC-4180 field quoting: wraps in double quotes (doubling inner quotes)
// when the field contains a comma, quote, or line break.
std::string csv_escape(std::string_view field);

struct Series {
  std::vector<double> x, y;
  std::string color = "#1a1a1a";
  double width = 1.5;
};

struct Band {
  std::vector<double> x, lo, hi;
  std::string fill = "#9db8d2";
  double opacity = 0.45;
};

struct Panel {
  std::string title;
  std::string x_label, y_label;
  std::vector<Band> bands;
  std::vector<Series> series;
};

// Grid of fixed-size panels, `cols` per row; axes and tick labels included,
// no scripting or interactivity.
void write_svg_panels(std::ostream& out, const std::vector<Panel>& panels,
                      int panel_w = 340, int panel_h = 250, int cols = 3);

// The profile file set inside `dir` (created if needed): one
// profile_coord_<j>.csv per coordinate (beta,mean,q10,q90), marginal_kde.csv
// (eff,density), and profile.svg with one panel per coordinate plus the
// marginal density panel.
void write_profile_files(const efficiency::ProfileReport& rep,
                         const std::string& dir);

}  // namespace bodx::report

#endif
