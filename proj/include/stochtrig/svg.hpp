#pragma once

// Static SVG 1.1 log-log chart of an ErrorTable: both error components, their
// fitted lines and the slopes printed in the corner.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "stochtrig/analysis.hpp"

namespace stochtrig::svg {

namespace detail {

inline std::string num(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;  // log2 extents
  double left = 80, right = 580, top = 40, bottom = 360;

  double px(double lx) const { return left + (lx - x0) / (x1 - x0) * (right - left); }
  double py(double ly) const { return bottom - (ly - y0) / (y1 - y0) * (bottom - top); }
};

inline void polyline(std::ostream& out, const Frame& f, const std::vector<double>& lx, const std::vector<double>& ly,
                     const std::string& colour, const std::string& dash = "") {
  out << "  <polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"";
  if (!dash.empty()) out << " stroke-dasharray=\"" << dash << "\"";
  out << " points=\"";
  for (std::size_t i = 0; i < lx.size(); ++i) out << (i ? " " : "") << num(f.px(lx[i])) << ',' << num(f.py(ly[i]));
  out << "\"/>\n";
}

}  // namespace detail

/// `x_label` names the varied parameter ("h" or "k").
inline void write_rate_chart(const analysis::ErrorTable& table, const std::string& x_label, std::ostream& out) {
  using detail::num;
  std::vector<double> lx, lre, lim;
  for (const auto& row : table.rows) {
    lx.push_back(std::log2(row.level));
    lre.push_back(std::log2(std::max(row.rms_re, 1e-300)));
    lim.push_back(std::log2(std::max(row.rms_im, 1e-300)));
  }
  detail::Frame f{};
  if (lx.empty()) {
    f.x0 = -1, f.x1 = 0, f.y0 = -1, f.y1 = 0;
  } else {
    f.x0 = std::floor(*std::min_element(lx.begin(), lx.end())) - 0.5;
    f.x1 = std::ceil(*std::max_element(lx.begin(), lx.end())) + 0.5;
    const double lo = std::min(*std::min_element(lre.begin(), lre.end()), *std::min_element(lim.begin(), lim.end()));
    const double hi = std::max(*std::max_element(lre.begin(), lre.end()), *std::max_element(lim.begin(), lim.end()));
    f.y0 = std::floor(lo) - 0.5;
    f.y1 = std::ceil(hi) + 0.5;
  }

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"420\" "
         "viewBox=\"0 0 640 420\">\n"
      << "  <rect width=\"640\" height=\"420\" fill=\"white\"/>\n"
      << "  <rect x=\"80\" y=\"40\" width=\"500\" height=\"320\" fill=\"none\" stroke=\"black\"/>\n";

  for (int e = static_cast<int>(std::ceil(f.x0)); e <= static_cast<int>(std::floor(f.x1)); ++e) {
    const double x = f.px(e);
    out << "  <line x1=\"" << num(x) << "\" y1=\"360\" x2=\"" << num(x) << "\" y2=\"40\" stroke=\"#dddddd\"/>\n"
        << "  <text x=\"" << num(x) << "\" y=\"378\" font-family=\"sans-serif\" font-size=\"12\" "
        << "text-anchor=\"middle\">2^" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(f.y0)); e <= static_cast<int>(std::floor(f.y1)); ++e) {
    const double y = f.py(e);
    out << "  <line x1=\"80\" y1=\"" << num(y) << "\" x2=\"580\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n"
        << "  <text x=\"74\" y=\"" << num(y + 4) << "\" font-family=\"sans-serif\" font-size=\"12\" "
        << "text-anchor=\"end\">2^" << e << "</text>\n";
  }
  out << "  <text x=\"330\" y=\"404\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">" << x_label
      << "</text>\n"
      << "  <text x=\"20\" y=\"200\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 200)\">rms error</text>\n";

  const auto series = [&](const std::vector<double>& ly, const analysis::RegressionResult& fit,
                          const std::string& colour) {
    if (lx.empty()) return;
    detail::polyline(out, f, lx, ly, colour);
    for (std::size_t i = 0; i < lx.size(); ++i)
      out << "  <circle cx=\"" << num(f.px(lx[i])) << "\" cy=\"" << num(f.py(ly[i])) << "\" r=\"3\" fill=\"" << colour
          << "\"/>\n";
    const std::vector<double> ends = {lx.front(), lx.back()};
    detail::polyline(out, f, ends, {fit.intercept + fit.slope * ends[0], fit.intercept + fit.slope * ends[1]}, colour,
                     "5,4");
  };
  series(lre, table.fit_re, "#1f77b4");
  series(lim, table.fit_im, "#d62728");

  out << "  <text x=\"92\" y=\"60\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#1f77b4\">u1: slope "
      << num(table.fit_re.slope, 3) << " &#177; " << num(table.fit_re.ci, 3) << "</text>\n"
      << "  <text x=\"92\" y=\"78\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#d62728\">u2: slope "
      << num(table.fit_im.slope, 3) << " &#177; " << num(table.fit_im.ci, 3) << "</text>\n"
      << "  <text x=\"92\" y=\"96\" font-family=\"sans-serif\" font-size=\"13\">combined: slope "
      << num(table.fit_combined.slope, 3) << "</text>\n"
      << "</svg>\n";
}

}  // namespace stochtrig::svg
