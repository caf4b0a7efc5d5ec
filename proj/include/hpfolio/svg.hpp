#pragma once

// Minimal self-contained SVG line plots for benchmark curves. Two panels:
// ADTM (left) and average rank (right) over iterations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hpfolio/bench.hpp"
#include "hpfolio/serialize.hpp"

namespace hpfolio::svg {

namespace detail {

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {"#1b6ca8", "#d1495b", "#66a182", "#edae49",
                                                  "#8d96a3", "#5f4b8b", "#2e4057", "#c08552"};
  return colors;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

struct Panel {
  double x0, y0, w, h;
  double vmin, vmax;
  std::size_t t_max;

  double px(std::size_t t) const {
    if (t_max <= 1) return x0;
    return x0 + w * static_cast<double>(t) / static_cast<double>(t_max - 1);
  }
  double py(double v) const {
    const double span = vmax > vmin ? vmax - vmin : 1.0;
    return y0 + h - h * (v - vmin) / span;
  }
};

inline void draw_panel(std::string& out, const Panel& p, const std::string& title,
                       const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& curves) {
  out += "<rect x='" + num(p.x0) + "' y='" + num(p.y0) + "' width='" + num(p.w) + "' height='" +
         num(p.h) + "' fill='none' stroke='#444'/>\n";
  out += "<text x='" + num(p.x0 + p.w / 2) + "' y='" + num(p.y0 - 10) +
         "' text-anchor='middle' font-size='14'>" + title + "</text>\n";
  out += "<text x='" + num(p.x0 - 6) + "' y='" + num(p.py(p.vmax) + 4) +
         "' text-anchor='end' font-size='10'>" + num(p.vmax) + "</text>\n";
  out += "<text x='" + num(p.x0 - 6) + "' y='" + num(p.py(p.vmin) + 4) +
         "' text-anchor='end' font-size='10'>" + num(p.vmin) + "</text>\n";
  out += "<text x='" + num(p.x0) + "' y='" + num(p.y0 + p.h + 16) +
         "' text-anchor='middle' font-size='10'>1</text>\n";
  out += "<text x='" + num(p.x0 + p.w) + "' y='" + num(p.y0 + p.h + 16) +
         "' text-anchor='middle' font-size='10'>" + std::to_string(p.t_max) + "</text>\n";
  for (std::size_t s = 0; s < curves.size(); ++s) {
    const auto& color = palette()[s % palette().size()];
    out += "<polyline fill='none' stroke='" + color + "' stroke-width='1.5' points='";
    for (std::size_t t = 0; t < curves[s].size(); ++t) {
      if (t > 0) out += ' ';
      out += num(p.px(t)) + "," + num(p.py(curves[s][t]));
    }
    out += "'/>\n";
    (void)names;
  }
}

}  // namespace detail

inline std::string render_curves_svg(const bench::BenchReport& r) {
  const double width = 900, height = 380;
  std::string out = "<svg xmlns='http://www.w3.org/2000/svg' width='" + detail::num(width) +
                    "' height='" + detail::num(height) + "' viewBox='0 0 " + detail::num(width) +
                    " " + detail::num(height) + "'>\n";
  out += "<rect width='100%' height='100%' fill='white'/>\n";

  auto bounds = [](const std::vector<std::vector<double>>& curves) {
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const auto& c : curves)
      for (double v : c) {
        if (first || v < lo) lo = v;
        if (first || v > hi) hi = v;
        first = false;
      }
    if (lo == hi) hi = lo + 1.0;
    return std::pair<double, double>(lo, hi);
  };

  const auto [alo, ahi] = bounds(r.adtm_curves);
  detail::Panel left{60, 40, 330, 280, alo, ahi, r.t_max};
  detail::draw_panel(out, left, "ADTM", r.strategy_names, r.adtm_curves);

  const auto [rlo, rhi] = bounds(r.rank_curves);
  detail::Panel right{480, 40, 330, 280, rlo, rhi, r.t_max};
  detail::draw_panel(out, right, "average rank", r.strategy_names, r.rank_curves);

  double ly = 60;
  for (std::size_t s = 0; s < r.strategy_names.size(); ++s) {
    const auto& color = detail::palette()[s % detail::palette().size()];
    out += "<rect x='830' y='" + detail::num(ly - 8) + "' width='12' height='3' fill='" + color +
           "'/>\n";
    out += "<text x='848' y='" + detail::num(ly - 3) + "' font-size='11'>" +
           r.strategy_names[s] + "</text>\n";
    ly += 18;
  }
  out += "<text x='" + detail::num(width / 2) + "' y='" + detail::num(height - 12) +
         "' text-anchor='middle' font-size='12'>iteration</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace hpfolio::svg
