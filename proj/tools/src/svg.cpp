#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <utility>

namespace splinehmm {
namespace svg {

namespace {

const std::string kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

}  // namespace

const std::string& palette_color(int index) {
  const int n = static_cast<int>(sizeof kPalette / sizeof kPalette[0]);
  return kPalette[((index % n) + n) % n];
}

Chart::Chart(std::string title, std::string xlabel, std::string ylabel,
             int width, int height)
    : title_(std::move(title)),
      xlabel_(std::move(xlabel)),
      ylabel_(std::move(ylabel)),
      width_(width),
      height_(height) {}

void Chart::add_line(Series s) { lines_.push_back(std::move(s)); }
void Chart::add_band(Band b) { bands_.push_back(std::move(b)); }
void Chart::add_points(Points p) { points_.push_back(std::move(p)); }

std::string Chart::render() const {
  Range rx, ry;
  for (const Series& s : lines_)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) {
        rx.add(s.x[i]);
        ry.add(s.y[i]);
      }
  for (const Band& b : bands_)
    for (std::size_t i = 0; i < b.x.size(); ++i)
      if (std::isfinite(b.lo[i]) && std::isfinite(b.hi[i])) {
        rx.add(b.x[i]);
        ry.add(b.lo[i]);
        ry.add(b.hi[i]);
      }
  for (const Points& p : points_)
    for (std::size_t i = 0; i < p.x.size(); ++i)
      if (std::isfinite(p.y[i])) {
        rx.add(p.x[i]);
        ry.add(p.y[i]);
      }
  rx.finish();
  ry.finish();

  const double ml = 64, mr = 16, mt = 30, mb = 46;
  const double pw = width_ - ml - mr;
  const double ph = height_ - mt - mb;
  const auto px = [&](double x) { return ml + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  const auto py = [&](double y) {
    return mt + ph - (y - ry.lo) / (ry.hi - ry.lo) * ph;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
      << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << " "
      << height_ << "\">\n";
  out << "<rect width=\"" << width_ << "\" height=\"" << height_
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width_ / 2.0 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << escape(title_)
      << "</text>\n";

  // Grid and ticks.
  const int nticks = 5;
  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
  for (int i = 0; i <= nticks; ++i) {
    const double fx = rx.lo + (rx.hi - rx.lo) * i / nticks;
    const double gx = px(fx);
    out << "<line x1=\"" << gx << "\" y1=\"" << mt << "\" x2=\"" << gx
        << "\" y2=\"" << mt + ph << "\" stroke=\"#e5e5e5\"/>\n";
    out << "<text x=\"" << gx << "\" y=\"" << mt + ph + 16
        << "\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
    const double fy = ry.lo + (ry.hi - ry.lo) * i / nticks;
    const double gy = py(fy);
    out << "<line x1=\"" << ml << "\" y1=\"" << gy << "\" x2=\"" << ml + pw
        << "\" y2=\"" << gy << "\" stroke=\"#e5e5e5\"/>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
  }
  out << "</g>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\">" << escape(xlabel_) << "</text>\n";
  out << "<text x=\"14\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\" transform=\"rotate(-90 14 " << mt + ph / 2 << ")\">"
      << escape(ylabel_) << "</text>\n";

  for (const Band& b : bands_) {
    std::ostringstream up, down;
    bool any = false;
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      if (!std::isfinite(b.lo[i]) || !std::isfinite(b.hi[i])) continue;
      up << (any ? " " : "") << fmt(px(b.x[i])) << "," << fmt(py(b.hi[i]));
      any = true;
    }
    for (std::size_t j = b.x.size(); j-- > 0;) {
      if (!std::isfinite(b.lo[j]) || !std::isfinite(b.hi[j])) continue;
      down << " " << fmt(px(b.x[j])) << "," << fmt(py(b.lo[j]));
    }
    if (any)
      out << "<polygon points=\"" << up.str() << down.str() << "\" fill=\""
          << b.color << "\" fill-opacity=\"" << b.opacity
          << "\" stroke=\"none\"/>\n";
  }

  for (const Series& s : lines_) {
    std::ostringstream seg;
    bool open = false;
    const auto flush = [&]() {
      if (open)
        out << "<polyline points=\"" << seg.str() << "\" fill=\"none\" "
            << "stroke=\"" << s.color << "\" stroke-width=\"" << s.width
            << "\" stroke-opacity=\"" << s.opacity << "\"/>\n";
      seg.str("");
      open = false;
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      seg << (open ? " " : "") << fmt(px(s.x[i])) << "," << fmt(py(s.y[i]));
      open = true;
    }
    flush();
  }

  for (const Points& p : points_)
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      if (!std::isfinite(p.x[i]) || !std::isfinite(p.y[i])) continue;
      const int cls = i < p.cls.size() ? p.cls[i] : 0;
      out << "<circle cx=\"" << fmt(px(p.x[i])) << "\" cy=\""
          << fmt(py(p.y[i])) << "\" r=\"" << p.radius << "\" fill=\""
          << palette_color(cls) << "\" fill-opacity=\"0.8\"/>\n";
    }

  out << "</svg>\n";
  return out.str();
}

}  // namespace svg
}  // namespace splinehmm
