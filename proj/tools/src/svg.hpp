// Minimal static SVG charts for the plot artifacts.
#pragma once

#include <string>
#include <vector>

namespace splinehmm {
namespace svg {

struct Series {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  double width = 1.5;
  double opacity = 1.0;
};

struct Band {
  std::vector<double> x, lo, hi;
  std::string color = "#1f77b4";
  double opacity = 0.2;
};

// Scatter points; cls picks the palette color per point.
struct Points {
  std::vector<double> x, y;
  std::vector<int> cls;
  double radius = 1.6;
};

const std::string& palette_color(int index);

class Chart {
 public:
  Chart(std::string title, std::string xlabel, std::string ylabel,
        int width = 760, int height = 380);

  void add_line(Series s);
  void add_band(Band b);
  void add_points(Points p);

  // Complete standalone <svg> document; NaN samples split lines and are
  // dropped from ranges.
  std::string render() const;

 private:
  std::string title_, xlabel_, ylabel_;
  int width_, height_;
  std::vector<Series> lines_;
  std::vector<Band> bands_;
  std::vector<Points> points_;
};

}  // namespace svg
}  // namespace splinehmm
