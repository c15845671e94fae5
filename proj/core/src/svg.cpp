#include "smart/svg.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace smart {

namespace {

constexpr double kHalfWidth = 4.0;
constexpr double kPixels = 800.0;
constexpr double kScale = kPixels / (2.0 * kHalfWidth);
constexpr double kCross = 5.0;

double px(double x) { return (x + kHalfWidth) * kScale; }
double py(double y) { return (kHalfWidth - y) * kScale; }

void append(std::string& out, const char* fmt, double a, double b, double c, double d) {
  char buf[160];
  const int n = std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string scatter_svg(const Matrix2D& samples, const GridMixture& mix) {
  if (!samples.empty() && samples.cols() != 2) {
    throw std::invalid_argument("scatter_svg: samples must have 2 columns, got " +
                                samples.shape_string());
  }
  std::string out;
  out.reserve(256 + samples.rows() * 48 + mix.size() * 120);
  out +=
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" "
      "viewBox=\"0 0 800 800\">\n"
      "<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n"
      "<g stroke=\"#999999\" stroke-width=\"1\">\n";
  append(out, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", 0.0, py(0.0), kPixels,
         py(0.0));
  append(out, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", px(0.0), 0.0, px(0.0),
         kPixels);
  out += "</g>\n<g fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    char buf[96];
    const int n = std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\"/>\n",
                                px(samples(r, 0)), py(samples(r, 1)));
    out.append(buf, static_cast<std::size_t>(n));
  }
  out += "</g>\n<g stroke=\"#d62728\" stroke-width=\"1.5\">\n";
  for (const Point2& c : mix.centers()) {
    const double x = px(c.x);
    const double y = py(c.y);
    append(out, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", x - kCross, y - kCross,
           x + kCross, y + kCross);
    append(out, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n", x - kCross, y + kCross,
           x + kCross, y - kCross);
  }
  out += "</g>\n</svg>\n";
  return out;
}

void render_scatter(const Matrix2D& samples, const GridMixture& mix,
                    const std::filesystem::path& path) {
  const std::string text = scatter_svg(samples, mix);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("render_scatter: cannot open " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("render_scatter: write failed for " + path.string());
}

}  // namespace smart
