#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "cwsc/harness.hpp"
#include "cwsc/spectral.hpp"

namespace cwsc::harness {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 48.0;
constexpr const char* kReferenceColor = "#d62728";
constexpr const char* kPalette[] = {"#1f4fbf", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Box {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(lo < hi)) {
    const double pad = lo == 0.0 ? 1.0 : 0.5 * std::abs(lo);
    lo -= pad;
    hi += pad;
  }
}

std::string polyline(const Box& box, const std::vector<double>& x, const std::vector<double>& y, const std::string& color) {
  std::string pts;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    if (!pts.empty()) pts += ' ';
    pts += num(box.px(x[i])) + "," + num(box.py(y[i]));
  }
  return "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

}  // namespace

std::string render_svg(const std::vector<Curve>& curves, bool reference_density, const std::string& title) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < std::min(c.x.size(), c.y.size()); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.y[i]);
      y1 = std::max(y1, c.y[i]);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = reference_density ? -2.5 : 0.0;
    x1 = reference_density ? 2.5 : 1.0;
  }
  if (reference_density) {
    y0 = std::min(y0, 0.0);
    y1 = std::max(y1, 1.0 / std::numbers::pi);
  }
  if (!std::isfinite(y0)) {
    y0 = 0.0;
    y1 = 1.0;
  }
  widen(x0, x1);
  widen(y0, y1);
  y1 += 0.05 * (y1 - y0);
  const Box box{x0, x1, y0, y1};

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                    num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
           escape(title) + "</text>\n";
  }
  // Axes and ticks.
  const double left = kLeft, right = kWidth - kRight, top = kTop, bottom = kHeight - kBottom;
  svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(right) + "\" y2=\"" + num(bottom) + "\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(left) + "\" y2=\"" + num(top) + "\"/>\n";
  svg += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0;
    const double yv = y0 + (y1 - y0) * k / 5.0;
    const double px = box.px(xv), py = box.py(yv);
    svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(px) + "\" y2=\"" + num(bottom + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(bottom + 18) + "\" text-anchor=\"middle\">" + num(xv) + "</text>\n";
    svg += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(left) + "\" y2=\"" + num(py) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" + num(yv) + "</text>\n";
  }
  svg += "</g>\n";

  if (reference_density) {
    std::vector<double> x, y;
    const double a = std::max(x0, -2.0), b = std::min(x1, 2.0);
    if (a < b) {
      for (int i = 0; i <= 800; ++i) {
        x.push_back(a + (b - a) * i / 800.0);
        y.push_back(spectral::semicircle_density(x.back()));
      }
    }
    svg += polyline(box, x, y, kReferenceColor);
  }
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const std::string color = curves[i].color.empty() ? kPalette[i % std::size(kPalette)] : curves[i].color;
    svg += polyline(box, curves[i].x, curves[i].y, color);
  }

  // Legend.
  std::vector<std::pair<std::string, std::string>> entries;
  if (reference_density) entries.emplace_back("semicircle density", kReferenceColor);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    entries.emplace_back(curves[i].label, curves[i].color.empty() ? kPalette[i % std::size(kPalette)] : curves[i].color);
  }
  svg += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double y = top + 14 + 18.0 * static_cast<double>(i);
    svg += "<line x1=\"" + num(right - 190) + "\" y1=\"" + num(y - 4) + "\" x2=\"" + num(right - 166) + "\" y2=\"" +
           num(y - 4) + "\" stroke=\"" + entries[i].second + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(right - 160) + "\" y=\"" + num(y) + "\">" + escape(entries[i].first) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

void emit_svg(const fs::path& file, const std::vector<Curve>& curves, bool reference_density, const std::string& title) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + file.string() + "'");
  out << render_svg(curves, reference_density, title);
  if (!out) fail(ErrorKind::IoError, "write to '" + file.string() + "' failed");
}

std::vector<Curve> curves_from_rows(const std::vector<Row>& rows) {
  std::vector<Curve> out;
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& r : rows) {
    const std::pair<std::string, double> key{r.statistic, r.z_imag};
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      Curve c;
      c.label = r.z_imag != 0.0 ? r.statistic + " (eta = " + num(r.z_imag) + ")" : r.statistic;
      c.color = r.statistic == "semicircle_density" ? kReferenceColor : kPalette[(out.size()) % std::size(kPalette)];
      out.push_back(std::move(c));
      it = keys.end() - 1;
    }
    auto& c = out[static_cast<std::size_t>(it - keys.begin())];
    c.x.push_back(r.z_real);
    c.y.push_back(r.value);
  }
  return out;
}

void plot_csv(const fs::path& csv, const fs::path& svg) {
  emit_svg(svg, curves_from_rows(read_csv(csv)), false, csv.filename().string());
}

}  // namespace cwsc::harness
