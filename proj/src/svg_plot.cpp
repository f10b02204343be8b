#include "ismpc/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ismpc {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
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
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void pad(double frac, double min_span) {
    if (!std::isfinite(x0)) *this = {0.0, 1.0, 0.0, 1.0};
    const double dx = std::max(x1 - x0, min_span);
    const double dy = std::max(y1 - y0, min_span);
    const double cx = 0.5 * (x0 + x1);
    const double cy = 0.5 * (y0 + y1);
    x0 = cx - 0.5 * dx * (1 + frac);
    x1 = cx + 0.5 * dx * (1 + frac);
    y0 = cy - 0.5 * dy * (1 + frac);
    y1 = cy + 0.5 * dy * (1 + frac);
  }
};

// Maps data coordinates into a plot area.
struct Frame {
  Box box;
  double left, top, w, h;

  double px(double x) const { return left + (x - box.x0) / (box.x1 - box.x0) * w; }
  double py(double y) const { return top + h - (y - box.y0) / (box.y1 - box.y0) * h; }
};

double niceStep(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

std::string header(int width, int height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string axes(const Frame& f, const std::string& title, const std::string& xl, const std::string& yl) {
  std::string s;
  s += "<text x=\"" + fmt(f.left + f.w / 2) + "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">" + escape(title) +
       "</text>\n";
  s += "<rect x=\"" + fmt(f.left) + "\" y=\"" + fmt(f.top) + "\" width=\"" + fmt(f.w) + "\" height=\"" + fmt(f.h) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  const double sx = niceStep(f.box.x1 - f.box.x0, 8);
  for (double v = std::ceil(f.box.x0 / sx) * sx; v <= f.box.x1 + 1e-12; v += sx) {
    const double x = f.px(v);
    s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(f.top) + "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(f.top + f.h) +
         "\" stroke=\"#e4e4e4\"/>\n";
    s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(f.top + f.h + 14) + "\" text-anchor=\"middle\">" +
         fmt(std::abs(v) < 1e-12 ? 0.0 : v) + "</text>\n";
  }
  const double sy = niceStep(f.box.y1 - f.box.y0, 6);
  for (double v = std::ceil(f.box.y0 / sy) * sy; v <= f.box.y1 + 1e-12; v += sy) {
    const double y = f.py(v);
    s += "<line x1=\"" + fmt(f.left) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(f.left + f.w) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"#e4e4e4\"/>\n";
    s += "<text x=\"" + fmt(f.left - 4) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" +
         fmt(std::abs(v) < 1e-12 ? 0.0 : v) + "</text>\n";
  }
  s += "<text x=\"" + fmt(f.left + f.w / 2) + "\" y=\"" + fmt(f.top + f.h + 30) + "\" text-anchor=\"middle\">" +
       escape(xl) + "</text>\n";
  s += "<text x=\"14\" y=\"" + fmt(f.top + f.h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       fmt(f.top + f.h / 2) + ")\">" + escape(yl) + "</text>\n";
  return s;
}

std::string polyline(const Frame& f, const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& color, bool dashed, double width = 1.5) {
  std::string pts;
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    if (!pts.empty()) pts += ' ';
    pts += fmt(f.px(x[i])) + "," + fmt(f.py(y[i]));
  }
  return "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width) + "\"" +
         (dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"" + pts + "\"/>\n";
}

std::string legend(const Frame& f, const std::vector<std::pair<std::string, std::pair<std::string, bool>>>& items) {
  std::string s;
  double y = f.top + 12;
  for (const auto& [label, style] : items) {
    const double x = f.left + f.w - 150;
    s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y - 4) + "\" x2=\"" + fmt(x + 22) + "\" y2=\"" + fmt(y - 4) +
         "\" stroke=\"" + style.first + "\" stroke-width=\"2\"" + (style.second ? " stroke-dasharray=\"6 4\"" : "") +
         "/>\n";
    s += "<text x=\"" + fmt(x + 28) + "\" y=\"" + fmt(y) + "\">" + escape(label) + "</text>\n";
    y += 15;
  }
  return s;
}

}  // namespace

std::string lineChartSvg(const std::string& title, const std::string& x_label, const std::string& y_label,
                         const std::vector<SvgSeries>& series, int width, int height) {
  Frame f;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) f.box.add(s.x[i], s.y[i]);
  f.box.pad(0.08, 1e-6);
  f.left = 70;
  f.top = 28;
  f.w = width - 90;
  f.h = height - 72;
  std::string out = header(width, height) + axes(f, title, x_label, y_label);
  std::vector<std::pair<std::string, std::pair<std::string, bool>>> items;
  for (const auto& s : series) {
    out += polyline(f, s.x, s.y, s.color, s.dashed);
    items.push_back({s.label, {s.color, s.dashed}});
  }
  out += legend(f, items);
  out += "</svg>\n";
  return out;
}

std::string gaitPlotSvg(const ScenarioResult& result, const ScenarioResult* overlay) {
  const Eigen::Vector2d half = result.timing.halfFootprint();
  Frame f;
  auto addRun = [&](const ScenarioResult& r) {
    for (const auto& s : r.samples) {
      f.box.add(s.state[0].com_pos, s.state[1].com_pos);
      f.box.add(s.state[0].zmp_pos, s.state[1].zmp_pos);
    }
    for (const auto& st : r.realized_steps) {
      f.box.add(st.x - half(0), st.y - half(1));
      f.box.add(st.x + half(0), st.y + half(1));
    }
  };
  addRun(result);
  if (overlay) addRun(*overlay);
  f.box.pad(0.1, 0.05);
  // Equal axis scaling.
  const int width = 900;
  f.left = 70;
  f.top = 28;
  f.w = width - 90;
  const double scale = f.w / (f.box.x1 - f.box.x0);
  f.h = std::clamp((f.box.y1 - f.box.y0) * scale, 120.0, 600.0);
  const double span_y = f.h / scale;
  const double cy = 0.5 * (f.box.y0 + f.box.y1);
  f.box.y0 = cy - span_y / 2;
  f.box.y1 = cy + span_y / 2;
  const int height = static_cast<int>(std::lround(f.h + 72));

  std::string out = header(width, height) + axes(f, result.name + " (" + toString(result.mode) + ")", "x [m]", "y [m]");
  auto footprints = [&](const std::vector<Footstep>& steps, const std::string& stroke, bool dashed) {
    std::string s;
    for (const auto& st : steps) {
      const double cx = f.px(st.x), cyp = f.py(st.y);
      const double deg = -st.orientation * 180.0 / 3.14159265358979323846;
      s += "<rect x=\"" + fmt(cx - half(0) * scale) + "\" y=\"" + fmt(cyp - half(1) * scale) + "\" width=\"" +
           fmt(2 * half(0) * scale) + "\" height=\"" + fmt(2 * half(1) * scale) + "\" fill=\"none\" stroke=\"" +
           stroke + "\"" + (dashed ? " stroke-dasharray=\"3 3\"" : "") + " transform=\"rotate(" + fmt(deg) + " " +
           fmt(cx) + " " + fmt(cyp) + ")\"/>\n";
    }
    return s;
  };
  out += footprints(result.realized_steps, "#555", false);
  bool moved = false;
  for (std::size_t j = 0; j < result.planned_steps.size() && j < result.realized_steps.size(); ++j)
    if ((result.planned_steps[j].position() - result.realized_steps[j].position()).norm() > 1e-9) moved = true;
  if (moved) out += footprints(result.planned_steps, "#bbb", true);

  auto paths = [&](const ScenarioResult& r, bool dashed) {
    std::vector<double> cx, cy2, zx, zy;
    for (const auto& s : r.samples) {
      cx.push_back(s.state[0].com_pos);
      cy2.push_back(s.state[1].com_pos);
      zx.push_back(s.state[0].zmp_pos);
      zy.push_back(s.state[1].zmp_pos);
    }
    return polyline(f, zx, zy, dashed ? "#ff9f4a" : "#d62728", dashed, 1.2) +
           polyline(f, cx, cy2, dashed ? "#6baed6" : "#1f4fb4", dashed, 1.8);
  };
  out += paths(result, false);
  std::vector<std::pair<std::string, std::pair<std::string, bool>>> items = {{"CoM", {"#1f4fb4", false}},
                                                                              {"ZMP", {"#d62728", false}}};
  if (overlay) {
    out += paths(*overlay, true);
    items.push_back({"CoM (" + overlay->name + ")", {"#6baed6", true}});
    items.push_back({"ZMP (" + overlay->name + ")", {"#ff9f4a", true}});
  }
  out += legend(f, items);

  // Mean disturbance arrow, scaled so that 1 m/s^2 spans 80 px.
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& s : result.samples) mean += s.disturbance;
  if (!result.samples.empty()) mean /= static_cast<double>(result.samples.size());
  if (mean.norm() > 1e-9) {
    const double x0 = f.left + 40, y0 = f.top + f.h - 40;
    const double x1 = x0 + 80 * mean(0), y1 = y0 - 80 * mean(1);
    out += "<defs><marker id=\"head\" markerWidth=\"8\" markerHeight=\"8\" refX=\"6\" refY=\"4\" orient=\"auto\">"
           "<path d=\"M0,0 L8,4 L0,8 z\" fill=\"#2ca02c\"/></marker></defs>\n";
    out += "<line x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x1) + "\" y2=\"" + fmt(y1) +
           "\" stroke=\"#2ca02c\" stroke-width=\"2.5\" marker-end=\"url(#head)\"/>\n";
    out += "<text x=\"" + fmt(x0) + "\" y=\"" + fmt(y0 + 16) + "\" fill=\"#2ca02c\">mean d</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string disturbancePlotSvg(const ScenarioResult& result) {
  SvgSeries dx{"d_x", {}, {}, "#1f4fb4", false}, dy{"d_y", {}, {}, "#d62728", false};
  SvgSeries ex{"d_x estimate", {}, {}, "#6baed6", true}, ey{"d_y estimate", {}, {}, "#ff9f4a", true};
  for (const auto& s : result.samples) {
    for (SvgSeries* p : {&dx, &dy, &ex, &ey}) p->x.push_back(s.time);
    dx.y.push_back(s.disturbance(0));
    dy.y.push_back(s.disturbance(1));
    ex.y.push_back(s.estimate[0].disturbance());
    ey.y.push_back(s.estimate[1].disturbance());
  }
  return lineChartSvg(result.name + ": disturbance", "t [s]", "d [m/s^2]", {dx, dy, ex, ey});
}

std::string divergencePlotSvg(const ScenarioResult& result) {
  SvgSeries ux{"x_u - x_z", {}, {}, "#1f4fb4", false}, uy{"y_u - y_z", {}, {}, "#d62728", false};
  for (const auto& s : result.samples) {
    ux.x.push_back(s.time);
    uy.x.push_back(s.time);
    ux.y.push_back(decompose(s.state[0], result.lip).unstable - s.state[0].zmp_pos);
    uy.y.push_back(decompose(s.state[1], result.lip).unstable - s.state[1].zmp_pos);
  }
  return lineChartSvg(result.name + ": divergent component", "t [s]", "[m]", {ux, uy});
}

}  // namespace ismpc
