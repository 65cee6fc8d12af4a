#include "boxnet/render.hpp"

#include <array>
#include <cstdio>

namespace boxnet {

namespace {

constexpr double kMargin = 40.0;
constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
                                                 "#8c564b", "#e377c2", "#17becf", "#bcbd22"};

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

class Canvas {
 public:
  Canvas(const EnvConfig& cfg, double scale) : cfg_(cfg), scale_(scale) {}

  // SVG y grows downward; the map's y grows upward.
  double sx(double x) const { return kMargin + x * scale_; }
  double sy(double y) const { return kMargin + (cfg_.height - y) * scale_; }

  void line(const Point& a, const Point& b, const char* cls, const char* stroke, double width,
            double opacity = 1.0, const std::string& title = {}) {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "<line class=\"%s\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                  "stroke-width=\"%.2f\" stroke-opacity=\"%.2f\"",
                  cls, sx(a.x), sy(a.y), sx(b.x), sy(b.y), stroke, width, opacity);
    out_ += buf;
    if (title.empty()) {
      out_ += "/>\n";
    } else {
      out_ += "><title>" + escape(title) + "</title></line>\n";
    }
  }

  void circle(const Point& p, double r, const char* cls, const char* fill, const char* stroke,
              const std::string& title = {}) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<circle class=\"%s\" cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" stroke=\"%s\" "
                  "stroke-width=\"2\"",
                  cls, sx(p.x), sy(p.y), r, fill, stroke);
    out_ += buf;
    out_ += title.empty() ? "/>\n" : "><title>" + escape(title) + "</title></circle>\n";
  }

  void square(const Point& p, double half, const char* cls, const std::string& title) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<rect class=\"%s\" x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                  "fill=\"#333\"><title>",
                  cls, sx(p.x) - half, sy(p.y) - half, 2 * half, 2 * half);
    out_ += buf;
    out_ += escape(title) + "</title></rect>\n";
  }

  void text(const Point& p, double dx, double dy, const std::string& s, const char* cls) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "<text class=\"%s\" x=\"%.2f\" y=\"%.2f\" font-size=\"11\">", cls,
                  sx(p.x) + dx, sy(p.y) + dy);
    out_ += buf;
    out_ += escape(s) + "</text>\n";
  }

  void raw(const std::string& s) { out_ += s; }
  const std::string& str() const { return out_; }

 private:
  const EnvConfig& cfg_;
  double scale_;
  std::string out_;
};

}  // namespace

std::string render_svg(const EnvConfig& cfg, const Plan* plan, double scale) {
  const EnvState start = init_state(cfg);
  Canvas c(cfg, scale);
  const double w = cfg.width * scale + 2 * kMargin;
  const double h = cfg.height * scale + 2 * kMargin;

  char head[256];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                w, h, w, h);
  c.raw(head);
  c.raw("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

  for (int x = 0; x <= cfg.width; ++x) {
    c.line({double(x), 0}, {double(x), double(cfg.height)}, "grid", "#bbbbbb", 1.0);
  }
  for (int y = 0; y <= cfg.height; ++y) {
    c.line({0, double(y)}, {double(cfg.width), double(y)}, "grid", "#bbbbbb", 1.0);
  }
  for (const auto& p : cfg.points) c.circle(p, 1.5, "point", "#cccccc", "none");

  for (std::size_t o = 0; o < cfg.objects.size(); ++o) {
    const char* color = kPalette[o % kPalette.size()];
    c.circle(cfg.objects[o].target, scale * 0.12, "target", "none", color,
             cfg.objects[o].name + " target");
  }
  for (std::size_t r = 0; r < cfg.robots.size(); ++r) {
    const auto& robot = cfg.robots[r];
    c.line(robot.base, start.arm_pos[r], "arm", "#1f3fbf", 3.0, 1.0, robot.name + " arm");
    c.square(robot.base, 5.0, "base", robot.name);
    c.text(robot.base, 6, -6, robot.name, "label");
  }
  for (std::size_t o = 0; o < cfg.objects.size(); ++o) {
    const char* color = kPalette[o % kPalette.size()];
    c.circle(cfg.objects[o].start, scale * 0.08, "object", color, color, cfg.objects[o].name);
  }

  if (plan && !plan->steps.empty()) {
    const double n = static_cast<double>(plan->steps.size());
    for (std::size_t i = 0; i < plan->steps.size(); ++i) {
      const Step& step = plan->steps[i];
      const double opacity = 0.35 + 0.65 * (static_cast<double>(i) + 1.0) / n;
      for (const auto& a : step.actions) {
        c.line(a.start, a.end, "trajectory", a.move_object ? "#d62728" : "#ff9896",
               a.move_object ? 2.5 : 1.5, opacity,
               "step " + std::to_string(i + 1) + ": " + a.robot);
      }
    }
  }
  c.raw("</svg>\n");
  return c.str();
}

}  // namespace boxnet
