#pragma once

// A small SVG writer for the report charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

namespace thumbscope {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s == "-0" ? "0" : s;
}

struct Rgb {
  int r = 0, g = 0, b = 0;
};

inline std::string css_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

// t in [-1, 1]: red below zero, white at zero, blue above.
inline Rgb diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  auto mix = [](int a, int b, double f) { return static_cast<int>(std::lround(a + (b - a) * f)); };
  if (t >= 0) return {mix(255, 33, t), mix(255, 102, t), mix(255, 172, t)};
  return {mix(255, 178, -t), mix(255, 24, -t), mix(255, 43, -t)};
}

class SvgDocument {
 public:
  SvgDocument(double width, double height) : width_(width), height_(height) {}

  void rect(double x, double y, double w, double h, const std::string& fill, const std::string& stroke = "none",
            double stroke_width = 0) {
    body_ += "<rect x=\"" + svg_number(x) + "\" y=\"" + svg_number(y) + "\" width=\"" + svg_number(w) +
             "\" height=\"" + svg_number(h) + "\" fill=\"" + fill + "\"";
    if (stroke != "none") body_ += " stroke=\"" + stroke + "\" stroke-width=\"" + svg_number(stroke_width) + "\"";
    body_ += "/>\n";
  }

  void text(double x, double y, std::string_view s, double size = 11, const std::string& anchor = "start",
            bool bold = false, double rotate = 0) {
    body_ += "<text x=\"" + svg_number(x) + "\" y=\"" + svg_number(y) + "\" font-size=\"" + svg_number(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\"";
    if (bold) body_ += " font-weight=\"bold\"";
    if (rotate != 0)
      body_ += " transform=\"rotate(" + svg_number(rotate) + " " + svg_number(x) + " " + svg_number(y) + ")\"";
    body_ += ">" + xml_escape(s) + "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1) {
    body_ += "<line x1=\"" + svg_number(x1) + "\" y1=\"" + svg_number(y1) + "\" x2=\"" + svg_number(x2) +
             "\" y2=\"" + svg_number(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + svg_number(width) +
             "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + svg_number(width) + "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) body_ += ' ';
      body_ += svg_number(pts[i].first) + "," + svg_number(pts[i].second);
    }
    body_ += "\"/>\n";
  }

  void image(double x, double y, double w, double h, std::string_view href) {
    body_ += "<image x=\"" + svg_number(x) + "\" y=\"" + svg_number(y) + "\" width=\"" + svg_number(w) +
             "\" height=\"" + svg_number(h) + "\" preserveAspectRatio=\"xMidYMid meet\" href=\"" + xml_escape(href) +
             "\"/>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_number(width_) + "\" height=\"" +
           svg_number(height_) + "\" viewBox=\"0 0 " + svg_number(width_) + " " + svg_number(height_) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n" + body_ + "</svg>\n";
  }

 private:
  double width_, height_;
  std::string body_;
};

}  // namespace thumbscope
