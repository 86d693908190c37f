#pragma once

// CSV and SVG writers for the exploratory figures and the t-test report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "poslink/io.hpp"
#include "poslink/stats.hpp"

namespace poslink::report {

inline void write_ttest_csv(std::span<const TTestResult> rows, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "tag,t_stat,dof,p_value,mean_linked,mean_unlinked\n";
  for (const auto& r : rows) {
    out << r.tag << ',' << io::format_real(r.t_stat) << ',' << io::format_real(r.dof) << ','
        << io::format_real(r.p_value) << ',' << io::format_real(r.mean_linked) << ','
        << io::format_real(r.mean_unlinked) << '\n';
  }
  io::finish_output(out, path);
}

struct Bar {
  std::string label;
  double value = 0.0;
};

inline void write_bars_csv(std::span<const Bar> bars, const std::string& label_header,
                           const std::string& value_header, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << label_header << ',' << value_header << '\n';
  for (const auto& b : bars) out << b.label << ',' << io::format_real(b.value) << '\n';
  io::finish_output(out, path);
}

inline std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Vertical bar chart: bars, category labels under each bar, value labels on
// top, and a title plus axis captions.
inline void write_bar_chart_svg(std::span<const Bar> bars, const std::string& title,
                                const std::string& x_caption, const std::string& y_caption,
                                const std::filesystem::path& path) {
  constexpr int bar_w = 28, gap = 8, left = 70, top = 40, plot_h = 260, bottom = 90;
  const int n = static_cast<int>(bars.size());
  const int width = left + std::max(n, 1) * (bar_w + gap) + 30;
  const int height = top + plot_h + bottom;
  double max_v = 0.0;
  for (const auto& b : bars) max_v = std::max(max_v, b.value);
  if (max_v <= 0.0) max_v = 1.0;

  auto out = io::open_output(path);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "font-family=\"sans-serif\" font-size=\"11\">\n",
                width, height);
  out << buf;
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"20\" font-size=\"14\">", left);
  out << buf << xml_escape(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n"
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
                left, top, left, top + plot_h, left, top + plot_h, width - 20, top + plot_h);
  out << buf;
  for (int i = 0; i < n; ++i) {
    const double h = bars[i].value / max_v * plot_h;
    const double x = left + gap / 2.0 + i * (bar_w + gap);
    const double y = top + plot_h - h;
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%d\" height=\"%.1f\" fill=\"steelblue\"/>\n",
                  x, y, bar_w, h);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"9\">",
                  x + bar_w / 2.0, y - 3.0);
    out << buf << io::format_real(bars[i].value) << "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%d\" text-anchor=\"end\" transform=\"rotate(-60 %.1f %d)\">",
                  x + bar_w / 2.0, top + plot_h + 14, x + bar_w / 2.0, top + plot_h + 14);
    out << buf << xml_escape(bars[i].label) << "</text>\n";
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">", left + (width - left) / 2,
                height - 8);
  out << buf << xml_escape(x_caption) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%d\" text-anchor=\"middle\" transform=\"rotate(-90 16 %d)\">",
                top + plot_h / 2, top + plot_h / 2);
  out << buf << xml_escape(y_caption) << "</text>\n";
  out << "</svg>\n";
  io::finish_output(out, path);
}

}  // namespace poslink::report
