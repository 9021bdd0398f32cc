#include "conforma/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "conforma/errors.hpp"

namespace conforma {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
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

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const {
    const double span = x1 > x0 ? x1 - x0 : 1.0;
    return kLeft + (x - x0) / span * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    const double span = y1 > y0 ? y1 - y0 : 1.0;
    return kHeight - kBottom - (y - y0) / span * (kHeight - kTop - kBottom);
  }
};

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::vector<double>& xticks,
          const std::vector<double>& yticks, const std::string& xlabel, const std::string& ylabel) {
  const double left = kLeft, right = kWidth - kRight, top = kTop, bottom = kHeight - kBottom;
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\""
      << bottom - top << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double x : xticks) {
    out << "<text x=\"" << num(f.px(x)) << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">"
        << label(x) << "</text>\n";
  }
  for (double y : yticks) {
    out << "<line x1=\"" << left << "\" y1=\"" << num(f.py(y)) << "\" x2=\"" << right << "\" y2=\""
        << num(f.py(y)) << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\">"
        << label(y) << "</text>\n";
  }
  out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(xlabel) << "</text>\n"
      << "<text x=\"18\" y=\"" << (top + bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (top + bottom) / 2 << ")\">" << escape(ylabel) << "</text>\n";
}

void legend_entry(std::ostringstream& out, int slot, const char* color, const std::string& text,
                  const std::string& dash = "") {
  const double x = kWidth - kRight + 12;
  const double y = kTop + 14 + 18 * slot;
  out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 22 << "\" y2=\"" << y << "\" stroke=\""
      << color << "\" stroke-width=\"2\"" << dash << "/>\n"
      << "<text x=\"" << x + 28 << "\" y=\"" << y + 4 << "\">" << escape(text) << "</text>\n";
}

std::vector<double> nice_ticks(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i <= count; ++i) out.push_back(lo + (hi - lo) * i / count);
  return out;
}

std::vector<const ResultRow*> rows_for(const std::vector<ResultRow>& rows, const std::string& method) {
  std::vector<const ResultRow*> out;
  for (const ResultRow& r : rows) {
    if (r.method == method) out.push_back(&r);
  }
  return out;
}

std::string triangle(double x, double y, bool up, const char* color) {
  const double s = 5;
  std::ostringstream out;
  const double tip = up ? y - s : y + s;
  const double base = up ? y + s : y - s;
  out << "<polygon points=\"" << num(x) << ',' << num(tip) << ' ' << num(x - s) << ',' << num(base) << ' '
      << num(x + s) << ',' << num(base) << "\" fill=\"" << color << "\"/>\n";
  return out.str();
}

}  // namespace

std::string coverage_chart_svg(const std::vector<ResultRow>& rows, const std::string& method) {
  const auto mine = rows_for(rows, method);
  std::map<double, std::vector<std::pair<int, double>>> series;
  int max_rep = 1;
  for (const ResultRow* r : mine) {
    series[r->alpha].emplace_back(r->replication, r->coverage);
    max_rep = std::max(max_rep, r->replication);
  }
  const Frame f{1.0, static_cast<double>(max_rep), 0.0, 1.0};
  std::ostringstream out;
  open_svg(out, "Coverage rate: " + method);
  std::vector<double> xticks = max_rep > 1 ? nice_ticks(1.0, max_rep, std::min(max_rep - 1, 5))
                                           : std::vector<double>{1.0};
  for (double& t : xticks) t = std::round(t);
  axes(out, f, xticks, nice_ticks(0.0, 1.0, 5), "replication", "coverage");
  int slot = 0;
  for (auto& [alpha, points] : series) {
    const char* color = kPalette[slot % std::size(kPalette)];
    std::sort(points.begin(), points.end());
    out << "<line x1=\"" << num(f.px(f.x0)) << "\" y1=\"" << num(f.py(1.0 - alpha)) << "\" x2=\""
        << num(f.px(f.x1)) << "\" y2=\"" << num(f.py(1.0 - alpha)) << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"6 4\"/>\n";
    if (points.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [rep, cov] : points) out << num(f.px(rep)) << ',' << num(f.py(cov)) << ' ';
      out << "\"/>\n";
    }
    for (const auto& [rep, cov] : points) {
      out << "<circle cx=\"" << num(f.px(rep)) << "\" cy=\"" << num(f.py(cov)) << "\" r=\"2\" fill=\"" << color
          << "\"/>\n";
    }
    legend_entry(out, slot, color, "alpha = " + label(alpha));
    ++slot;
  }
  legend_entry(out, slot, "#555555", "nominal 1 - alpha", " stroke-dasharray=\"6 4\"");
  out << "</svg>\n";
  return out.str();
}

std::string width_chart_svg(const std::vector<ResultRow>& rows, const std::string& method) {
  const auto mine = rows_for(rows, method);
  struct Acc {
    double sum[3] = {0, 0, 0};
    int count[3] = {0, 0, 0};
  };
  std::map<double, Acc> acc;
  int omitted = 0;
  for (const ResultRow* r : mine) {
    const double v[3] = {r->widths.p05, r->widths.median, r->widths.max};
    Acc& a = acc[r->alpha];
    for (int k = 0; k < 3; ++k) {
      if (std::isfinite(v[k])) {
        a.sum[k] += v[k];
        ++a.count[k];
      } else {
        ++omitted;
      }
    }
  }
  std::vector<double> alphas;
  double top = 0.0;
  for (const auto& [alpha, a] : acc) {
    alphas.push_back(alpha);
    for (int k = 0; k < 3; ++k) {
      if (a.count[k] > 0) top = std::max(top, a.sum[k] / a.count[k]);
    }
  }
  if (!(top > 0.0)) top = 1.0;
  const double x0 = alphas.empty() ? 0.0 : alphas.front();
  const double x1 = alphas.empty() ? 1.0 : alphas.back();
  const Frame f{x0 == x1 ? x0 - 0.05 : x0, x0 == x1 ? x1 + 0.05 : x1, 0.0, top * 1.1};
  std::ostringstream out;
  open_svg(out, "Hull width: " + method);
  axes(out, f, alphas, nice_ticks(0.0, top * 1.1, 5), "alpha", "mean width over replications");
  const char* color = kPalette[0];
  std::ostringstream line;
  int points = 0;
  for (const auto& [alpha, a] : acc) {
    if (a.count[1] > 0) {
      line << num(f.px(alpha)) << ',' << num(f.py(a.sum[1] / a.count[1])) << ' ';
      ++points;
    }
  }
  if (points > 1) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << line.str()
        << "\"/>\n";
  }
  for (const auto& [alpha, a] : acc) {
    if (a.count[1] > 0) {
      out << "<circle cx=\"" << num(f.px(alpha)) << "\" cy=\"" << num(f.py(a.sum[1] / a.count[1]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    if (a.count[0] > 0) out << triangle(f.px(alpha), f.py(a.sum[0] / a.count[0]), true, kPalette[1]);
    if (a.count[2] > 0) out << triangle(f.px(alpha), f.py(a.sum[2] / a.count[2]), false, kPalette[2]);
  }
  legend_entry(out, 0, color, "median");
  legend_entry(out, 1, kPalette[1], "5% quantile (up)");
  legend_entry(out, 2, kPalette[2], "max (down)");
  if (omitted > 0) {
    out << "<text x=\"" << kLeft << "\" y=\"" << kTop - 6 << "\">" << omitted
        << " infinite values omitted</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::string> write_report(const std::string& result_dir) {
  const std::filesystem::path base(result_dir);
  const std::filesystem::path csv = base / "result.csv";
  if (!std::filesystem::exists(csv)) {
    throw Error(ErrorCode::kIo, "no result.csv in '" + result_dir + "'");
  }
  const std::vector<ResultRow> rows = read_result_csv(csv.string());
  if (rows.empty()) throw Error(ErrorCode::kParse, csv.string() + ": empty result set");
  std::vector<std::string> methods;
  for (const ResultRow& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::vector<std::string> written;
  for (const std::string& m : methods) {
    for (const auto& [name, svg] : {std::pair{"coverage_" + m + ".svg", coverage_chart_svg(rows, m)},
                                    std::pair{"width_" + m + ".svg", width_chart_svg(rows, m)}}) {
      const std::string path = (base / name).string();
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
      out << svg;
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace conforma
