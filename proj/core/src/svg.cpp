#include "teleopt/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace teleopt::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 16.0;
constexpr double kTop = 36.0;
constexpr double kBottom = 44.0;
constexpr double kFloor = 1e-16;  // log-scale clamp for zero/negative losses

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

// Fixed two-decimal formatting keeps coordinates compact and deterministic.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
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

double log_clamp(double v) {
  if (!std::isfinite(v) || v < kFloor) v = kFloor;
  return std::log10(v);
}

}  // namespace

std::string render_loss_plot(const std::vector<Series>& series, const std::string& title) {
  std::size_t n_steps = 0;
  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (const Series& s : series) {
    n_steps = std::max(n_steps, s.median.size());
    for (const auto* v : {&s.median, &s.q1, &s.q3}) {
      for (double x : *v) {
        const double ly = log_clamp(x);
        if (!any) {
          lo = hi = ly;
          any = true;
        } else {
          lo = std::min(lo, ly);
          hi = std::max(hi, ly);
        }
      }
    }
  }
  if (!any || n_steps < 2) {
    n_steps = std::max<std::size_t>(n_steps, 2);
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;

  const double px0 = kLeft, px1 = kWidth - kRight;
  const double py0 = kHeight - kBottom, py1 = kTop;
  const auto sx = [&](double step) {
    return px0 + (px1 - px0) * (step / static_cast<double>(n_steps - 1));
  };
  const auto sy = [&](double logv) { return py0 + (py1 - py0) * ((logv - lo) / (hi - lo)); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(kWidth)
     << "\" height=\"" << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << " " << fmt(kHeight)
     << "\">\n";
  os << "<rect width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" "
        "font-family=\"monospace\" font-size=\"14\">"
     << escape(title) << "</text>\n";

  // y grid lines at integer powers of ten
  for (int e = static_cast<int>(std::ceil(lo)); e <= static_cast<int>(std::floor(hi)); ++e) {
    const double y = sy(static_cast<double>(e));
    os << "<line x1=\"" << fmt(px0) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(px1)
       << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << fmt(px0 - 6) << "\" y=\"" << fmt(y + 4)
       << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">1e" << e
       << "</text>\n";
  }
  // axes
  os << "<line x1=\"" << fmt(px0) << "\" y1=\"" << fmt(py0) << "\" x2=\"" << fmt(px1)
     << "\" y2=\"" << fmt(py0) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << fmt(px0) << "\" y1=\"" << fmt(py0) << "\" x2=\"" << fmt(px0)
     << "\" y2=\"" << fmt(py1) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<text x=\"" << fmt((px0 + px1) / 2) << "\" y=\"" << fmt(kHeight - 12)
     << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">step</text>\n";

  // x ticks at quarters
  for (int k = 0; k <= 4; ++k) {
    const double step = (n_steps - 1) * k / 4.0;
    const double x = sx(step);
    os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(py0) << "\" x2=\"" << fmt(x) << "\" y2=\""
       << fmt(py0 + 4) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(py0 + 16)
       << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"10\">"
       << static_cast<int>(step) << "</text>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (s.median.empty()) continue;

    if (s.q1.size() == s.median.size() && s.q3.size() == s.median.size()) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t t = 0; t < s.q3.size(); ++t) {
        os << fmt(sx(static_cast<double>(t))) << ',' << fmt(sy(log_clamp(s.q3[t]))) << ' ';
      }
      for (std::size_t t = s.q1.size(); t-- > 0;) {
        os << fmt(sx(static_cast<double>(t))) << ',' << fmt(sy(log_clamp(s.q1[t])));
        if (t != 0) os << ' ';
      }
      os << "\"/>\n";
    }

    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < s.median.size(); ++t) {
      os << fmt(sx(static_cast<double>(t))) << ',' << fmt(sy(log_clamp(s.median[t])));
      if (t + 1 != s.median.size()) os << ' ';
    }
    os << "\"/>\n";

    const double ly = kTop + 14.0 * static_cast<double>(si);
    os << "<line x1=\"" << fmt(px1 - 120) << "\" y1=\"" << fmt(ly) << "\" x2=\""
       << fmt(px1 - 100) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(px1 - 96) << "\" y=\"" << fmt(ly + 4)
       << "\" font-family=\"monospace\" font-size=\"10\">" << escape(s.label) << "</text>\n";
  }

  os << "</svg>\n";
  return os.str();
}

}  // namespace teleopt::svg
