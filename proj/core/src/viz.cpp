#include "distdyn/viz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "distdyn/error.hpp"

namespace distdyn {

namespace {

struct Rgb {
  double r, g, b;
};

constexpr std::array<Rgb, 5> kViridis{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
constexpr std::array<Rgb, 2> kGreys{{{235, 235, 235}, {20, 20, 20}}};

std::string ramp_color(std::string_view ramp, double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto pick = [t](auto const& stops) {
    const double pos = t * static_cast<double>(stops.size() - 1);
    const auto k = std::min(static_cast<std::size_t>(pos), stops.size() - 2);
    const double f = pos - static_cast<double>(k);
    const Rgb& a = stops[k];
    const Rgb& b = stops[k + 1];
    return fmt::format("#{:02x}{:02x}{:02x}", static_cast<int>(std::lround(a.r + f * (b.r - a.r))),
                       static_cast<int>(std::lround(a.g + f * (b.g - a.g))),
                       static_cast<int>(std::lround(a.b + f * (b.b - a.b))));
  };
  return ramp == "greys" ? pick(kGreys) : pick(kViridis);
}

std::string px(double v) { return fmt::format("{:.2f}", v); }

std::string num17(double v) { return fmt::format("{:.17g}", v); }

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

class SvgWriter {
 public:
  SvgWriter(const PlotStyle& style) : style_(style) {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{1}\" "
        "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"{2}\">\n",
        style.width, style.height, style.font_size);
    out_ += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", style.width,
                        style.height);
    if (!style.title.empty())
      text(style.width / 2.0, style.margin_top / 2.0 + style.font_size / 2.0, style.title, "middle", "title");
  }

  void raw(std::string_view s) { out_ += s; }

  void text(double x, double y, std::string_view body, std::string_view anchor = "start",
            std::string_view cls = {}, std::string_view transform = {}) {
    out_ += "<text";
    if (!cls.empty()) out_ += fmt::format(" class=\"{}\"", cls);
    out_ += fmt::format(" x=\"{}\" y=\"{}\" text-anchor=\"{}\"", px(x), px(y), anchor);
    if (!transform.empty()) out_ += fmt::format(" transform=\"{}\"", transform);
    out_ += ">" + xml_escape(body) + "</text>\n";
  }

  std::string finish() { return out_ + "</svg>\n"; }

 private:
  const PlotStyle& style_;
  std::string out_;
};

double nice_step(double span, int target) {
  const double raw = span / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.0) step = 1.0;
  else if (norm <= 2.0) step = 2.0;
  else if (norm <= 2.5) step = 2.5;
  else if (norm <= 5.0) step = 5.0;
  return step * mag;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  return fmt::format("{:g}", std::round(v * 1e6) / 1e6);
}

void draw_axes(SvgWriter& svg, const PlotFrame& f, const PlotStyle& style, std::string_view x_label,
               std::string_view y_label) {
  svg.raw(fmt::format("<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
                      "stroke=\"#000000\" stroke-width=\"1\"/>\n",
                      px(f.left), px(f.top), px(f.width), px(f.height)));
  const double xs = nice_step(f.x1 - f.x0, 5);
  for (double t = std::ceil(f.x0 / xs - 1e-9) * xs; t <= f.x1 + 1e-9 * xs; t += xs) {
    const double x = f.px(t);
    const double y = f.top + f.height;
    svg.raw(fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\"/>\n", px(x), px(y),
                        px(y + 5)));
    svg.text(x, y + 7 + style.font_size, tick_label(t), "middle");
  }
  const double ys = nice_step(f.y1 - f.y0, 5);
  for (double t = std::ceil(f.y0 / ys - 1e-9) * ys; t <= f.y1 + 1e-9 * ys; t += ys) {
    const double y = f.py(t);
    svg.raw(fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000000\"/>\n", px(f.left), px(y),
                        px(f.left - 5)));
    svg.text(f.left - 8, y + style.font_size / 3.0, tick_label(t), "end");
  }
  svg.text(f.left + f.width / 2, f.top + f.height + 2.0 * style.font_size + 14, x_label, "middle", "axis-label");
  const double yl = f.left - 3.2 * style.font_size - 6;
  const double ym = f.top + f.height / 2;
  svg.text(yl, ym, y_label, "middle", "axis-label", fmt::format("rotate(-90 {} {})", px(yl), px(ym)));
}

std::pair<double, double> value_range(const SurfaceView& view) {
  if (view.values.empty()) throw Error(ErrorCode::DegenerateSurface, "surface has no values");
  auto [lo, hi] = std::minmax_element(view.values.begin(), view.values.end());
  if (!(*hi > *lo)) throw Error(ErrorCode::DegenerateSurface, "surface is constant");
  return {*lo, *hi};
}

void check_view(const SurfaceView& view) {
  if (view.xs.size() < 2 || view.ys.size() < 2 || view.values.size() != view.xs.size() * view.ys.size())
    throw Error(ErrorCode::DegenerateSurface, "surface needs at least a 2 x 2 mesh of matching values");
}

std::vector<std::size_t> subsample(std::size_t n, int max_points) {
  const std::size_t m = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(max_points, 2)));
  std::vector<std::size_t> idx(m);
  for (std::size_t k = 0; k < m; ++k)
    idx[k] = static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(n - 1) /
                                                   static_cast<double>(m - 1)));
  return idx;
}

}  // namespace

void validate(const PlotStyle& style) {
  if (style.width < 64 || style.height < 64) throw Error(ErrorCode::InvalidArgument, "plot must be at least 64 x 64");
  if (style.ramp != "viridis" && style.ramp != "greys")
    throw Error(ErrorCode::InvalidArgument, "unknown color ramp '" + style.ramp + "'");
  if (style.width <= style.margin_left + style.margin_right || style.height <= style.margin_top + style.margin_bottom)
    throw Error(ErrorCode::InvalidArgument, "margins leave no plotting area");
}

SurfaceView SurfaceView::of(const DensitySurface& surface) {
  auto gx = surface.grid_x().points();
  auto gy = surface.grid_y().points();
  return {{gx.begin(), gx.end()}, {gy.begin(), gy.end()}, {surface.values().begin(), surface.values().end()}};
}

SurfaceView SurfaceView::of(const StochasticKernel& kernel) {
  auto gx = kernel.grid_x().points();
  auto gy = kernel.grid_y().points();
  return {{gx.begin(), gx.end()}, {gy.begin(), gy.end()}, {kernel.values().begin(), kernel.values().end()}};
}

PlotFrame PlotFrame::for_style(const PlotStyle& style, double x0, double x1, double y0, double y1) {
  return {static_cast<double>(style.margin_left),
          static_cast<double>(style.margin_top),
          static_cast<double>(style.width - style.margin_left - style.margin_right),
          static_cast<double>(style.height - style.margin_top - style.margin_bottom),
          x0,
          x1,
          y0,
          y1};
}

std::vector<double> contour_levels(const SurfaceView& view, const PlotStyle& style) {
  if (!style.levels.empty()) return style.levels;
  const double peak = *std::max_element(view.values.begin(), view.values.end());
  const int count = std::max(style.contour_levels, 1);
  std::vector<double> levels;
  for (int k = 0; k < count; ++k) {
    const double frac = count == 1 ? 0.5 : 0.05 + 0.9 * k / (count - 1);
    levels.push_back(frac * peak);
  }
  return levels;
}

std::vector<Segment> contour_segments(const SurfaceView& view, double level) {
  check_view(view);
  std::vector<Segment> out;
  const std::size_t nx = view.xs.size();
  const std::size_t ny = view.ys.size();
  struct Point {
    double x, y;
  };
  auto cross = [level](double xa, double ya, double va, double xb, double yb, double vb) {
    const double t = (level - va) / (vb - va);
    return Point{xa + t * (xb - xa), ya + t * (yb - ya)};
  };
  for (std::size_t i = 0; i + 1 < nx; ++i) {
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      const double x0 = view.xs[i], x1 = view.xs[i + 1], y0 = view.ys[j], y1 = view.ys[j + 1];
      const double va = view.at(i, j), vb = view.at(i + 1, j), vc = view.at(i + 1, j + 1), vd = view.at(i, j + 1);
      const bool ia = va >= level, ib = vb >= level, ic = vc >= level, id = vd >= level;
      // Edges: bottom a-b, right b-c, top d-c, left a-d.
      std::array<bool, 4> hit{ia != ib, ib != ic, id != ic, ia != id};
      std::array<Point, 4> p{};
      if (hit[0]) p[0] = cross(x0, y0, va, x1, y0, vb);
      if (hit[1]) p[1] = cross(x1, y0, vb, x1, y1, vc);
      if (hit[2]) p[2] = cross(x0, y1, vd, x1, y1, vc);
      if (hit[3]) p[3] = cross(x0, y0, va, x0, y1, vd);
      const int hits = hit[0] + hit[1] + hit[2] + hit[3];
      if (hits == 2) {
        std::array<Point, 2> ends{};
        int k = 0;
        for (int e = 0; e < 4; ++e)
          if (hit[e]) ends[k++] = p[e];
        out.push_back({ends[0].x, ends[0].y, ends[1].x, ends[1].y});
      } else if (hits == 4) {
        const bool centre = 0.25 * (va + vb + vc + vd) >= level;
        if (centre == ia) {
          out.push_back({p[0].x, p[0].y, p[1].x, p[1].y});
          out.push_back({p[2].x, p[2].y, p[3].x, p[3].y});
        } else {
          out.push_back({p[0].x, p[0].y, p[3].x, p[3].y});
          out.push_back({p[1].x, p[1].y, p[2].x, p[2].y});
        }
      }
    }
  }
  return out;
}

std::string render_contour(const SurfaceView& view, const PlotStyle& style) {
  validate(style);
  check_view(view);
  value_range(view);
  const PlotFrame f = PlotFrame::for_style(style, view.xs.front(), view.xs.back(), view.ys.front(), view.ys.back());
  SvgWriter svg(style);
  const auto levels = contour_levels(view, style);
  const double lo = levels.front();
  const double hi = levels.back();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto segments = contour_segments(view, levels[k]);
    const double t = hi > lo ? (levels[k] - lo) / (hi - lo) : 0.5;
    std::string d;
    for (const auto& s : segments)
      d += fmt::format("M{} {}L{} {}", px(f.px(s.x1)), px(f.py(s.y1)), px(f.px(s.x2)), px(f.py(s.y2)));
    svg.raw(fmt::format("<path class=\"contour\" data-level=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\" "
                        "d=\"{}\"/>\n",
                        num17(levels[k]), ramp_color(style.ramp, t), d));
  }
  const double d0 = std::max(f.x0, f.y0);
  const double d1 = std::min(f.x1, f.y1);
  if (d1 > d0)
    svg.raw(fmt::format("<line class=\"diagonal\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#808080\" "
                        "stroke-dasharray=\"4,3\"/>\n",
                        px(f.px(d0)), px(f.py(d0)), px(f.px(d1)), px(f.py(d1))));
  draw_axes(svg, f, style, "t", "t+τ");
  return svg.finish();
}

Mesh surface_mesh(const SurfaceView& view, const PlotStyle& style) {
  check_view(view);
  const auto ix = subsample(view.xs.size(), style.max_mesh);
  const auto iy = subsample(view.ys.size(), style.max_mesh);
  const double peak = *std::max_element(view.values.begin(), view.values.end());
  const double floor_v = std::min(0.0, *std::min_element(view.values.begin(), view.values.end()));
  const double lift_span = peak > floor_v ? peak - floor_v : 1.0;
  const double w = style.width - style.margin_left - style.margin_right;
  const double h = style.height - style.margin_top - style.margin_bottom;
  const double x_span = view.xs.back() - view.xs.front();
  const double y_span = view.ys.back() - view.ys.front();
  Mesh mesh{ix.size(), iy.size(), {}};
  mesh.vertices.reserve(ix.size() * iy.size());
  for (std::size_t a : ix) {
    for (std::size_t b : iy) {
      const double u = (view.xs[a] - view.xs.front()) / x_span;
      const double v = (view.ys[b] - view.ys.front()) / y_span;
      const double z = view.at(a, b);
      const double lift = (z - floor_v) / lift_span;
      mesh.vertices.push_back({style.margin_left + w / 2 + (u - v) * w * 0.47,
                               style.margin_top + 0.45 * h + (u + v) * 0.25 * h - lift * 0.45 * h, z});
    }
  }
  return mesh;
}

std::string render_surface(const SurfaceView& view, const PlotStyle& style) {
  validate(style);
  check_view(view);
  auto [lo, hi] = value_range(view);
  const Mesh mesh = surface_mesh(view, style);
  SvgWriter svg(style);
  // Painter's order: cells with smaller i + j sit further from the viewer.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i + 1 < mesh.nx; ++i)
    for (std::size_t j = 0; j + 1 < mesh.ny; ++j) cells.emplace_back(i, j);
  std::stable_sort(cells.begin(), cells.end(),
                   [](const auto& a, const auto& b) { return a.first + a.second < b.first + b.second; });
  auto vtx = [&](std::size_t i, std::size_t j) -> const MeshVertex& { return mesh.vertices[i * mesh.ny + j]; };
  svg.raw("<g class=\"surface\" stroke=\"#202020\" stroke-width=\"0.3\">\n");
  for (auto [i, j] : cells) {
    const auto& a = vtx(i, j);
    const auto& b = vtx(i + 1, j);
    const auto& c = vtx(i + 1, j + 1);
    const auto& d = vtx(i, j + 1);
    const double mean = 0.25 * (a.height + b.height + c.height + d.height);
    svg.raw(fmt::format("<polygon class=\"mesh\" points=\"{},{} {},{} {},{} {},{}\" fill=\"{}\"/>\n", px(a.sx),
                        px(a.sy), px(b.sx), px(b.sy), px(c.sx), px(c.sy), px(d.sx), px(d.sy),
                        ramp_color(style.ramp, (mean - lo) / (hi - lo))));
  }
  svg.raw("</g>\n");
  const double h = style.height - style.margin_top - style.margin_bottom;
  svg.text(style.margin_left + (style.width - style.margin_left - style.margin_right) * 0.78,
           style.margin_top + 0.86 * h, "t", "middle", "axis-label");
  svg.text(style.margin_left + (style.width - style.margin_left - style.margin_right) * 0.22,
           style.margin_top + 0.86 * h, "t+τ", "middle", "axis-label");
  return svg.finish();
}

LabeledCurve LabeledCurve::of(std::string label, const DensityCurve& curve) {
  auto g = curve.grid().points();
  return {std::move(label), CurveKind::Density, {g.begin(), g.end()}, {curve.values().begin(), curve.values().end()},
          std::vector<bool>(curve.grid().count(), true)};
}

LabeledCurve LabeledCurve::of(std::string label, const NTPCurve& ntp) {
  auto g = ntp.grid.points();
  return {std::move(label), CurveKind::NetTransition, {g.begin(), g.end()}, ntp.values, ntp.supported};
}

std::string render_curves(const std::vector<LabeledCurve>& curves, const PlotStyle& style) {
  validate(style);
  if (curves.empty()) throw Error(ErrorCode::EmptyPlot, "no curves to draw");
  const auto& xs = curves.front().xs;
  if (xs.size() < 2) throw Error(ErrorCode::EmptyPlot, "curve needs at least two points");
  for (const auto& c : curves)
    if (c.xs != xs || c.values.size() != xs.size() || c.present.size() != xs.size())
      throw Error(ErrorCode::GridMismatch, "curves do not share a grid");

  const bool ntp = std::any_of(curves.begin(), curves.end(), [](auto& c) { return c.kind == CurveKind::NetTransition; });
  double y0 = 0.0;
  double y1 = 0.0;
  if (ntp) {
    y0 = -1.05;
    y1 = 1.05;
  } else {
    for (const auto& c : curves)
      for (std::size_t i = 0; i < c.values.size(); ++i)
        if (c.present[i]) y1 = std::max(y1, c.values[i]);
    y1 = y1 > 0.0 ? 1.05 * y1 : 1.0;
  }
  const PlotFrame f = PlotFrame::for_style(style, xs.front(), xs.back(), y0, y1);
  SvgWriter svg(style);
  if (ntp)
    svg.raw(fmt::format("<line class=\"zero-line\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#808080\"/>\n",
                        px(f.left), px(f.py(0.0)), px(f.left + f.width), px(f.py(0.0))));

  static constexpr std::array<std::string_view, 4> kDash{"", "6,4", "2,3", "8,3,2,3"};
  static constexpr std::array<std::string_view, 4> kColor{"#1a1a1a", "#1a1a1a", "#2f6db5", "#b5442f"};
  auto dash_attr = [](std::size_t k) {
    auto d = kDash[k % kDash.size()];
    return d.empty() ? std::string{} : fmt::format(" stroke-dasharray=\"{}\"", d);
  };
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!c.present[i]) {
        pen_down = false;
        continue;
      }
      d += fmt::format("{}{} {}", pen_down ? "L" : "M", px(f.px(xs[i])), px(f.py(c.values[i])));
      pen_down = true;
    }
    svg.raw(fmt::format("<path class=\"series\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} d=\"{}\"/>\n",
                        kColor[k % kColor.size()], dash_attr(k), d));
  }
  svg.raw("<g class=\"legend\">\n");
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const double lx = f.left + f.width - 150;
    const double ly = f.top + 16 + 18.0 * static_cast<double>(k);
    svg.raw(fmt::format("<g class=\"legend-entry\"><line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" "
                        "stroke-width=\"1.5\"{}/>",
                        px(lx), px(ly), px(lx + 28), px(ly), kColor[k % kColor.size()], dash_attr(k)));
    svg.raw(fmt::format("<text x=\"{}\" y=\"{}\">{}</text></g>\n", px(lx + 34), px(ly + style.font_size / 3.0),
                        xml_escape(curves[k].label)));
  }
  svg.raw("</g>\n");
  draw_axes(svg, f, style, "relative income", ntp ? "net transition probability" : "density");
  return svg.finish();
}

std::string export_csv(const DensityCurve& curve, std::string_view value_name) {
  std::string out = fmt::format("x,{}\n", value_name);
  for (std::size_t i = 0; i < curve.grid().count(); ++i)
    out += num17(curve.grid()[i]) + "," + num17(curve[i]) + "\n";
  return out;
}

std::string export_csv(const NTPCurve& ntp) {
  std::string out = "x,ntp\n";
  for (std::size_t i = 0; i < ntp.values.size(); ++i)
    out += num17(ntp.grid[i]) + "," + (ntp.supported[i] ? num17(ntp.values[i]) : std::string{}) + "\n";
  return out;
}

std::string export_csv(const TransitionPairs& pairs) {
  std::string out = "x,y\n";
  for (const auto& p : pairs.pairs) out += num17(p.x) + "," + num17(p.y) + "\n";
  return out;
}

namespace {

template <typename Matrix>
std::string matrix_csv(const Grid& gx, const Grid& gy, const Matrix& m) {
  std::string out = "x\\y";
  for (std::size_t j = 0; j < gy.count(); ++j) out += "," + num17(gy[j]);
  out += "\n";
  for (std::size_t i = 0; i < gx.count(); ++i) {
    out += num17(gx[i]);
    for (std::size_t j = 0; j < gy.count(); ++j) out += "," + num17(m(i, j));
    out += "\n";
  }
  return out;
}

}  // namespace

std::string export_csv(const StochasticKernel& kernel) {
  return matrix_csv(kernel.grid_x(), kernel.grid_y(), kernel);
}

std::string export_csv(const DensitySurface& surface) {
  return matrix_csv(surface.grid_x(), surface.grid_y(), surface);
}

std::string export_csv(std::span<const double> xs,
                       const std::vector<std::pair<std::string, std::vector<double>>>& columns) {
  std::string out = "x";
  for (const auto& [name, values] : columns) {
    if (values.size() != xs.size()) throw Error(ErrorCode::GridMismatch, "column " + name + " has the wrong length");
    out += "," + name;
  }
  out += "\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += num17(xs[i]);
    for (const auto& column : columns) out += "," + num17(column.second[i]);
    out += "\n";
  }
  return out;
}

}  // namespace distdyn
