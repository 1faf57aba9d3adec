#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "distdyn/dynamics.hpp"
#include "distdyn/kde.hpp"
#include "distdyn/panel.hpp"

namespace distdyn {

struct PlotStyle {
  int width = 560;
  int height = 560;
  std::string ramp = "viridis";  // "viridis" or "greys"
  int contour_levels = 9;
  std::vector<double> levels;  // explicit contour levels override contour_levels
  int margin_left = 64;
  int margin_right = 24;
  int margin_top = 36;
  int margin_bottom = 56;
  int font_size = 12;
  int max_mesh = 48;  // surface mesh is subsampled to at most this many points per axis
  std::string title;
};

/// Throws InvalidArgument when width or height is below 64 or the ramp is unknown.
void validate(const PlotStyle& style);

/// Plain x-major array of surface heights. Used instead of a Grid pair so tiny
/// meshes (2 x 2) can be drawn too.
struct SurfaceView {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;  // values[i * ys.size() + j]

  static SurfaceView of(const DensitySurface& surface);
  static SurfaceView of(const StochasticKernel& kernel);
  double at(std::size_t i, std::size_t j) const { return values[i * ys.size() + j]; }
};

/// Maps data coordinates into the plotting rectangle of an SVG.
struct PlotFrame {
  double left, top, width, height;
  double x0, x1, y0, y1;

  static PlotFrame for_style(const PlotStyle& style, double x0, double x1, double y0, double y1);
  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

struct Segment {
  double x1, y1, x2, y2;
};

/// Explicit style levels, or `contour_levels` values equally spaced between 5%
/// and 95% of the surface maximum.
std::vector<double> contour_levels(const SurfaceView& view, const PlotStyle& style);

/// Marching-squares iso-line of one level, in data coordinates. Saddle cells
/// are resolved by the cell-centre average.
std::vector<Segment> contour_segments(const SurfaceView& view, double level);

/// Line contours plus the 45-degree reference diagonal; axes t and t+τ.
std::string render_contour(const SurfaceView& view, const PlotStyle& style = {});

struct MeshVertex {
  double sx, sy;  // projected screen position
  double height;  // surface value
};

/// Subsampled mesh in isometric projection, x-major like SurfaceView.
struct Mesh {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<MeshVertex> vertices;
};

Mesh surface_mesh(const SurfaceView& view, const PlotStyle& style = {});

/// Isometric filled mesh, painted back to front.
std::string render_surface(const SurfaceView& view, const PlotStyle& style = {});

enum class CurveKind { Density, NetTransition };

struct LabeledCurve {
  std::string label;
  CurveKind kind = CurveKind::Density;
  std::vector<double> xs;
  std::vector<double> values;
  std::vector<bool> present;  // false leaves a gap

  static LabeledCurve of(std::string label, const DensityCurve& curve);
  static LabeledCurve of(std::string label, const NTPCurve& ntp);
};

/// Overlaid line plot. NTP plots get a zero reference line; the first series
/// is solid and the next ones dashed; a legend lists every series.
std::string render_curves(const std::vector<LabeledCurve>& curves, const PlotStyle& style = {});

/// CSV exports: header row, 17 significant digits, LF endings.
std::string export_csv(const DensityCurve& curve, std::string_view value_name = "density");
std::string export_csv(const NTPCurve& ntp);
std::string export_csv(const TransitionPairs& pairs);
/// Wide matrix, x down the rows and y across the columns, corner cell `x\y`.
std::string export_csv(const StochasticKernel& kernel);
std::string export_csv(const DensitySurface& surface);
/// Shared x column followed by one column per named series.
std::string export_csv(std::span<const double> xs, const std::vector<std::pair<std::string, std::vector<double>>>& columns);

}  // namespace distdyn
