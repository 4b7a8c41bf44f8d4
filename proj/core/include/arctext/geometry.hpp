#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "arctext/error.hpp"

namespace arctext {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};

/// Simple polygon in pixel coordinates, stored with positive signed area
/// (counter-clockwise in a y-up frame). Vertices may touch at isolated
/// points, as pixel contours of diagonally connected regions do, but edges
/// never cross.
class Polygon {
 public:
  /// Canonicalizes: drops repeated and closing vertices, merges collinear
  /// runs, orients counter-clockwise. Throws kDegenerateGeometry on fewer
  /// than three distinct vertices, zero area or crossing edges.
  explicit Polygon(std::vector<Point> vertices);

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }

  double area() const;
  bool is_convex() const;
  Polygon translated(double dx, double dy) const;
  Polygon scaled(double factor) const;

  bool operator==(const Polygon&) const = default;

 private:
  std::vector<Point> vertices_;
};

struct AxisBox {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  void validate() const;

  bool operator==(const AxisBox&) const = default;
};

class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height);
  BitMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on = true) { bits_[index(x, y)] = on ? 1 : 0; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  /// Pixel-edge bounding rectangle of the foreground, nullopt when empty.
  std::optional<AxisBox> bounds() const;

  bool operator==(const BitMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Shoelace area of a closed vertex loop, positive for counter-clockwise.
double signed_area(const std::vector<Point>& loop);

double polygon_area(const Polygon& p);

/// Intersection of two convex counter-clockwise loops (Sutherland-Hodgman).
std::vector<Point> clip_convex(const std::vector<Point>& subject,
                               const std::vector<Point>& clip);

/// Ear-clipping triangulation; each triangle is counter-clockwise.
std::vector<std::array<Point, 3>> triangulate(const Polygon& p);

/// Intersection region as polygons. Convex operands give at most one
/// polygon; otherwise the region is returned as convex pieces of the two
/// triangulations.
std::vector<Polygon> polygon_intersection(const Polygon& a, const Polygon& b);

/// Area of the intersection via signed triangle fans; valid for any simple
/// polygons and symmetric in its arguments.
double intersection_area(const Polygon& a, const Polygon& b);

double iou_polygon(const Polygon& a, const Polygon& b);

/// Pixel IoU. Two empty masks give 0.
double iou_mask(const BitMask& a, const BitMask& b);

double iou_box(const AxisBox& a, const AxisBox& b);

/// Outer contours of the 8-connected foreground components, traced along
/// pixel edges. Holes are filled.
std::vector<Polygon> mask_to_polygons(const BitMask& mask);

/// Pixels whose centres lie inside the polygon (even-odd rule). The polygon
/// must fit the canvas within one pixel of slack.
BitMask polygon_to_mask(const Polygon& p, int width, int height);

AxisBox bounding_box(const Polygon& p);

}  // namespace arctext
