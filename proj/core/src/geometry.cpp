#include "arctext/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace arctext {
namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double cross_dir(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  return d1 * d2 < 0 && d3 * d4 < 0;
}

std::vector<Point> drop_repeats_and_collinear(std::vector<Point> v) {
  for (;;) {
    std::vector<Point> kept;
    kept.reserve(v.size());
    for (const auto& p : v)
      if (kept.empty() || kept.back() != p) kept.push_back(p);
    while (kept.size() > 1 && kept.front() == kept.back()) kept.pop_back();
    const std::size_t n = kept.size();
    if (n < 3) return kept;
    std::size_t flat = n;
    for (std::size_t i = 0; i < n && flat == n; ++i)
      if (cross(kept[(i + n - 1) % n], kept[i], kept[(i + 1) % n]) == 0.0) flat = i;
    if (flat == n) return kept;
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(flat));
    v = std::move(kept);
  }
}

}  // namespace

double signed_area(const std::vector<Point>& loop) {
  const std::size_t n = loop.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = loop[i];
    const Point& b = loop[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

Polygon::Polygon(std::vector<Point> vertices) {
  for (const auto& p : vertices)
    require(std::isfinite(p.x) && std::isfinite(p.y), ErrorCode::kDegenerateGeometry,
            "polygon vertex is not finite");
  vertices_ = drop_repeats_and_collinear(std::move(vertices));
  require(vertices_.size() >= 3, ErrorCode::kDegenerateGeometry,
          "polygon needs at least three non-collinear vertices");
  const double a = signed_area(vertices_);
  require(a != 0.0, ErrorCode::kDegenerateGeometry, "polygon has zero area");
  if (a < 0.0) std::reverse(vertices_.begin(), vertices_.end());
  // Start at the smallest vertex so equal shapes compare equal.
  const auto first = std::min_element(vertices_.begin(), vertices_.end(), [](const Point& l, const Point& r) {
    return l.x != r.x ? l.x < r.x : l.y < r.y;
  });
  std::rotate(vertices_.begin(), first, vertices_.end());
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      require(!segments_cross(vertices_[i], vertices_[(i + 1) % n], vertices_[j],
                              vertices_[(j + 1) % n]),
              ErrorCode::kDegenerateGeometry, "polygon edges cross");
    }
  }
}

double Polygon::area() const { return signed_area(vertices_); }

bool Polygon::is_convex() const {
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i)
    if (cross(vertices_[i], vertices_[(i + 1) % n], vertices_[(i + 2) % n]) < 0.0) return false;
  return true;
}

Polygon Polygon::translated(double dx, double dy) const {
  std::vector<Point> v = vertices_;
  for (auto& p : v) {
    p.x += dx;
    p.y += dy;
  }
  return Polygon(std::move(v));
}

Polygon Polygon::scaled(double factor) const {
  std::vector<Point> v = vertices_;
  for (auto& p : v) {
    p.x *= factor;
    p.y *= factor;
  }
  return Polygon(std::move(v));
}

void AxisBox::validate() const {
  require(std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) &&
              std::isfinite(ymax),
          ErrorCode::kDegenerateGeometry, "box coordinates must be finite");
  require(xmin < xmax && ymin < ymax, ErrorCode::kDegenerateGeometry,
          "box must satisfy xmin < xmax and ymin < ymax");
}

BitMask::BitMask(int width, int height)
    : BitMask(width, height,
              std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                        static_cast<std::size_t>(std::max(height, 0)))) {}

BitMask::BitMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  require(width >= 0 && height >= 0, ErrorCode::kInvalidArgument,
          "mask dimensions must be non-negative");
  require(bits_.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
          ErrorCode::kShapeMismatch, "mask bit count does not match width * height");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BitMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::optional<AxisBox> BitMask::bounds() const {
  int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (get(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  return AxisBox{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 + 1),
                 static_cast<double>(y1 + 1)};
}

double polygon_area(const Polygon& p) { return p.area(); }

AxisBox bounding_box(const Polygon& p) {
  AxisBox b{p.vertices()[0].x, p.vertices()[0].y, p.vertices()[0].x, p.vertices()[0].y};
  for (const auto& v : p.vertices()) {
    b.xmin = std::min(b.xmin, v.x);
    b.ymin = std::min(b.ymin, v.y);
    b.xmax = std::max(b.xmax, v.x);
    b.ymax = std::max(b.ymax, v.y);
  }
  return b;
}

std::vector<Point> clip_convex(const std::vector<Point>& subject,
                               const std::vector<Point>& clip) {
  std::vector<Point> out = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Point& c0 = clip[e];
    const Point& c1 = clip[(e + 1) % m];
    std::vector<Point> input;
    input.swap(out);
    const std::size_t n = input.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& cur = input[i];
      const Point& nxt = input[(i + 1) % n];
      const double sc = cross(c0, c1, cur);
      const double sn = cross(c0, c1, nxt);
      if (sc >= 0.0) out.push_back(cur);
      if ((sc >= 0.0) != (sn >= 0.0)) {
        const double t = sc / (sc - sn);
        out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
      }
    }
  }
  return out;
}

namespace {

bool in_triangle_closed(const Point& p, const Point& a, const Point& b, const Point& c) {
  return cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0;
}

// Direction d leaves corner x strictly between rays x->y and x->z.
bool enters_wedge(const Point& x, const Point& y, const Point& z, const Point& w) {
  const double dx = w.x - x.x, dy = w.y - x.y;
  return cross_dir(y.x - x.x, y.y - x.y, dx, dy) > 0.0 &&
         cross_dir(dx, dy, z.x - x.x, z.y - x.y) > 0.0;
}

bool is_ear(const std::vector<Point>& v, const std::vector<std::size_t>& ring, std::size_t r) {
  const std::size_t m = ring.size();
  const std::size_t rp = (r + m - 1) % m, rn = (r + 1) % m;
  const Point& a = v[ring[rp]];
  const Point& b = v[ring[r]];
  const Point& c = v[ring[rn]];
  for (std::size_t s = 0; s < m; ++s) {
    if (s == rp || s == r || s == rn) continue;
    const Point& p = v[ring[s]];
    if (p == a || p == b || p == c) {
      const Point& y = p == a ? b : (p == b ? c : a);
      const Point& z = p == a ? c : (p == b ? a : b);
      for (std::size_t nb : {(s + m - 1) % m, (s + 1) % m})
        if (enters_wedge(p, y, z, v[ring[nb]])) return false;
      continue;
    }
    if (in_triangle_closed(p, a, b, c)) return false;
  }
  for (std::size_t s = 0; s < m; ++s) {
    const std::size_t t = (s + 1) % m;
    if (s == rp || t == rp || s == rn || t == rn) continue;
    if (segments_cross(a, c, v[ring[s]], v[ring[t]])) return false;
  }
  return true;
}

}  // namespace

std::vector<std::array<Point, 3>> triangulate(const Polygon& p) {
  const auto& v = p.vertices();
  std::vector<std::size_t> ring(v.size());
  std::iota(ring.begin(), ring.end(), std::size_t{0});
  std::vector<std::array<Point, 3>> tris;
  tris.reserve(v.size());
  while (ring.size() > 3) {
    const std::size_t m = ring.size();
    bool clipped = false;
    for (std::size_t r = 0; r < m; ++r) {
      const Point& a = v[ring[(r + m - 1) % m]];
      const Point& b = v[ring[r]];
      const Point& c = v[ring[(r + 1) % m]];
      const double turn = cross(a, b, c);
      if (turn < 0.0) continue;
      if (turn > 0.0) {
        if (!is_ear(v, ring, r)) continue;
        tris.push_back({a, b, c});
      }
      ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(r));
      clipped = true;
      break;
    }
    require(clipped, ErrorCode::kDegenerateGeometry, "polygon triangulation found no ear");
  }
  if (cross(v[ring[0]], v[ring[1]], v[ring[2]]) > 0.0)
    tris.push_back({v[ring[0]], v[ring[1]], v[ring[2]]});

  double total = 0.0;
  for (const auto& t : tris) total += signed_area({t[0], t[1], t[2]});
  const double expect = p.area();
  require(std::abs(total - expect) <= 1e-9 * std::max(1.0, expect),
          ErrorCode::kDegenerateGeometry, "polygon triangulation does not cover the polygon");
  return tris;
}

std::vector<Polygon> polygon_intersection(const Polygon& a, const Polygon& b) {
  constexpr double kMinArea = 1e-12;
  std::vector<Polygon> out;
  if (a.is_convex() && b.is_convex()) {
    auto piece = clip_convex(a.vertices(), b.vertices());
    if (signed_area(piece) > kMinArea) out.emplace_back(std::move(piece));
    return out;
  }
  const auto ta = triangulate(a);
  const auto tb = triangulate(b);
  for (const auto& s : ta) {
    const std::vector<Point> sv{s[0], s[1], s[2]};
    for (const auto& t : tb) {
      auto piece = clip_convex(sv, {t[0], t[1], t[2]});
      if (signed_area(piece) > kMinArea) out.emplace_back(std::move(piece));
    }
  }
  return out;
}

namespace {

// Sum over fan triangles (o, p_i, p_{i+1}) of both polygons of the signed
// overlap. The signed fans add up to the indicator of each polygon, so the
// double sum is the area of the intersection.
double fan_overlap(const std::vector<Point>& a, const std::vector<Point>& b) {
  double total = 0.0;
  const Point o{0.0, 0.0};
  const std::size_t n = a.size(), m = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Point> ta{o, a[i], a[(i + 1) % n]};
    const double sa = signed_area(ta);
    if (sa == 0.0) continue;
    if (sa < 0.0) std::swap(ta[1], ta[2]);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<Point> tb{o, b[j], b[(j + 1) % m]};
      const double sb = signed_area(tb);
      if (sb == 0.0) continue;
      if (sb < 0.0) std::swap(tb[1], tb[2]);
      const double piece = signed_area(clip_convex(ta, tb));
      total += (sign(sa) * sign(sb)) * piece;
    }
  }
  return total;
}

}  // namespace

double intersection_area(const Polygon& a, const Polygon& b) {
  const Polygon* first = &a;
  const Polygon* second = &b;
  if (b.vertices() < a.vertices()) std::swap(first, second);
  if (a == b) return a.area();
  const Point origin = first->vertices()[0];
  auto shift = [&](const Polygon& p) {
    std::vector<Point> v = p.vertices();
    for (auto& q : v) {
      q.x -= origin.x;
      q.y -= origin.y;
    }
    return v;
  };
  const double overlap = fan_overlap(shift(*first), shift(*second));
  return std::clamp(overlap, 0.0, std::min(a.area(), b.area()));
}

double iou_polygon(const Polygon& a, const Polygon& b) {
  if (a == b) return 1.0;
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  require(uni > 0.0, ErrorCode::kDegenerateGeometry, "polygon union has zero area");
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_mask(const BitMask& a, const BitMask& b) {
  require(a.width() == b.width() && a.height() == b.height(), ErrorCode::kShapeMismatch,
          "iou_mask: masks are " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
              " and " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  std::size_t inter = 0, uni = 0;
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += x[i] & y[i];
    uni += x[i] | y[i];
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double iou_box(const AxisBox& a, const AxisBox& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

BitMask polygon_to_mask(const Polygon& p, int width, int height) {
  require(width > 0 && height > 0, ErrorCode::kInvalidArgument,
          "canvas dimensions must be positive");
  const AxisBox bb = bounding_box(p);
  require(bb.xmin >= -1.0 && bb.ymin >= -1.0 && bb.xmax <= width + 1.0 &&
              bb.ymax <= height + 1.0,
          ErrorCode::kInvalidArgument,
          "polygon does not fit a " + std::to_string(width) + "x" + std::to_string(height) +
              " canvas");
  BitMask mask(width, height);
  const auto& v = p.vertices();
  const std::size_t n = v.size();
  std::vector<double> xs;
  for (int y = 0; y < height; ++y) {
    const double yc = y + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& p1 = v[i];
      const Point& p2 = v[(i + 1) % n];
      if ((p1.y > yc) != (p2.y > yc))
        xs.push_back(p1.x + (yc - p1.y) * (p2.x - p1.x) / (p2.y - p1.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int x0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int x = x0; x <= x1; ++x) mask.set(x, y);
    }
  }
  return mask;
}

}  // namespace arctext
