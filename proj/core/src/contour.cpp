#include <array>
#include <deque>

#include "arctext/geometry.hpp"

namespace arctext {
namespace {

// Edge directions: 0 = +x, 1 = +y, 2 = -x, 3 = -y. Walking a boundary edge,
// the foreground lies on the side reached by turning d -> d + 1.
constexpr std::array<int, 4> kDx{1, 0, -1, 0};
constexpr std::array<int, 4> kDy{0, 1, 0, -1};

struct Component {
  std::vector<std::pair<int, int>> pixels;
  int x0, y0, x1, y1;
};

std::vector<Component> label_components(const BitMask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  std::vector<Component> comps;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t id = static_cast<std::size_t>(y) * w + x;
      if (!mask.get(x, y) || seen[id]) continue;
      Component c{{}, x, y, x, y};
      std::deque<std::pair<int, int>> queue{{x, y}};
      seen[id] = 1;
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        c.pixels.emplace_back(cx, cy);
        c.x0 = std::min(c.x0, cx);
        c.y0 = std::min(c.y0, cy);
        c.x1 = std::max(c.x1, cx);
        c.y1 = std::max(c.y1, cy);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t nid = static_cast<std::size_t>(ny) * w + nx;
            if (mask.get(nx, ny) && !seen[nid]) {
              seen[nid] = 1;
              queue.emplace_back(nx, ny);
            }
          }
      }
      comps.push_back(std::move(c));
    }
  }
  return comps;
}

Polygon trace_outer(const Component& comp) {
  // Local grid with one pixel of background padding on every side.
  const int gw = comp.x1 - comp.x0 + 3;
  const int gh = comp.y1 - comp.y0 + 3;
  auto cell = [gw](int x, int y) { return static_cast<std::size_t>(y) * gw + x; };
  std::vector<std::uint8_t> filled(static_cast<std::size_t>(gw) * gh, 1);
  std::vector<std::uint8_t> fg(filled.size(), 0);
  for (const auto& [x, y] : comp.pixels) fg[cell(x - comp.x0 + 1, y - comp.y0 + 1)] = 1;

  // Background reachable from the border through 4-neighbours is outside;
  // everything else (the component and its holes) is the filled region.
  std::deque<std::pair<int, int>> queue{{0, 0}};
  filled[cell(0, 0)] = 0;
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      const int nx = x + kDx[d], ny = y + kDy[d];
      if (nx < 0 || ny < 0 || nx >= gw || ny >= gh) continue;
      if (fg[cell(nx, ny)] || !filled[cell(nx, ny)]) continue;
      filled[cell(nx, ny)] = 0;
      queue.emplace_back(nx, ny);
    }
  }

  // Outgoing boundary edges per lattice vertex, as a direction bitset.
  const int vw = gw + 1;
  auto vertex = [vw](int x, int y) { return static_cast<std::size_t>(y) * vw + x; };
  std::vector<std::uint8_t> out(static_cast<std::size_t>(vw) * (gh + 1), 0);
  int sx = -1, sy = -1;
  for (int y = 1; y < gh - 1; ++y)
    for (int x = 1; x < gw - 1; ++x) {
      if (!filled[cell(x, y)]) continue;
      if (sx < 0) sx = x, sy = y;
      if (!filled[cell(x, y - 1)]) out[vertex(x, y)] |= 1u << 0;
      if (!filled[cell(x + 1, y)]) out[vertex(x + 1, y)] |= 1u << 1;
      if (!filled[cell(x, y + 1)]) out[vertex(x + 1, y + 1)] |= 1u << 2;
      if (!filled[cell(x - 1, y)]) out[vertex(x, y + 1)] |= 1u << 3;
    }

  // Walk from the top-left corner of the first pixel. Where two edges leave
  // a vertex (diagonal contact) take the turn away from the foreground so the
  // diagonal neighbour stays on the same contour.
  std::vector<Point> loop;
  int x = sx, y = sy, dir = 0;
  out[vertex(x, y)] &= static_cast<std::uint8_t>(~(1u << 0));
  loop.push_back({static_cast<double>(x), static_cast<double>(y)});
  for (;;) {
    x += kDx[dir];
    y += kDy[dir];
    if (x == sx && y == sy) break;
    const std::uint8_t avail = out[vertex(x, y)];
    int next = -1;
    for (int turn : {3, 0, 1}) {
      const int cand = (dir + turn) % 4;
      if (avail & (1u << cand)) {
        next = cand;
        break;
      }
    }
    require(next >= 0, ErrorCode::kDegenerateGeometry, "contour tracing lost the boundary");
    out[vertex(x, y)] &= static_cast<std::uint8_t>(~(1u << next));
    if (next != dir) loop.push_back({static_cast<double>(x), static_cast<double>(y)});
    dir = next;
  }

  const double ox = comp.x0 - 1, oy = comp.y0 - 1;
  for (auto& p : loop) {
    p.x += ox;
    p.y += oy;
  }
  return Polygon(std::move(loop));
}

}  // namespace

std::vector<Polygon> mask_to_polygons(const BitMask& mask) {
  std::vector<Polygon> polygons;
  for (const auto& comp : label_components(mask)) polygons.push_back(trace_outer(comp));
  return polygons;
}

}  // namespace arctext
