#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace oracle {

Tensor conv2d(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
  const std::size_t ph = kh / 2, pw = kw / 2;
  Tensor padded({cin, h + 2 * ph, w + 2 * pw});
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) padded(c, y + ph, xx + pw) = x(c, y, xx);
  Tensor out({cout, h, w});
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) {
        double acc = bias[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j)
              acc += weights(o, c, i, j) * padded(c, y + i, xx + j);
        out(o, y, xx) = acc;
      }
  return out;
}

Tensor adaptive_max_pool(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < out_h; ++i)
      for (std::size_t j = 0; j < out_w; ++j) {
        const std::size_t y0 = i * h / out_h, y1 = ((i + 1) * h + out_h - 1) / out_h;
        const std::size_t x0 = j * w / out_w, x1 = ((j + 1) * w + out_w - 1) / out_w;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t y = y0; y < y1; ++y)
          for (std::size_t xx = x0; xx < x1; ++xx) best = std::max(best, x(ch, y, xx));
        out(ch, i, j) = best;
      }
  return out;
}

namespace {

void source_coord(std::size_t d, std::size_t in, std::size_t out, std::size_t& lo,
                  std::size_t& hi, double& frac) {
  double s = (d + 0.5) * (double(in) / double(out)) - 0.5;
  if (s < 0) s = 0;
  if (s > double(in - 1)) s = double(in - 1);
  lo = std::size_t(s);
  hi = lo + 1 < in ? lo + 1 : in - 1;
  frac = s - double(lo);
}

}  // namespace

Tensor bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < out_h; ++i)
      for (std::size_t j = 0; j < out_w; ++j) {
        std::size_t y0, y1, x0, x1;
        double fy, fx;
        source_coord(i, h, out_h, y0, y1, fy);
        source_coord(j, w, out_w, x0, x1, fx);
        out(ch, i, j) = (1 - fy) * (1 - fx) * x(ch, y0, x0) + (1 - fy) * fx * x(ch, y0, x1) +
                        fy * (1 - fx) * x(ch, y1, x0) + fy * fx * x(ch, y1, x1);
      }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t n = x.shape().back(), rows = x.size() / n;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double m = x[r * n];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[r * n + i]);
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(x[r * n + i] - m);
    for (std::size_t i = 0; i < n; ++i) out[r * n + i] = std::exp(x[r * n + i] - m) / z;
  }
  return out;
}

Tensor compose_kernels(const Tensor& outer, const Tensor& inner) {
  const std::size_t o = outer.dim(0), m = outer.dim(1), a = outer.dim(2), b = outer.dim(3);
  const std::size_t i = inner.dim(1), c = inner.dim(2), d = inner.dim(3);
  require(inner.dim(0) == m, arctext::ErrorCode::kShapeMismatch, "compose: channel mismatch");
  Tensor out({o, i, a + c - 1, b + d - 1});
  for (std::size_t p = 0; p < o; ++p)
    for (std::size_t q = 0; q < i; ++q)
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t u = 0; u < a; ++u)
          for (std::size_t v = 0; v < b; ++v)
            for (std::size_t s = 0; s < c; ++s)
              for (std::size_t t = 0; t < d; ++t)
                out(p, q, u + s, v + t) += outer(p, r, u, v) * inner(r, q, s, t);
  return out;
}

std::vector<Tensor> intra_paths(const Tensor& x, const arctext::intra::Module& module) {
  std::vector<Tensor> paths;
  auto branch = [&](std::size_t block, int which) -> const Tensor& {
    const auto& bw = module.blocks[block];
    return which == 0 ? bw.vertical.weights : which == 1 ? bw.horizontal.weights : bw.square.weights;
  };
  const Tensor no_bias({x.dim(0)}, 0.0);
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r) {
        Tensor y = conv2d(x, branch(0, p), no_bias);
        y = conv2d(y, branch(1, q), no_bias);
        paths.push_back(conv2d(y, branch(2, r), no_bias));
      }
  return paths;
}

double mask_iou(const BitMask& a, const BitMask& b) {
  long inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      inter += a.get(x, y) && b.get(x, y);
      uni += a.get(x, y) || b.get(x, y);
    }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

std::vector<PseudoLabel> pseudo_labels(const std::vector<ScoredDetection>& a,
                                       const std::vector<ScoredDetection>& b,
                                       const std::vector<ScoredDetection>& c, double threshold,
                                       double decay) {
  // Anchor order: repeatedly take the highest remaining score, earliest index first.
  std::vector<std::size_t> order;
  std::vector<bool> taken(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) {
    std::size_t pick = a.size();
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!taken[i] && (pick == a.size() || a[i].score > a[pick].score)) pick = i;
    taken[pick] = true;
    order.push_back(pick);
  }

  // A candidate is ranked by (matched?, iou, score, -index).
  struct Key {
    bool matched = false;
    double iou = 0, score = 0;
    long neg_index = 0;
    bool operator<(const Key& o) const {
      if (matched != o.matched) return matched < o.matched;
      if (!matched) return false;
      if (iou != o.iou) return iou < o.iou;
      if (score != o.score) return score < o.score;
      return neg_index < o.neg_index;
    }
  };
  auto key = [&](const std::vector<double>& ious, const std::vector<ScoredDetection>& pool,
                 const std::vector<bool>& used, long j) {
    if (j < 0 || used[j]) return Key{};
    if (!(ious[j] > threshold)) return Key{};
    return Key{true, ious[j], pool[j].score, -j};
  };

  std::vector<PseudoLabel> out;
  std::vector<bool> used_b(b.size()), used_c(c.size());
  for (std::size_t i : order) {
    long best_j = -1, best_k = -1;
    Key kb_best, kc_best;
    bool first = true;
    std::vector<double> iou_b, iou_c;
    for (const auto& d : b) iou_b.push_back(mask_iou(a[i].mask, d.mask));
    for (const auto& d : c) iou_c.push_back(mask_iou(a[i].mask, d.mask));
    for (long j = -1; j < long(b.size()); ++j)
      for (long k = -1; k < long(c.size()); ++k) {
        const Key kb = key(iou_b, b, used_b, j), kc = key(iou_c, c, used_c, k);
        if ((j >= 0 && !kb.matched) || (k >= 0 && !kc.matched)) continue;
        const int n_new = int(kb.matched) + int(kc.matched);
        const int n_best = int(kb_best.matched) + int(kc_best.matched);
        // Prefer more members, then the better B candidate, then the better C candidate.
        bool better = first || n_new > n_best ||
                      (n_new == n_best && (kb_best < kb || (!(kb < kb_best) && kc_best < kc)));
        if (better) {
          best_j = j;
          best_k = k;
          kb_best = kb;
          kc_best = kc;
          first = false;
        }
      }
    std::vector<const ScoredDetection*> members{&a[i]};
    if (best_j >= 0) members.push_back(&b[best_j]);
    if (best_k >= 0) members.push_back(&c[best_k]);
    if (members.size() == 1) continue;

    PseudoLabel label;
    label.mask = BitMask(a[i].mask.width(), a[i].mask.height());
    for (int y = 0; y < label.mask.height(); ++y)
      for (int x = 0; x < label.mask.width(); ++x) {
        bool all = true;
        for (auto* m : members) all = all && m->mask.get(x, y);
        label.mask.set(x, y, all);
      }
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    for (auto* m : members) {
      x0 += m->box.xmin;
      y0 += m->box.ymin;
      x1 += m->box.xmax;
      y1 += m->box.ymax;
    }
    const double n = double(members.size());
    label.box = {x0 / n, y0 / n, x1 / n, y1 / n};
    label.weight = members.size() == 3 ? a[i].score * b[best_j].score * c[best_k].score
                                       : a[i].score * members[1]->score * decay;
    if (best_j >= 0) used_b[best_j] = true;
    if (best_k >= 0) used_c[best_k] = true;
    out.push_back(std::move(label));
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> soft_nms(const std::vector<ScoredDetection>& dets,
                                                     Decay decay, double threshold, double sigma,
                                                     double floor) {
  std::deque<std::pair<std::size_t, double>> pending;
  for (std::size_t i = 0; i < dets.size(); ++i) pending.emplace_back(i, dets[i].score);
  std::vector<std::pair<std::size_t, double>> picked;
  while (!pending.empty()) {
    auto best = pending.begin();
    for (auto it = pending.begin(); it != pending.end(); ++it)
      if (it->second > best->second) best = it;
    const auto chosen = *best;
    pending.erase(best);
    picked.push_back(chosen);
    std::deque<std::pair<std::size_t, double>> next;
    for (auto [idx, s] : pending) {
      const double iou = mask_iou(dets[chosen.first].mask, dets[idx].mask);
      if (decay == Decay::kGaussian)
        s = s * std::exp(-(iou * iou) / sigma);
      else if (iou > threshold)
        s = s * (1.0 - iou);
      if (s >= floor) next.emplace_back(idx, s);
    }
    pending.swap(next);
  }
  std::stable_sort(picked.begin(), picked.end(),
                   [](const auto& l, const auto& r) { return l.second > r.second; });
  return picked;
}

namespace {

// Visits every one-to-one assignment restricted to eligible pairs.
void assignments(const std::vector<std::vector<double>>& iou, double threshold, std::size_t g,
                 std::vector<bool>& det_used, std::vector<arctext::Match>& current,
                 const std::function<void(const std::vector<arctext::Match>&)>& visit) {
  if (g == iou.size()) {
    visit(current);
    return;
  }
  assignments(iou, threshold, g + 1, det_used, current, visit);
  for (std::size_t d = 0; d < iou[g].size(); ++d) {
    if (det_used[d] || iou[g][d] < threshold) continue;
    det_used[d] = true;
    current.push_back({g, d, iou[g][d]});
    assignments(iou, threshold, g + 1, det_used, current, visit);
    current.pop_back();
    det_used[d] = false;
  }
}

}  // namespace

std::vector<arctext::Match> lexmax_assignment(const std::vector<std::vector<double>>& iou,
                                              double threshold) {
  const std::size_t nd = iou.empty() ? 0 : iou[0].size();
  std::vector<bool> used(nd);
  std::vector<arctext::Match> current, best;
  std::vector<double> best_key;
  bool have = false;
  assignments(iou, threshold, 0, used, current, [&](const std::vector<arctext::Match>& m) {
    std::vector<double> k;
    for (const auto& x : m) k.push_back(x.iou);
    std::sort(k.rbegin(), k.rend());
    if (!have || std::lexicographical_compare(best_key.begin(), best_key.end(), k.begin(), k.end())) {
      best_key = k;
      best = m;
      have = true;
    }
  });
  return best;
}

double max_weight_assignment(const std::vector<std::vector<double>>& iou, double threshold) {
  const std::size_t nd = iou.empty() ? 0 : iou[0].size();
  std::vector<bool> used(nd);
  std::vector<arctext::Match> current;
  double best = 0;
  assignments(iou, threshold, 0, used, current, [&](const std::vector<arctext::Match>& m) {
    double s = 0;
    for (const auto& x : m) s += x.iou;
    best = std::max(best, s);
  });
  return best;
}

BitMask fill_holes(const BitMask& mask) {
  const int w = mask.width(), h = mask.height();
  // Background reachable from outside the canvas through 4-neighbours.
  std::vector<char> outside(std::size_t(w) * h, 0);
  std::deque<std::pair<int, int>> queue;
  auto push = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    if (mask.get(x, y) || outside[std::size_t(y) * w + x]) return;
    outside[std::size_t(y) * w + x] = 1;
    queue.emplace_back(x, y);
  };
  for (int x = 0; x < w; ++x) push(x, 0), push(x, h - 1);
  for (int y = 0; y < h; ++y) push(0, y), push(w - 1, y);
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    push(x + 1, y), push(x - 1, y), push(x, y + 1), push(x, y - 1);
  }
  BitMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, !outside[std::size_t(y) * w + x]);
  return out;
}

BitMask random_blob(int width, int height, Rng& rng) {
  BitMask m(width, height);
  const int parts = int(rng.integer(1, 4));
  const double cx0 = rng.uniform(0.25, 0.75) * width, cy0 = rng.uniform(0.25, 0.75) * height;
  for (int p = 0; p < parts; ++p) {
    const double cx = cx0 + rng.uniform(-0.2, 0.2) * width;
    const double cy = cy0 + rng.uniform(-0.2, 0.2) * height;
    const double rx = rng.uniform(1.0, 0.25 * width), ry = rng.uniform(1.0, 0.25 * height);
    const bool ellipse = rng.coin();
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        const bool in = ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1 && std::abs(dy) <= 1;
        if (in) m.set(x, y);
      }
  }
  // Sprinkle isolated pixels and notches so the tracer meets pinches and
  // diagonal contacts.
  const int noise = int(rng.integer(0, 12));
  for (int i = 0; i < noise; ++i) {
    const int x = int(rng.integer(0, width - 1)), y = int(rng.integer(0, height - 1));
    m.set(x, y, !m.get(x, y));
  }
  if (m.empty()) m.set(width / 2, height / 2);
  return fill_holes(m);
}

arctext::AxisBox mask_box(const BitMask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.get(x, y)) {
        x0 = std::min(x0, x), y0 = std::min(y0, y);
        x1 = std::max(x1, x), y1 = std::max(y1, y);
      }
  return {double(x0), double(y0), double(x1 + 1), double(y1 + 1)};
}

std::vector<arctext::AxisBox> random_objects(Rng& rng, int width, int height,
                                             std::size_t count) {
  std::vector<arctext::AxisBox> out;
  for (std::size_t i = 0; i < count; ++i) {
    const int w = int(rng.integer(4, std::max(4, width / 3)));
    const int h = int(rng.integer(3, std::max(3, height / 4)));
    const int x = int(rng.integer(0, width - w)), y = int(rng.integer(0, height - h));
    out.push_back({double(x), double(y), double(x + w), double(y + h)});
  }
  return out;
}

std::vector<ScoredDetection> random_detections(Rng& rng, int width, int height,
                                               const std::vector<arctext::AxisBox>& objects,
                                               std::size_t max_count) {
  std::vector<ScoredDetection> out;
  auto emit = [&](int x0, int y0, int x1, int y1) {
    x0 = std::clamp(x0, 0, width - 1), y0 = std::clamp(y0, 0, height - 1);
    x1 = std::clamp(x1, x0 + 1, width), y1 = std::clamp(y1, y0 + 1, height);
    ScoredDetection d;
    d.mask = BitMask(width, height);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) d.mask.set(x, y);
    // Occasionally knock out a corner so masks are not all rectangles.
    if (rng.coin(0.3) && (x1 - x0) > 2 && (y1 - y0) > 2) d.mask.set(x0, y0, false);
    d.box = mask_box(d.mask);
    d.score = double(rng.integer(1, 20)) / 20.0;
    out.push_back(std::move(d));
  };
  for (const auto& o : objects) {
    if (out.size() >= max_count) break;
    if (!rng.coin(0.8)) continue;
    const int j = int(rng.integer(0, 1));
    emit(int(o.xmin) + int(rng.integer(-j, j)), int(o.ymin) + int(rng.integer(-j, j)),
         int(o.xmax) + int(rng.integer(-1, 1)), int(o.ymax) + int(rng.integer(-1, 1)));
  }
  while (out.size() < max_count && rng.coin(0.3)) {
    const int x = int(rng.integer(0, width - 3)), y = int(rng.integer(0, height - 3));
    emit(x, y, x + int(rng.integer(2, 12)), y + int(rng.integer(2, 8)));
  }
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.integer(0, i - 1)]);
  return out;
}

Tensor random_tensor(const Tensor::Shape& shape, Rng& rng, double scale) {
  Tensor t(shape);
  for (auto& v : t.data()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
