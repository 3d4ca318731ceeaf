// SPDX-License-Identifier: Apache-2.0
#include "ufdt/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace ufdt {

const std::vector<std::array<int, 3>>& neighbors26() {
  static const std::vector<std::array<int, 3>> offs = [] {
    std::vector<std::array<int, 3>> v;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c)
          if (a || b || c) v.push_back({a, b, c});
    return v;
  }();
  return offs;
}

namespace {

constexpr int kCenter = 13;

int cell(int a, int b, int c) { return (a + 1) * 9 + (b + 1) * 3 + (c + 1); }

struct LocalAdjacency {
  std::array<std::vector<int>, 27> adj26;
  std::array<std::vector<int>, 27> adj6;
  std::array<int, 27> order{};  // 1 face, 2 edge, 3 corner, 0 center
};

const LocalAdjacency& local_adjacency() {
  static const LocalAdjacency la = [] {
    LocalAdjacency l;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          const int p = cell(a, b, c);
          l.order[p] = std::abs(a) + std::abs(b) + std::abs(c);
          for (int x = -1; x <= 1; ++x)
            for (int y = -1; y <= 1; ++y)
              for (int z = -1; z <= 1; ++z) {
                const int q = cell(x, y, z);
                if (q == p) continue;
                const int d = std::abs(x - a) + std::abs(y - b) + std::abs(z - c);
                const int cheb = std::max({std::abs(x - a), std::abs(y - b), std::abs(z - c)});
                if (cheb == 1) l.adj26[p].push_back(q);
                if (d == 1) l.adj6[p].push_back(q);
              }
        }
    return l;
  }();
  return la;
}

}  // namespace

bool is_simple_point(const std::array<bool, 27>& n) {
  const auto& la = local_adjacency();
  // Object neighbors must form exactly one 26-component.
  std::array<bool, 27> seen{};
  int components = 0;
  for (int p = 0; p < 27; ++p) {
    if (p == kCenter || !n[p] || seen[p]) continue;
    if (++components > 1) return false;
    std::vector<int> stack{p};
    seen[p] = true;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      for (int r : la.adj26[q])
        if (r != kCenter && n[r] && !seen[r]) {
          seen[r] = true;
          stack.push_back(r);
        }
    }
  }
  if (components != 1) return false;

  // Background within the 18-neighborhood: exactly one 6-component touching a face neighbor.
  seen.fill(false);
  components = 0;
  for (int p = 0; p < 27; ++p) {
    if (la.order[p] != 1 || n[p] || seen[p]) continue;
    if (++components > 1) return false;
    std::vector<int> stack{p};
    seen[p] = true;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      for (int r : la.adj6[q])
        if (la.order[r] >= 1 && la.order[r] <= 2 && !n[r] && !seen[r]) {
          seen[r] = true;
          stack.push_back(r);
        }
    }
  }
  return components == 1;
}

int neighbor_count(const BinaryMask& s, int i, int j, int k) {
  const auto& g = s.grid();
  int count = 0;
  for (const auto& o : neighbors26()) {
    const int a = i + o[0], b = j + o[1], c = k + o[2];
    if (g.contains(a, b, c) && s(a, b, c)) ++count;
  }
  return count;
}

namespace {

/// 26-connected component labels (0 = background, 1..n) and their count.
int label_components(const BinaryMask& mask, std::vector<int>& labels) {
  const auto& g = mask.grid();
  labels.assign(mask.size(), 0);
  int components = 0;
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k) {
        const std::size_t n0 = g.index(i, j, k);
        if (!mask[n0] || labels[n0]) continue;
        ++components;
        std::vector<std::array<int, 3>> stack{{i, j, k}};
        labels[n0] = components;
        while (!stack.empty()) {
          const auto v = stack.back();
          stack.pop_back();
          for (const auto& o : neighbors26()) {
            const int a = v[0] + o[0], b = v[1] + o[1], c = v[2] + o[2];
            if (!g.contains(a, b, c)) continue;
            const std::size_t n = g.index(a, b, c);
            if (mask[n] && !labels[n]) {
              labels[n] = components;
              stack.push_back({a, b, c});
            }
          }
        }
      }
  return components;
}

}  // namespace

int count_components(const BinaryMask& mask) {
  std::vector<int> labels;
  return label_components(mask, labels);
}

BinaryMask remove_small_components(const BinaryMask& mask, int min_voxels) {
  if (min_voxels <= 1) return mask;
  std::vector<int> labels;
  const int n = label_components(mask, labels);
  std::vector<int> size(n + 1, 0);
  for (int l : labels) ++size[l];
  BinaryMask out = mask;
  for (std::size_t v = 0; v < labels.size(); ++v)
    if (labels[v] && size[labels[v]] < min_voxels) out[v] = 0;
  return out;
}

namespace {

std::array<bool, 27> gather(const BinaryMask& m, int i, int j, int k, int* count) {
  const auto& g = m.grid();
  std::array<bool, 27> n{};
  int c = 0;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int d = -1; d <= 1; ++d) {
        const int x = i + a, y = j + b, z = k + d;
        const bool on = g.contains(x, y, z) && m(x, y, z);
        n[cell(a, b, d)] = on;
        if (on && (a || b || d)) ++c;
      }
  if (count) *count = c;
  return n;
}

}  // namespace

BinaryMask skeletonize(const BinaryMask& mask) {
  BinaryMask s = mask;
  for (auto& v : s.data()) v = v ? 1 : 0;
  const auto& g = s.grid();
  std::vector<std::array<int, 3>> active;
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k)
        if (s(i, j, k)) active.push_back({i, j, k});

  static constexpr std::array<std::array<int, 3>, 6> directions{
      {{0, 0, 1}, {0, 0, -1}, {0, 1, 0}, {0, -1, 0}, {1, 0, 0}, {-1, 0, 0}}};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& dir : directions) {
      std::vector<std::array<int, 3>> candidates;
      for (const auto& v : active) {
        const int a = v[0] + dir[0], b = v[1] + dir[1], c = v[2] + dir[2];
        if (g.contains(a, b, c) && s(a, b, c)) continue;  // not a border voxel in this direction
        int count = 0;
        const auto n = gather(s, v[0], v[1], v[2], &count);
        if (count <= 1) continue;
        if (is_simple_point(n)) candidates.push_back(v);
      }
      // Visit parity subfields in turn so that no run of deletions chains along a flat layer.
      std::stable_sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
        return (x[0] & 1) * 4 + (x[1] & 1) * 2 + (x[2] & 1) < (y[0] & 1) * 4 + (y[1] & 1) * 2 + (y[2] & 1);
      });
      for (const auto& v : candidates) {
        int count = 0;
        const auto n = gather(s, v[0], v[1], v[2], &count);
        if (count <= 1 || !is_simple_point(n)) continue;
        s(v[0], v[1], v[2]) = 0;
        changed = true;
      }
      std::erase_if(active, [&](const auto& v) { return !s(v[0], v[1], v[2]); });
    }
  }
  return s;
}

BinaryMask prune_spurs(const BinaryMask& skeleton, int max_length) {
  BinaryMask s = skeleton;
  if (max_length <= 0) return s;
  const auto& g = s.grid();
  std::vector<std::array<int, 3>> endpoints;
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k)
        if (s(i, j, k) && neighbor_count(s, i, j, k) == 1) endpoints.push_back({i, j, k});

  for (const auto& e : endpoints) {
    if (!s(e[0], e[1], e[2])) continue;
    std::vector<std::array<int, 3>> path{e};
    bool reaches_junction = false;
    while (static_cast<int>(path.size()) <= max_length) {
      const auto cur = path.back();
      std::vector<std::array<int, 3>> next;
      for (const auto& o : neighbors26()) {
        const std::array<int, 3> q{cur[0] + o[0], cur[1] + o[1], cur[2] + o[2]};
        if (!g.contains(q[0], q[1], q[2]) || !s(q[0], q[1], q[2])) continue;
        if (std::find(path.begin(), path.end(), q) != path.end()) continue;
        next.push_back(q);
      }
      if (next.empty()) break;
      if (next.size() > 1) {
        path.pop_back();
        reaches_junction = !path.empty();
        break;
      }
      if (neighbor_count(s, next[0][0], next[0][1], next[0][2]) >= 3) {
        reaches_junction = true;
        break;
      }
      path.push_back(next[0]);
    }
    if (!reaches_junction) continue;
    for (const auto& v : path) s(v[0], v[1], v[2]) = 0;
  }
  return s;
}

namespace {

/// 1D squared distance transform (lower envelope of parabolas), spacing h.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, double h) {
  const int n = static_cast<int>(f.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    const double pq = q * h;
    double s = -inf;
    while (k >= 0) {
      const double pv = v[k] * h;
      s = ((f[q] + pq * pq) - (f[v[k]] + pv * pv)) / (2.0 * (pq - pv));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    if (k < 0) s = -inf;
    ++k;
    v[k] = q;
    z[k] = s;
  }
  if (k < 0) {
    d.assign(n, inf);
    return;
  }
  z[k + 1] = inf;
  d.assign(n, 0.0);
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q * h) ++j;
    const double dx = (q - v[j]) * h;
    d[q] = dx * dx + f[v[j]];
  }
}

}  // namespace

Volume<double> distance_transform(const BinaryMask& mask) {
  const auto& g = mask.grid();
  // One background voxel of padding on every side.
  const std::array<int, 3> pd{g.dims[0] + 2, g.dims[1] + 2, g.dims[2] + 2};
  auto at = [&](int i, int j, int k) { return (static_cast<std::size_t>(i) * pd[1] + j) * pd[2] + k; };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(static_cast<std::size_t>(pd[0]) * pd[1] * pd[2], 0.0);
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k)
        if (mask(i, j, k)) f[at(i + 1, j + 1, k + 1)] = inf;

  std::vector<double> line, out;
  for (int i = 0; i < pd[0]; ++i)
    for (int j = 0; j < pd[1]; ++j) {
      line.resize(pd[2]);
      for (int k = 0; k < pd[2]; ++k) line[k] = f[at(i, j, k)];
      edt_1d(line, out, g.spacing[2]);
      for (int k = 0; k < pd[2]; ++k) f[at(i, j, k)] = out[k];
    }
  for (int i = 0; i < pd[0]; ++i)
    for (int k = 0; k < pd[2]; ++k) {
      line.resize(pd[1]);
      for (int j = 0; j < pd[1]; ++j) line[j] = f[at(i, j, k)];
      edt_1d(line, out, g.spacing[1]);
      for (int j = 0; j < pd[1]; ++j) f[at(i, j, k)] = out[j];
    }
  for (int j = 0; j < pd[1]; ++j)
    for (int k = 0; k < pd[2]; ++k) {
      line.resize(pd[0]);
      for (int i = 0; i < pd[0]; ++i) line[i] = f[at(i, j, k)];
      edt_1d(line, out, g.spacing[0]);
      for (int i = 0; i < pd[0]; ++i) f[at(i, j, k)] = out[i];
    }

  Volume<double> dt(g, 0.0);
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k) dt(i, j, k) = std::sqrt(f[at(i + 1, j + 1, k + 1)]);
  return dt;
}

}  // namespace ufdt
