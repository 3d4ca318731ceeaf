// SPDX-License-Identifier: Apache-2.0
#include "ufdt/vessel_quant.hpp"

#include "ufdt/skeleton.hpp"
#include "ufdt/tomo_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>

namespace ufdt {

BinaryMask threshold_volume(const PowerVolume& vol, const Box& noise_region, double z_threshold) {
  const auto [mean, sd] = region_mean_sd(vol, noise_region);
  if (!(sd > 0.0)) throw std::invalid_argument("threshold_volume: noise region has zero variance");
  BinaryMask mask(vol.grid(), 0);
  for (std::size_t n = 0; n < vol.size(); ++n) mask[n] = (vol[n] - mean) / sd > z_threshold ? 1 : 0;
  return mask;
}

namespace {

using Index3 = std::array<int, 3>;

double step_length(const GridSpec& g, const Index3& a, const Index3& b) {
  return Vec3((a[0] - b[0]) * g.spacing[0], (a[1] - b[1]) * g.spacing[1],
              (a[2] - b[2]) * g.spacing[2])
      .norm();
}

/// Label image: -1 background, -2 junction, >= 0 segment id.
struct SkeletonLabels {
  std::vector<int> label;
  std::vector<std::vector<Index3>> segments;
  std::vector<int> junction_cluster;  // per voxel, -1 if not a junction
  int cluster_count = 0;
};

SkeletonLabels label_skeleton(const BinaryMask& s) {
  const auto& g = s.grid();
  SkeletonLabels out;
  out.label.assign(s.size(), -1);
  out.junction_cluster.assign(s.size(), -1);
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k)
        if (s(i, j, k)) out.label[g.index(i, j, k)] = neighbor_count(s, i, j, k) >= 3 ? -2 : -3;

  auto flood = [&](const Index3& seed, int wanted, const std::function<void(const Index3&)>& visit) {
    std::vector<Index3> stack{seed};
    visit(seed);
    while (!stack.empty()) {
      const Index3 v = stack.back();
      stack.pop_back();
      for (const auto& o : neighbors26()) {
        const Index3 q{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
        if (!g.contains(q[0], q[1], q[2])) continue;
        const std::size_t n = g.index(q[0], q[1], q[2]);
        if (out.label[n] != wanted) continue;
        if (wanted == -2 && out.junction_cluster[n] >= 0) continue;
        visit(q);
        stack.push_back(q);
      }
    }
  };

  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k) {
        const std::size_t n = g.index(i, j, k);
        if (out.label[n] == -3) {
          const int id = static_cast<int>(out.segments.size());
          out.segments.emplace_back();
          flood({i, j, k}, -3, [&](const Index3& v) {
            out.label[g.index(v[0], v[1], v[2])] = id;
            out.segments[id].push_back(v);
          });
        } else if (out.label[n] == -2 && out.junction_cluster[n] < 0) {
          const int id = out.cluster_count++;
          flood({i, j, k}, -2,
                [&](const Index3& v) { out.junction_cluster[g.index(v[0], v[1], v[2])] = id; });
        }
      }
  return out;
}

/// Dijkstra within one segment component; returns distances and predecessors.
struct PathTree {
  std::map<Index3, double> dist;
  std::map<Index3, Index3> prev;
};

PathTree shortest_paths(const GridSpec& g, const std::vector<int>& label, int id, const Index3& src) {
  PathTree t;
  using Item = std::pair<double, Index3>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  t.dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (d > t.dist[v]) continue;
    for (const auto& o : neighbors26()) {
      const Index3 q{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
      if (!g.contains(q[0], q[1], q[2]) || label[g.index(q[0], q[1], q[2])] != id) continue;
      const double nd = d + step_length(g, v, q);
      auto it = t.dist.find(q);
      if (it == t.dist.end() || nd < it->second) {
        t.dist[q] = nd;
        t.prev[q] = v;
        pq.push({nd, q});
      }
    }
  }
  return t;
}

std::vector<Vec3> smooth_polyline(const std::vector<Vec3>& p, int half) {
  const int n = static_cast<int>(p.size());
  std::vector<Vec3> out(p.size());
  for (int i = 0; i < n; ++i) {
    const int w = std::min({half, i, n - 1 - i});
    Vec3 acc = Vec3::Zero();
    for (int d = -w; d <= w; ++d) acc += p[i + d];
    out[i] = acc / (2 * w + 1);
  }
  return out;
}

}  // namespace

VesselGraph extract_segments(const BinaryMask& skeleton, const BinaryMask& mask,
                             const SegmentOptions& options) {
  const auto& g = skeleton.grid();
  if (!g.same_lattice(mask.grid()))
    throw std::invalid_argument("extract_segments: skeleton and mask grids differ");
  const SkeletonLabels sk = label_skeleton(skeleton);
  VesselGraph graph;
  if (sk.segments.empty()) return graph;

  auto junction_neighbors = [&](const Index3& v) {
    std::vector<Index3> out;
    for (const auto& o : neighbors26()) {
      const Index3 q{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
      if (g.contains(q[0], q[1], q[2]) && sk.label[g.index(q[0], q[1], q[2])] == -2) out.push_back(q);
    }
    return out;
  };

  std::vector<double> core_length(sk.segments.size(), 0.0);
  std::vector<std::vector<Index3>> core_paths(sk.segments.size());
  std::map<int, std::set<int>> cluster_segments;

  for (std::size_t id = 0; id < sk.segments.size(); ++id) {
    const auto& comp = sk.segments[id];
    std::vector<Index3> terminals;
    for (const auto& v : comp) {
      int inner = 0;
      for (const auto& o : neighbors26()) {
        const Index3 q{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
        if (g.contains(q[0], q[1], q[2]) && sk.label[g.index(q[0], q[1], q[2])] == static_cast<int>(id))
          ++inner;
      }
      const auto jn = junction_neighbors(v);
      for (const auto& j : jn) cluster_segments[sk.junction_cluster[g.index(j[0], j[1], j[2])]].insert(static_cast<int>(id));
      if (inner <= 1 || !jn.empty()) terminals.push_back(v);
    }
    if (terminals.empty()) terminals.push_back(comp.front());

    auto farthest = [&](const PathTree& t) {
      Index3 best = terminals.front();
      double bd = -1.0;
      for (const auto& v : terminals) {
        const auto it = t.dist.find(v);
        if (it != t.dist.end() && it->second > bd) {
          bd = it->second;
          best = v;
        }
      }
      return best;
    };
    const Index3 a = farthest(shortest_paths(g, sk.label, static_cast<int>(id), comp.front()));
    const PathTree from_a = shortest_paths(g, sk.label, static_cast<int>(id), a);
    const Index3 b = farthest(from_a);
    std::vector<Index3> path{b};
    while (path.back() != a) path.push_back(from_a.prev.at(path.back()));
    std::reverse(path.begin(), path.end());
    core_length[id] = from_a.dist.at(b);
    core_paths[id] = path;

    // Extend to adjacent junction voxels, preferring distinct clusters at the two ends.
    std::vector<Index3> full = path;
    const auto ja = junction_neighbors(a);
    int cluster_a = -1;
    if (!ja.empty()) {
      full.insert(full.begin(), ja.front());
      cluster_a = sk.junction_cluster[g.index(ja.front()[0], ja.front()[1], ja.front()[2])];
    }
    const auto jb = junction_neighbors(b);
    const auto other = std::find_if(jb.begin(), jb.end(), [&](const Index3& j) {
      return sk.junction_cluster[g.index(j[0], j[1], j[2])] != cluster_a;
    });
    if (other != jb.end()) {
      full.push_back(*other);
    } else if (path.size() > 1 && !jb.empty()) {
      full.push_back(jb.front());
    }

    std::vector<Vec3> pts;
    for (const auto& v : full) pts.push_back(g.position(v[0], v[1], v[2]));
    VesselSegment seg;
    seg.centerline = smooth_polyline(pts, options.smoothing_half_window);
    if (seg.centerline.size() == 1) seg.centerline.push_back(seg.centerline.front());
    seg.length = polyline_length(seg.centerline);
    graph.segments.push_back(std::move(seg));
  }

  for (const auto& [cluster, ids] : cluster_segments) {
    for (auto it = ids.begin(); it != ids.end(); ++it)
      for (auto jt = std::next(it); jt != ids.end(); ++jt) graph.connections.emplace_back(*it, *jt);
  }

  const Volume<double> dt = distance_transform(mask);
  auto edt_diameter = [&](std::size_t id) {
    double acc = 0.0;
    for (const auto& v : core_paths[id]) acc += dt(v[0], v[1], v[2]);
    return 2.0 * acc / static_cast<double>(core_paths[id].size());
  };

  if (options.estimator == DiameterEstimator::centerline_edt) {
    for (std::size_t id = 0; id < graph.segments.size(); ++id)
      graph.segments[id].mean_diameter = edt_diameter(id);
    return graph;
  }

  // Assign every mask voxel to its nearest skeleton voxel (geodesic within the mask).
  std::vector<double> dist(mask.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> owner(mask.size(), mask.size());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (std::size_t n = 0; n < mask.size(); ++n) {
    if (!skeleton[n]) continue;
    dist[n] = 0.0;
    owner[n] = n;
    pq.push({0.0, n});
  }
  const int ny = g.dims[1], nz = g.dims[2];
  auto unflat = [&](std::size_t n) {
    return Index3{static_cast<int>(n / (static_cast<std::size_t>(ny) * nz)), static_cast<int>((n / nz) % ny),
                  static_cast<int>(n % nz)};
  };
  while (!pq.empty()) {
    const auto [d, n] = pq.top();
    pq.pop();
    if (d > dist[n]) continue;
    const Index3 v = unflat(n);
    for (const auto& o : neighbors26()) {
      const int a = v[0] + o[0], b = v[1] + o[1], c = v[2] + o[2];
      if (!g.contains(a, b, c)) continue;
      const std::size_t q = g.index(a, b, c);
      if (!mask[q]) continue;
      const double nd = d + step_length(g, v, {a, b, c});
      if (nd < dist[q]) {
        dist[q] = nd;
        owner[q] = owner[n];
        pq.push({nd, q});
      }
    }
  }
  std::vector<double> owned(mask.size(), 0.0);
  for (std::size_t n = 0; n < mask.size(); ++n)
    if (mask[n] && owner[n] < mask.size()) owned[owner[n]] += 1.0;

  const double voxel_volume = g.spacing.prod();
  const double voxel_step = std::cbrt(voxel_volume);
  for (std::size_t id = 0; id < graph.segments.size(); ++id) {
    const auto& path = core_paths[id];
    const int m = static_cast<int>(path.size());
    // Volume per path position; off-path voxels of the segment go to their closest path voxel.
    std::vector<double> slab(m, 0.0);
    for (int p = 0; p < m; ++p) slab[p] = owned[g.index(path[p][0], path[p][1], path[p][2])];
    for (const auto& v : sk.segments[id]) {
      if (std::find(path.begin(), path.end(), v) != path.end()) continue;
      int best = 0, bd = std::numeric_limits<int>::max();
      for (int p = 0; p < m; ++p) {
        const int dd = std::max({std::abs(v[0] - path[p][0]), std::abs(v[1] - path[p][1]), std::abs(v[2] - path[p][2])});
        if (dd < bd) {
          bd = dd;
          best = p;
        }
      }
      slab[best] += owned[g.index(v[0], v[1], v[2])];
    }
    // Skip the stretch inside a neighboring vessel at each junction end.
    auto trim = [&](const Index3& end) {
      int t = 0;
      for (const auto& j : junction_neighbors(end))
        t = std::max(t, static_cast<int>(std::ceil(dt(j[0], j[1], j[2]) / voxel_step)) + 1);
      return t;
    };
    int lo = trim(path.front()), hi = m - 1 - trim(path.back());
    if (hi - lo < 2) {
      lo = 0;
      hi = m - 1;
    }
    double volume = 0.0;
    for (int p = lo; p <= hi; ++p) volume += slab[p] * voxel_volume;
    double length = voxel_step;
    if (hi > lo) {
      std::vector<Vec3> pts;
      for (const auto& v : path) pts.push_back(g.position(v[0], v[1], v[2]));
      const auto smooth = smooth_polyline(pts, options.smoothing_half_window);
      double span = 0.0;
      for (int p = lo; p < hi; ++p) span += (smooth[p + 1] - smooth[p]).norm();
      length = span * (hi - lo + 1) / (hi - lo);
    }
    graph.segments[id].mean_diameter =
        volume > 0.0 ? 2.0 * std::sqrt(volume / (std::numbers::pi * length)) : edt_diameter(id);
  }
  return graph;
}

std::size_t diameter_bin(double diameter, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("diameter_bin: bin width must be positive");
  if (!(diameter >= 0.0)) throw std::invalid_argument("diameter_bin: diameter must be >= 0");
  return static_cast<std::size_t>(std::floor(diameter / bin_width + 1e-9));
}

DiameterHistogram diameter_histogram(const VesselGraph& graph, double bin_width) {
  DiameterHistogram h;
  h.bin_width = bin_width;
  for (const auto& s : graph.segments) {
    const std::size_t k = diameter_bin(s.mean_diameter, bin_width);
    if (k >= h.zeta.size()) h.zeta.resize(k + 1, 0.0);
    h.zeta[k] += s.length;
    h.total += s.length;
  }
  return h;
}

std::vector<double> normalized_distribution(const DiameterHistogram& h) {
  if (!(h.total > 0.0)) throw std::invalid_argument("normalized_distribution: empty graph");
  std::vector<double> out(h.zeta.size());
  for (std::size_t k = 0; k < h.zeta.size(); ++k) out[k] = h.zeta[k] / h.total;
  return out;
}

TumorRegion TumorRegion::from_ellipsoid(const Ellipsoid& e, const GridSpec& grid) {
  TumorRegion r = from_volume(e.volume());
  r.mask = BinaryMask(grid, 0);
  for (int i = 0; i < grid.dims[0]; ++i)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int k = 0; k < grid.dims[2]; ++k)
        r.mask(i, j, k) = e.contains(grid.position(i, j, k)) ? 1 : 0;
  return r;
}

TumorRegion TumorRegion::from_volume(double volume) {
  if (!(volume > 0.0)) throw std::invalid_argument("TumorRegion: volume must be positive");
  TumorRegion r;
  r.volume = volume;
  r.radius = std::cbrt(volume);
  return r;
}

double length_share(const DiameterHistogram& h, double lo, double hi) {
  if (!(h.total > 0.0)) throw std::invalid_argument("length_share: empty histogram");
  double acc = 0.0;
  for (std::size_t k = 0; k < h.zeta.size(); ++k) {
    const double a = h.lower(k), b = a + h.bin_width;
    if (a >= lo - 1e-9 && b <= hi + 1e-9) acc += h.zeta[k];
  }
  return acc / h.total;
}

ScaleNormalized scale_normalizations(const DiameterHistogram& h, const TumorRegion& region) {
  if (!(region.volume > 0.0)) throw std::invalid_argument("scale_normalizations: volume must be > 0");
  ScaleNormalized out;
  for (double z : h.zeta) {
    out.zeta_over_volume.push_back(z / region.volume);
    out.zeta_over_radius.push_back(z / region.radius);
  }
  out.total_over_volume = h.total / region.volume;
  out.total_over_radius = h.total / region.radius;
  out.small_vessel_share = h.total > 0.0 ? length_share(h, 0.0, 0.2) : 0.0;
  return out;
}

ExponentialFit fit_exponential(const DiameterHistogram& h) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < h.zeta.size(); ++k)
    if (h.zeta[k] > 0.0) {
      x.push_back(h.center(k));
      y.push_back(std::log(h.zeta[k]));
    }
  if (x.size() < 3) throw std::invalid_argument("fit_exponential: fewer than 3 nonempty bins");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  ExponentialFit fit;
  const double slope = sxy / sxx;
  fit.rate = -slope;
  fit.amplitude = std::exp(my - slope * mx);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    ss_res += r * r;
  }
  if (syy <= 1e-300) {
    fit.r_squared = 1.0;
    fit.degenerate = true;
  } else {
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

void write_histogram_csv(std::ostream& os, const DiameterHistogram& h, const TumorRegion& region) {
  const auto norm = h.total > 0.0 ? normalized_distribution(h) : std::vector<double>(h.zeta.size(), 0.0);
  const auto scaled = scale_normalizations(h, region);
  os << "phi_center_mm,zeta_mm,zeta_over_zeta0,zeta_over_volume,zeta_over_radius\n";
  os.precision(10);
  for (std::size_t k = 0; k < h.zeta.size(); ++k)
    os << h.center(k) << ',' << h.zeta[k] << ',' << norm[k] << ',' << scaled.zeta_over_volume[k]
       << ',' << scaled.zeta_over_radius[k] << '\n';
}

}  // namespace ufdt
