// SPDX-License-Identifier: Apache-2.0
#include "ufdt/phantom.hpp"

#include "ufdt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ufdt {

double VesselGraph::total_length() const {
  double acc = 0.0;
  for (const auto& s : segments) acc += s.length;
  return acc;
}

double polyline_length(const std::vector<Vec3>& pl) {
  double acc = 0.0;
  for (std::size_t i = 1; i < pl.size(); ++i) acc += (pl[i] - pl[i - 1]).norm();
  return acc;
}

Vec3 point_at_arc(const std::vector<Vec3>& pl, double s, Vec3* tangent) {
  if (pl.size() < 2) throw std::invalid_argument("point_at_arc: polyline needs >= 2 points");
  double remaining = std::max(0.0, s);
  for (std::size_t i = 1; i < pl.size(); ++i) {
    const Vec3 d = pl[i] - pl[i - 1];
    const double len = d.norm();
    const bool last = i + 1 == pl.size();
    if (remaining <= len || last) {
      const Vec3 t = len > 0.0 ? Vec3(d / len) : Vec3(1.0, 0.0, 0.0);
      if (tangent) *tangent = t;
      return pl[i - 1] + t * std::min(remaining, len);
    }
    remaining -= len;
  }
  return pl.back();
}

double distance_to_polyline(const std::vector<Vec3>& pl, const Vec3& p, double* arc) {
  double best = std::numeric_limits<double>::infinity();
  double best_arc = 0.0, acc = 0.0;
  for (std::size_t i = 1; i < pl.size(); ++i) {
    const Vec3 d = pl[i] - pl[i - 1];
    const double len2 = d.squaredNorm();
    double t = len2 > 0.0 ? (p - pl[i - 1]).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dist = (pl[i - 1] + t * d - p).norm();
    if (dist < best) {
      best = dist;
      best_arc = acc + t * std::sqrt(len2);
    }
    acc += std::sqrt(len2);
  }
  if (arc) *arc = best_arc;
  return best;
}

void TreeParams::validate() const {
  if (!(decay > 0.0 && decay < 1.0))
    throw std::invalid_argument("TreeParams: decay must lie in (0, 1) for the tree to terminate");
  if (root_count < 1) throw std::invalid_argument("TreeParams: root_count must be >= 1");
  if (!(root_diameter > 0.0) || !(min_diameter > 0.0))
    throw std::invalid_argument("TreeParams: diameters must be positive");
  if (fanout_min < 1 || fanout_max < fanout_min)
    throw std::invalid_argument("TreeParams: invalid fan-out range");
  if (!(length_ratio > 0.0)) throw std::invalid_argument("TreeParams: length_ratio must be positive");
  if (decay_jitter < 0.0 || length_jitter < 0.0 || branch_angle_jitter_deg < 0.0)
    throw std::invalid_argument("TreeParams: jitters must be non-negative");
  if (root_flow_speed < 0.0) throw std::invalid_argument("TreeParams: flow speed must be >= 0");
  if (root_direction.norm() == 0.0) throw std::invalid_argument("TreeParams: zero root direction");
}

TreeParams TreeParams::calibrated_small_vessel() {
  TreeParams p;
  p.root_count = 4;
  p.root_diameter = 0.4;
  p.decay = 0.75;
  p.decay_jitter = 0.1;
  p.min_diameter = 0.07;
  p.length_exponent = 1.5;
  p.length_jitter = 0.25;
  return p;
}

namespace {

/// Unit vectors spanning the plane normal to t.
std::pair<Vec3, Vec3> normal_frame(const Vec3& t) {
  const Vec3 ref = std::abs(t.z()) < 0.9 ? Vec3(0.0, 0.0, 1.0) : Vec3(1.0, 0.0, 0.0);
  const Vec3 n1 = t.cross(ref).normalized();
  return {n1, t.cross(n1)};
}

struct Pending {
  Vec3 start;
  Vec3 direction;
  double diameter;
  double flow_speed;
  int parent;
};

}  // namespace

VesselGraph generate_tree(std::uint64_t seed, const TreeParams& p) {
  p.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  VesselGraph g;
  std::vector<Pending> stack;
  const Vec3 root_dir = p.root_direction.normalized();
  const auto [rn1, rn2] = normal_frame(root_dir);
  for (int r = p.root_count - 1; r >= 0; --r) {
    Vec3 origin = p.root_origin;
    if (p.root_count > 1) {
      const double a = 2.0 * std::numbers::pi * r / p.root_count;
      origin += p.root_spread * (std::cos(a) * rn1 + std::sin(a) * rn2);
    }
    stack.push_back({origin, root_dir, p.root_diameter, p.root_flow_speed, -1});
  }

  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    if (static_cast<int>(g.segments.size()) >= p.max_segments)
      throw std::runtime_error("generate_tree: max_segments exceeded");

    const double length = p.length_ratio * p.root_diameter *
                          std::pow(cur.diameter / p.root_diameter, p.length_exponent) *
                          std::exp(p.length_jitter * normal(rng));
    VesselSegment seg;
    seg.centerline = {cur.start, cur.start + length * cur.direction};
    seg.length = polyline_length(seg.centerline);
    seg.mean_diameter = cur.diameter;
    seg.flow_speed = cur.flow_speed;
    seg.parent = cur.parent;
    const int id = static_cast<int>(g.segments.size());
    if (cur.parent >= 0) g.connections.emplace_back(cur.parent, id);
    g.segments.push_back(seg);

    const int n = p.fanout_min + static_cast<int>(std::floor(uniform(rng) * (p.fanout_max - p.fanout_min + 1)));
    const double azimuth0 = 2.0 * std::numbers::pi * uniform(rng);
    const auto [n1, n2] = normal_frame(cur.direction);
    const double parent_flow = cur.flow_speed * cur.diameter * cur.diameter;
    std::vector<Pending> children;
    for (int c = 0; c < std::min(n, 8); ++c) {
      const double d = cur.diameter * p.decay * std::exp(p.decay_jitter * normal(rng));
      const double angle = std::clamp(p.branch_angle_deg + p.branch_angle_jitter_deg * normal(rng), 5.0, 85.0);
      const double psi = azimuth0 + 2.0 * std::numbers::pi * c / n;
      if (d < p.min_diameter) continue;
      const double a = deg_to_rad(angle);
      const Vec3 dir = (std::cos(a) * cur.direction +
                        std::sin(a) * (std::cos(psi) * n1 + std::sin(psi) * n2))
                           .normalized();
      // Volumetric flow split evenly between children.
      const double speed = parent_flow / (n * d * d);
      children.push_back({seg.centerline.back(), dir, d, speed, id});
    }
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(*it);
  }
  return g;
}

VesselGraph scale_tree_lengths(const VesselGraph& graph, const Vec3& center, double factor) {
  VesselGraph out = graph;
  for (auto& s : out.segments) {
    for (auto& pt : s.centerline) pt = center + factor * (pt - center);
    s.length = polyline_length(s.centerline);
  }
  return out;
}

double Ellipsoid::volume() const {
  return 4.0 / 3.0 * std::numbers::pi * semi_axes.prod();
}

double BolusParams::curve(double tau) const {
  if (tau <= 0.0) return 0.0;
  const double r = tau / peak_time;
  return peak_intensity * std::pow(r, alpha) * std::exp(alpha * (1.0 - r));
}

void PhantomSpec::validate() const {
  if (!(tissue_density > 0.0) || !(blood_density > 0.0))
    throw std::invalid_argument("PhantomSpec: densities must be positive");
  if (!std::isfinite(tissue_to_blood_db))
    throw std::invalid_argument("PhantomSpec: amplitude ratio must be finite");
  for (const auto& s : tree.segments) {
    if (s.centerline.size() < 2) throw std::invalid_argument("PhantomSpec: segment needs >= 2 points");
    if (!(s.mean_diameter > 0.0)) throw std::invalid_argument("PhantomSpec: diameter must be positive");
    if (s.flow_speed < 0.0) throw std::invalid_argument("PhantomSpec: flow speed must be >= 0");
  }
}

std::size_t ScattererCloud::count(ScattererLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void ScattererCloud::push_static(const Vec3& p, double amplitude, ScattererLabel label) {
  positions.push_back(p);
  amplitudes.push_back(amplitude);
  velocities.push_back(Vec3::Zero());
  labels.push_back(label);
  tracks.push_back({});
}

Vec3 track_position(const VesselGraph& tree, const VesselTrack& tr, Vec3* tangent) {
  const auto& seg = tree.segments.at(tr.segment);
  Vec3 t;
  const Vec3 c = point_at_arc(seg.centerline, tr.arc, &t);
  const auto [n1, n2] = normal_frame(t);
  if (tangent) *tangent = t;
  return c + tr.u * n1 + tr.v * n2;
}

namespace {

bool inside_any_vessel(const VesselGraph& g, const Vec3& p) {
  for (const auto& s : g.segments)
    if (distance_to_polyline(s.centerline, p) <= 0.5 * s.mean_diameter) return true;
  return false;
}

}  // namespace

ScattererCloud seed_scatterers(const PhantomSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ScattererCloud cloud;
  cloud.tree = std::make_shared<const VesselGraph>(spec.tree);

  const double tissue_amp = spec.blood_amplitude * std::pow(10.0, spec.tissue_to_blood_db / 20.0);
  const double region_volume = spec.tissue_region.volume();
  if (region_volume > 0.0) {
    std::poisson_distribution<long> count(spec.tissue_density * region_volume);
    const long n = count(rng);
    const Vec3 span = spec.tissue_region.hi - spec.tissue_region.lo;
    for (long i = 0; i < n; ++i) {
      const Vec3 p = spec.tissue_region.lo +
                     Vec3(uniform(rng), uniform(rng), uniform(rng)).cwiseProduct(span);
      if (inside_any_vessel(spec.tree, p)) continue;
      cloud.push_static(p, tissue_amp, ScattererLabel::tissue);
    }
  }

  for (int si = 0; si < static_cast<int>(spec.tree.segments.size()); ++si) {
    const auto& seg = spec.tree.segments[si];
    const double r = 0.5 * seg.mean_diameter;
    const double mean = spec.blood_density * std::numbers::pi * r * r * seg.length;
    if (!(mean > 0.0)) continue;
    std::poisson_distribution<long> count(mean);
    const long n = count(rng);
    for (long i = 0; i < n; ++i) {
      VesselTrack tr;
      tr.segment = si;
      tr.arc = uniform(rng) * seg.length;
      const double rad = r * std::sqrt(uniform(rng));
      const double phi = 2.0 * std::numbers::pi * uniform(rng);
      tr.u = rad * std::cos(phi);
      tr.v = rad * std::sin(phi);
      Vec3 t;
      cloud.positions.push_back(track_position(spec.tree, tr, &t));
      cloud.amplitudes.push_back(spec.blood_amplitude);
      cloud.velocities.push_back(seg.flow_speed * t);
      cloud.labels.push_back(ScattererLabel::blood);
      cloud.tracks.push_back(tr);
    }
  }
  return cloud;
}

ScattererCloud advance(const ScattererCloud& cloud, double dt) {
  if (dt < 0.0) throw std::invalid_argument("advance: dt must be >= 0");
  ScattererCloud out = cloud;
  if (dt == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& tr = out.tracks[i];
    if (tr.segment < 0) continue;
    const auto& seg = cloud.tree->segments.at(tr.segment);
    if (seg.flow_speed == 0.0 || seg.length <= 0.0) continue;
    tr.arc = std::fmod(tr.arc + seg.flow_speed * dt, seg.length);
    Vec3 t;
    out.positions[i] = track_position(*cloud.tree, tr, &t);
    out.velocities[i] = seg.flow_speed * t;
  }
  return out;
}

std::pair<ScattererCloud, ScattererCloud> split_static(const ScattererCloud& cloud) {
  ScattererCloud fixed, moving;
  fixed.tree = moving.tree = cloud.tree;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool moves = cloud.tracks[i].segment >= 0 &&
                       cloud.tree->segments.at(cloud.tracks[i].segment).flow_speed > 0.0;
    auto& dst = moves ? moving : fixed;
    dst.positions.push_back(cloud.positions[i]);
    dst.amplitudes.push_back(cloud.amplitudes[i]);
    dst.velocities.push_back(cloud.velocities[i]);
    dst.labels.push_back(cloud.labels[i]);
    dst.tracks.push_back(cloud.tracks[i]);
  }
  return {fixed, moving};
}

std::vector<double> segment_start_delays(const VesselGraph& tree) {
  const std::size_t n = tree.segments.size();
  std::vector<double> delay(n, -1.0);
  // Parents always precede children in generated trees, but resolve
  // arbitrary orderings by iterating to a fixed point.
  for (std::size_t pass = 0; pass <= n; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (delay[i] >= 0.0) continue;
      const int p = tree.segments[i].parent;
      if (p < 0) {
        delay[i] = 0.0;
        changed = true;
      } else if (delay[p] >= 0.0) {
        const auto& ps = tree.segments[p];
        const double transit = ps.flow_speed > 0.0 ? ps.length / ps.flow_speed
                                                   : std::numeric_limits<double>::infinity();
        delay[i] = delay[p] + transit;
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (double& d : delay)
    if (d < 0.0) d = std::numeric_limits<double>::infinity();
  return delay;
}

double hashed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t h1 = mix(seed ^ mix(a ^ mix(b)));
  const std::uint64_t h2 = mix(h1 + 0x632be59bd9b4e019ULL);
  const double u1 = (static_cast<double>(h1 >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BolusField::BolusField(const PhantomSpec& spec, const GridSpec& grid)
    : grid_(grid), bolus_(spec.bolus), seed_(spec.rng_seed), delay_(grid.size(), -1.0) {
  grid_.validate();
  const auto start = segment_start_delays(spec.tree);
  for (std::size_t si = 0; si < spec.tree.segments.size(); ++si) {
    const auto& seg = spec.tree.segments[si];
    if (!std::isfinite(start[si])) continue;
    const double r = 0.5 * seg.mean_diameter;
    Vec3 lo = seg.centerline.front(), hi = lo;
    for (const auto& pt : seg.centerline) {
      lo = lo.cwiseMin(pt);
      hi = hi.cwiseMax(pt);
    }
    const Vec3 ilo = grid_.to_index(lo - Vec3::Constant(r));
    const Vec3 ihi = grid_.to_index(hi + Vec3::Constant(r));
    std::array<int, 3> a{}, b{};
    for (int ax = 0; ax < 3; ++ax) {
      a[ax] = std::max(0, static_cast<int>(std::floor(ilo[ax])));
      b[ax] = std::min(grid_.dims[ax] - 1, static_cast<int>(std::ceil(ihi[ax])));
    }
    for (int i = a[0]; i <= b[0]; ++i)
      for (int j = a[1]; j <= b[1]; ++j)
        for (int k = a[2]; k <= b[2]; ++k) {
          double arc = 0.0;
          if (distance_to_polyline(seg.centerline, grid_.position(i, j, k), &arc) > r) continue;
          const double d = start[si] + (seg.flow_speed > 0.0 ? arc / seg.flow_speed
                                                              : std::numeric_limits<double>::infinity());
          if (!std::isfinite(d)) continue;
          double& slot = delay_[grid_.index(i, j, k)];
          if (slot < 0.0 || d < slot) slot = d;
        }
  }
}

Volume<double> BolusField::intensity_frame(double t, std::uint64_t frame) const {
  if (t < 0.0) throw std::invalid_argument("bolus_intensity: t must be >= 0");
  Volume<double> out(grid_, 0.0);
  for (std::size_t n = 0; n < delay_.size(); ++n) {
    double v = delay_[n] >= 0.0 ? bolus_.curve(t - delay_[n]) : 0.0;
    if (bolus_.noise_sd > 0.0) v += bolus_.noise_sd * hashed_normal(seed_, n, frame);
    out[n] = std::max(0.0, v);
  }
  return out;
}

Volume<double> BolusField::intensity(double t) const {
  return intensity_frame(t, static_cast<std::uint64_t>(std::llround(t * 1e6)));
}

Volume<double> bolus_intensity(const PhantomSpec& spec, double t, const GridSpec& grid) {
  return BolusField(spec, grid).intensity(t);
}

BinaryMask rasterize_tree(const VesselGraph& graph, const GridSpec& grid) {
  BinaryMask mask(grid, 0);
  for (const auto& seg : graph.segments) {
    const double r = 0.5 * seg.mean_diameter;
    for (std::size_t pi = 1; pi < seg.centerline.size(); ++pi) {
      const Vec3 p0 = seg.centerline[pi - 1], p1 = seg.centerline[pi];
      const Vec3 ilo = grid.to_index(p0.cwiseMin(p1) - Vec3::Constant(r));
      const Vec3 ihi = grid.to_index(p0.cwiseMax(p1) + Vec3::Constant(r));
      std::array<int, 3> a{}, b{};
      for (int ax = 0; ax < 3; ++ax) {
        a[ax] = std::max(0, static_cast<int>(std::floor(ilo[ax])));
        b[ax] = std::min(grid.dims[ax] - 1, static_cast<int>(std::ceil(ihi[ax])));
      }
      const Vec3 d = p1 - p0;
      const double len2 = d.squaredNorm();
      for (int i = a[0]; i <= b[0]; ++i)
        for (int j = a[1]; j <= b[1]; ++j)
          for (int k = a[2]; k <= b[2]; ++k) {
            const Vec3 x = grid.position(i, j, k);
            const double t = len2 > 0.0 ? std::clamp((x - p0).dot(d) / len2, 0.0, 1.0) : 0.0;
            if ((p0 + t * d - x).squaredNorm() <= r * r) mask(i, j, k) = 1;
          }
    }
  }
  return mask;
}

GridSpec grid_around_tree(const VesselGraph& graph, double spacing, double margin) {
  if (graph.segments.empty()) throw std::invalid_argument("grid_around_tree: empty graph");
  Vec3 lo = graph.segments.front().centerline.front(), hi = lo;
  for (const auto& s : graph.segments)
    for (const auto& p : s.centerline) {
      const double r = 0.5 * s.mean_diameter;
      lo = lo.cwiseMin(p - Vec3::Constant(r));
      hi = hi.cwiseMax(p + Vec3::Constant(r));
    }
  lo -= Vec3::Constant(margin);
  hi += Vec3::Constant(margin);
  GridSpec g;
  g.spacing = Vec3::Constant(spacing);
  for (int a = 0; a < 3; ++a) {
    g.origin[a] = std::floor(lo[a] / spacing) * spacing;
    g.dims[a] = static_cast<int>(std::ceil((hi[a] - g.origin[a]) / spacing)) + 1;
  }
  g.validate();
  return g;
}

void write_vessel_graph(std::ostream& os, const VesselGraph& graph) {
  os << "# id\tlength_mm\tmean_diameter_mm\tpolyline(x,y,z;...)\n";
  os.precision(17);
  for (std::size_t i = 0; i < graph.segments.size(); ++i) {
    const auto& s = graph.segments[i];
    os << i << '\t' << s.length << '\t' << s.mean_diameter << '\t';
    for (std::size_t p = 0; p < s.centerline.size(); ++p) {
      if (p) os << ';';
      os << s.centerline[p][0] << ',' << s.centerline[p][1] << ',' << s.centerline[p][2];
    }
    os << '\n';
  }
}

VesselGraph read_vessel_graph(std::istream& is) {
  VesselGraph g;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string id, len, dia, poly;
    if (!std::getline(ls, id, '\t') || !std::getline(ls, len, '\t') ||
        !std::getline(ls, dia, '\t') || !std::getline(ls, poly))
      throw std::runtime_error("read_vessel_graph: malformed line: " + line);
    VesselSegment s;
    s.length = std::stod(len);
    s.mean_diameter = std::stod(dia);
    std::istringstream ps(poly);
    std::string pt;
    while (std::getline(ps, pt, ';')) {
      Vec3 v;
      char c1 = 0, c2 = 0;
      std::istringstream xs(pt);
      if (!(xs >> v[0] >> c1 >> v[1] >> c2 >> v[2]) || c1 != ',' || c2 != ',')
        throw std::runtime_error("read_vessel_graph: malformed point: " + pt);
      s.centerline.push_back(v);
    }
    g.segments.push_back(std::move(s));
  }
  return g;
}

namespace {
nlohmann::json vj(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }
Vec3 jv(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}
}  // namespace

void to_json(nlohmann::json& j, const TreeParams& p) {
  j = {{"root_count", p.root_count},
       {"root_origin_mm", vj(p.root_origin)},
       {"root_direction", vj(p.root_direction)},
       {"root_spread_mm", p.root_spread},
       {"root_diameter_mm", p.root_diameter},
       {"root_flow_speed_mm_s", p.root_flow_speed},
       {"decay", p.decay},
       {"decay_jitter", p.decay_jitter},
       {"fanout_min", p.fanout_min},
       {"fanout_max", p.fanout_max},
       {"length_ratio", p.length_ratio},
       {"length_exponent", p.length_exponent},
       {"length_jitter", p.length_jitter},
       {"branch_angle_deg", p.branch_angle_deg},
       {"branch_angle_jitter_deg", p.branch_angle_jitter_deg},
       {"min_diameter_mm", p.min_diameter},
       {"max_segments", p.max_segments}};
}

void from_json(const nlohmann::json& j, TreeParams& p) {
  TreeParams d;
  p.root_count = j.value("root_count", d.root_count);
  p.root_origin = j.contains("root_origin_mm") ? jv(j.at("root_origin_mm")) : d.root_origin;
  p.root_direction = j.contains("root_direction") ? jv(j.at("root_direction")) : d.root_direction;
  p.root_spread = j.value("root_spread_mm", d.root_spread);
  p.root_diameter = j.value("root_diameter_mm", d.root_diameter);
  p.root_flow_speed = j.value("root_flow_speed_mm_s", d.root_flow_speed);
  p.decay = j.value("decay", d.decay);
  p.decay_jitter = j.value("decay_jitter", d.decay_jitter);
  p.fanout_min = j.value("fanout_min", d.fanout_min);
  p.fanout_max = j.value("fanout_max", d.fanout_max);
  p.length_ratio = j.value("length_ratio", d.length_ratio);
  p.length_exponent = j.value("length_exponent", d.length_exponent);
  p.length_jitter = j.value("length_jitter", d.length_jitter);
  p.branch_angle_deg = j.value("branch_angle_deg", d.branch_angle_deg);
  p.branch_angle_jitter_deg = j.value("branch_angle_jitter_deg", d.branch_angle_jitter_deg);
  p.min_diameter = j.value("min_diameter_mm", d.min_diameter);
  p.max_segments = j.value("max_segments", d.max_segments);
}

void to_json(nlohmann::json& j, const Ellipsoid& e) {
  j = {{"center_mm", vj(e.center)}, {"semi_axes_mm", vj(e.semi_axes)}};
}

void from_json(const nlohmann::json& j, Ellipsoid& e) {
  e.center = jv(j.at("center_mm"));
  e.semi_axes = jv(j.at("semi_axes_mm"));
}

void to_json(nlohmann::json& j, const BolusParams& b) {
  j = {{"alpha", b.alpha},
       {"peak_time_s", b.peak_time},
       {"peak_intensity", b.peak_intensity},
       {"noise_sd", b.noise_sd}};
}

void from_json(const nlohmann::json& j, BolusParams& b) {
  BolusParams d;
  b.alpha = j.value("alpha", d.alpha);
  b.peak_time = j.value("peak_time_s", d.peak_time);
  b.peak_intensity = j.value("peak_intensity", d.peak_intensity);
  b.noise_sd = j.value("noise_sd", d.noise_sd);
}

}  // namespace ufdt
