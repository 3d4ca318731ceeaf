// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ufdt {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned sampling lattice. Index (i, j, k) maps to origin + (i, j, k) * spacing.
/// Linear storage order is C-order with k (z) fastest.
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  Vec3 spacing = Vec3::Constant(0.05);
  std::array<int, 3> dims = {1, 1, 1};

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
        throw std::invalid_argument("GridSpec: spacing must be positive");
      if (dims[a] < 1) throw std::invalid_argument("GridSpec: dims must be >= 1");
      if (!std::isfinite(origin[a])) throw std::invalid_argument("GridSpec: origin must be finite");
    }
  }

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
  }

  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }

  Vec3 position(int i, int j, int k) const {
    return origin + Vec3(i * spacing[0], j * spacing[1], k * spacing[2]);
  }

  /// Continuous (fractional) index coordinates of a physical point.
  Vec3 to_index(const Vec3& p) const { return (p - origin).cwiseQuotient(spacing); }

  Vec3 extent_max() const {
    return origin + Vec3((dims[0] - 1) * spacing[0], (dims[1] - 1) * spacing[1],
                         (dims[2] - 1) * spacing[2]);
  }

  Vec3 center() const { return 0.5 * (origin + extent_max()); }

  bool same_lattice(const GridSpec& o, double tol = 1e-9) const {
    return dims == o.dims && (origin - o.origin).cwiseAbs().maxCoeff() <= tol &&
           (spacing - o.spacing).cwiseAbs().maxCoeff() <= tol;
  }

  /// Grid with the given spacing whose samples are symmetric about `center`.
  static GridSpec centered(const Vec3& center, const Vec3& spacing, std::array<int, 3> dims) {
    GridSpec g;
    g.spacing = spacing;
    g.dims = dims;
    for (int a = 0; a < 3; ++a) g.origin[a] = center[a] - 0.5 * (dims[a] - 1) * spacing[a];
    g.validate();
    return g;
  }
};

/// Dense 3D array bound to a GridSpec.
template <typename T>
class Volume {
 public:
  Volume() = default;
  explicit Volume(const GridSpec& grid, T fill = T{}) : grid_(grid), data_(grid.size(), fill) {
    grid_.validate();
  }
  Volume(const GridSpec& grid, std::vector<T> data) : grid_(grid), data_(std::move(data)) {
    grid_.validate();
    if (data_.size() != grid_.size()) throw std::invalid_argument("Volume: data size mismatch");
  }

  const GridSpec& grid() const { return grid_; }
  const std::array<int, 3>& dims() const { return grid_.dims; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int i, int j, int k) { return data_[grid_.index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data_[grid_.index(i, j, k)]; }
  T& operator[](std::size_t n) { return data_[n]; }
  const T& operator[](std::size_t n) const { return data_[n]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  GridSpec grid_;
  std::vector<T> data_;
};

using PowerVolume = Volume<double>;

/// Boolean mask stored as bytes so it can be addressed and bulk-copied.
using BinaryMask = Volume<unsigned char>;

/// Axis-aligned box in physical coordinates, inclusive bounds.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  double volume() const { return (hi - lo).cwiseMax(0.0).prod(); }
};

/// Linear indices of grid voxels whose centers fall inside a box.
inline std::vector<std::size_t> voxels_in_box(const GridSpec& g, const Box& box) {
  std::vector<std::size_t> out;
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k)
        if (box.contains(g.position(i, j, k))) out.push_back(g.index(i, j, k));
  return out;
}

/// Trilinear sample of a volume at fractional index coordinates; zero outside.
template <typename T>
double sample_trilinear(const Volume<T>& v, const Vec3& idx) {
  const auto& d = v.dims();
  const double fx = std::floor(idx[0]), fy = std::floor(idx[1]), fz = std::floor(idx[2]);
  const int i0 = static_cast<int>(fx), j0 = static_cast<int>(fy), k0 = static_cast<int>(fz);
  const double tx = idx[0] - fx, ty = idx[1] - fy, tz = idx[2] - fz;
  double acc = 0.0;
  for (int di = 0; di < 2; ++di) {
    const int i = i0 + di;
    if (i < 0 || i >= d[0]) continue;
    const double wx = di ? tx : 1.0 - tx;
    if (wx == 0.0) continue;
    for (int dj = 0; dj < 2; ++dj) {
      const int j = j0 + dj;
      if (j < 0 || j >= d[1]) continue;
      const double wy = dj ? ty : 1.0 - ty;
      if (wy == 0.0) continue;
      for (int dk = 0; dk < 2; ++dk) {
        const int k = k0 + dk;
        if (k < 0 || k >= d[2]) continue;
        const double wz = dk ? tz : 1.0 - tz;
        if (wz == 0.0) continue;
        acc += wx * wy * wz * static_cast<double>(v(i, j, k));
      }
    }
  }
  return acc;
}

}  // namespace ufdt
