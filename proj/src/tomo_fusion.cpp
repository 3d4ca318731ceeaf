// SPDX-License-Identifier: Apache-2.0
#include "ufdt/tomo_fusion.hpp"

#include "ufdt/fft.hpp"
#include "ufdt/io.hpp"
#include "ufdt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ufdt {

PowerVolume assemble_volume(const std::vector<PowerSlice>& slices, const ScanGeometry& geom,
                            double theta_deg, const GridSpec& world_grid) {
  world_grid.validate();
  if (slices.size() != geom.y_steps.size())
    throw std::invalid_argument("assemble_volume: slice count does not match the scan plan");
  const GridSpec& sg = geom.slice_grid;
  const int nx = sg.dims[0], nz = sg.dims[2], ny = static_cast<int>(slices.size());
  for (int k = 0; k < ny; ++k) {
    const auto& s = slices[k];
    if (std::abs(s.pose.theta_deg - theta_deg) > 1e-9 ||
        std::abs(s.pose.y_offset - geom.y_steps[k]) > 1e-9)
      throw std::invalid_argument("assemble_volume: slice pose does not match the scan plan");
    if (s.energy.rows() != nx || s.energy.cols() != nz || !s.grid.same_lattice(sg))
      throw std::invalid_argument("assemble_volume: slice grid does not match the scan plan");
  }

  // Slice stack as a volume over (x', y step, z').
  GridSpec stack_grid = sg;
  stack_grid.dims = {nx, ny, nz};
  stack_grid.origin[1] = geom.y_steps.front();
  stack_grid.spacing[1] = ny > 1 ? geom.y_step() : world_grid.spacing[1];
  if (!(stack_grid.spacing[1] > 0.0))
    throw std::invalid_argument("assemble_volume: y steps must be increasing");
  PowerVolume stack(stack_grid, 0.0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) stack(i, j, k) = slices[j].energy(i, k);

  const Pose rotation{theta_deg, 0.0};
  PowerVolume out(world_grid, 0.0);
  for (int i = 0; i < world_grid.dims[0]; ++i)
    for (int j = 0; j < world_grid.dims[1]; ++j)
      for (int k = 0; k < world_grid.dims[2]; ++k) {
        const Vec3 probe_point = world_to_probe(rotation, world_grid.position(i, j, k));
        out(i, j, k) = sample_trilinear(stack, stack_grid.to_index(probe_point));
      }
  return out;
}

namespace {

std::vector<cdouble> padded_centered(const PowerVolume& v, const std::array<int, 3>& pd) {
  const double mean =
      std::accumulate(v.data().begin(), v.data().end(), 0.0) / static_cast<double>(v.size());
  std::vector<cdouble> out(static_cast<std::size_t>(pd[0]) * pd[1] * pd[2], 0.0);
  const auto& d = v.dims();
  for (int i = 0; i < d[0]; ++i)
    for (int j = 0; j < d[1]; ++j)
      for (int k = 0; k < d[2]; ++k)
        out[(static_cast<std::size_t>(i) * pd[1] + j) * pd[2] + k] = v(i, j, k) - mean;
  return out;
}

double norm2(const std::vector<cdouble>& x) {
  double acc = 0.0;
  for (const auto& c : x) acc += std::norm(c);
  return acc;
}

int wrap(int s, int n) { return ((s % n) + n) % n; }

}  // namespace

std::vector<Vec3> register_volumes(const std::vector<PowerVolume>& volumes, int reference,
                                   int max_shift) {
  if (volumes.empty()) return {};
  if (reference < 0 || reference >= static_cast<int>(volumes.size()))
    throw std::invalid_argument("register_volumes: reference index out of range");
  if (max_shift < 0) throw std::invalid_argument("register_volumes: max_shift must be >= 0");
  const auto& g = volumes[reference].grid();
  std::array<int, 3> reach{}, pd{};
  for (int a = 0; a < 3; ++a) {
    reach[a] = std::min(max_shift, g.dims[a] - 1);
    pd[a] = fft::good_size(g.dims[a] + reach[a] + 1);
  }
  auto ref = padded_centered(volumes[reference], pd);
  const double ref_norm = std::sqrt(norm2(ref));
  if (ref_norm == 0.0) throw std::invalid_argument("register_volumes: reference volume is flat");
  fft::forward_3d(ref, pd);

  std::vector<Vec3> offsets;
  for (const auto& v : volumes) {
    if (!v.grid().same_lattice(g)) throw std::invalid_argument("register_volumes: grid mismatch");
    auto mov = padded_centered(v, pd);
    const double mov_norm = std::sqrt(norm2(mov));
    if (mov_norm == 0.0) throw std::invalid_argument("register_volumes: volume is flat");
    fft::forward_3d(mov, pd);
    for (std::size_t n = 0; n < mov.size(); ++n) mov[n] = std::conj(ref[n]) * mov[n];
    fft::inverse_3d(mov, pd);
    // cc(s) = sum_x ref(x) v(x + s), normalized to [-1, 1].
    const double scale = 1.0 / (static_cast<double>(mov.size()) * ref_norm * mov_norm);
    auto cc = [&](int sx, int sy, int sz) {
      return mov[(static_cast<std::size_t>(wrap(sx, pd[0])) * pd[1] + wrap(sy, pd[1])) * pd[2] +
                 wrap(sz, pd[2])]
                 .real() *
             scale;
    };
    std::array<int, 3> best{0, 0, 0};
    double best_val = -std::numeric_limits<double>::infinity();
    for (int sx = -reach[0]; sx <= reach[0]; ++sx)
      for (int sy = -reach[1]; sy <= reach[1]; ++sy)
        for (int sz = -reach[2]; sz <= reach[2]; ++sz) {
          const double c = cc(sx, sy, sz);
          if (c > best_val) {
            best_val = c;
            best = {sx, sy, sz};
          }
        }
    Vec3 shift(best[0], best[1], best[2]);
    for (int a = 0; a < 3; ++a) {
      if (reach[a] == 0) continue;
      std::array<int, 3> lo = best, hi = best;
      lo[a] -= 1;
      hi[a] += 1;
      const double cm = cc(lo[0], lo[1], lo[2]), cp = cc(hi[0], hi[1], hi[2]);
      const double denom = cm - 2.0 * best_val + cp;
      if (denom < 0.0) shift[a] += std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
    }
    offsets.push_back(-shift);
  }
  return offsets;
}

PowerVolume shift_volume(const PowerVolume& v, const Vec3& offset) {
  PowerVolume out(v.grid(), 0.0);
  const auto& d = v.dims();
  for (int i = 0; i < d[0]; ++i)
    for (int j = 0; j < d[1]; ++j)
      for (int k = 0; k < d[2]; ++k) out(i, j, k) = sample_trilinear(v, Vec3(i, j, k) - offset);
  return out;
}

PowerVolume sum_volumes(const std::vector<PowerVolume>& volumes, const std::vector<Vec3>& offsets) {
  if (volumes.empty()) throw std::invalid_argument("sum_volumes: no volumes");
  if (offsets.size() != volumes.size())
    throw std::invalid_argument("sum_volumes: one offset per volume required");
  PowerVolume out(volumes.front().grid(), 0.0);
  for (std::size_t n = 0; n < volumes.size(); ++n) {
    if (!volumes[n].grid().same_lattice(out.grid()))
      throw std::invalid_argument("sum_volumes: grid mismatch");
    const bool moved = offsets[n].cwiseAbs().maxCoeff() > 0.0;
    const PowerVolume shifted = moved ? shift_volume(volumes[n], offsets[n]) : volumes[n];
    for (std::size_t q = 0; q < out.size(); ++q) out[q] += shifted[q];
  }
  return out;
}

PowerSlice static_power_slice(const SliceAcquisition& acq, const ScattererCloud& cloud,
                              const Pose& pose, int workers) {
  const IQImage img = acq.compounded_frame(cloud, pose, workers);
  PowerSlice s;
  s.grid = img.grid;
  s.pose = pose;
  s.energy = img.pixels.cwiseAbs2();
  return s;
}

PSFKernel simulate_psf(const ProbeModel& probe, const Pulse& pulse, const ScanGeometry& geom,
                       const AcquisitionParams& params, const GridSpec& kernel_grid,
                       const Vec3& point, int workers) {
  ScattererCloud cloud;
  cloud.push_static(point, 1.0);
  const SliceAcquisition acq(geom.slice_grid, probe, pulse, params);
  const std::size_t ny = geom.y_steps.size();
  std::vector<PowerSlice> slices(geom.pose_count());
  parallel_for(slices.size(), workers, [&](std::size_t n) {
    slices[n] = static_power_slice(acq, cloud, geom.pose(n / ny, n % ny), 1);
  });
  std::vector<PowerVolume> per_theta(geom.thetas_deg.size());
  parallel_for(per_theta.size(), workers, [&](std::size_t t) {
    const std::vector<PowerSlice> group(slices.begin() + static_cast<std::ptrdiff_t>(t * ny),
                                        slices.begin() + static_cast<std::ptrdiff_t>((t + 1) * ny));
    per_theta[t] = assemble_volume(group, geom, geom.thetas_deg[t], kernel_grid);
  });
  PSFKernel psf;
  psf.center = point;
  psf.kernel = sum_volumes(per_theta, std::vector<Vec3>(per_theta.size(), Vec3::Zero()));
  const double total = std::accumulate(psf.kernel.data().begin(), psf.kernel.data().end(), 0.0);
  if (!(total > 0.0)) throw std::runtime_error("simulate_psf: point response is empty");
  for (auto& x : psf.kernel.data()) x /= total;
  return psf;
}

void WienerSpec::validate() const {
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("WienerSpec: noise_variance must be >= 0");
  if (!(epsilon_floor > 0.0)) throw std::invalid_argument("WienerSpec: epsilon_floor must be > 0");
}

std::vector<double> embed_kernel(const PSFKernel& psf, const std::array<int, 3>& dims) {
  const auto& kg = psf.kernel.grid();
  const Vec3 c = kg.to_index(psf.center);
  const std::array<int, 3> ci{static_cast<int>(std::lround(c[0])), static_cast<int>(std::lround(c[1])),
                              static_cast<int>(std::lround(c[2]))};
  std::vector<double> out(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0.0);
  for (int i = 0; i < kg.dims[0]; ++i)
    for (int j = 0; j < kg.dims[1]; ++j)
      for (int k = 0; k < kg.dims[2]; ++k) {
        const double v = psf.kernel(i, j, k);
        if (v == 0.0) continue;
        const std::size_t n = (static_cast<std::size_t>(wrap(i - ci[0], dims[0])) * dims[1] +
                               wrap(j - ci[1], dims[1])) *
                                  dims[2] +
                              wrap(k - ci[2], dims[2]);
        out[n] += v;
      }
  return out;
}

namespace {

std::vector<double> box_smooth3(const std::vector<double>& s, const std::array<int, 3>& d) {
  std::vector<double> out(s.size(), 0.0);
  for (int i = 0; i < d[0]; ++i)
    for (int j = 0; j < d[1]; ++j)
      for (int k = 0; k < d[2]; ++k) {
        double acc = 0.0;
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk)
              acc += s[(static_cast<std::size_t>(wrap(i + di, d[0])) * d[1] + wrap(j + dj, d[1])) *
                           d[2] +
                       wrap(k + dk, d[2])];
        out[(static_cast<std::size_t>(i) * d[1] + j) * d[2] + k] = acc / 27.0;
      }
  return out;
}

}  // namespace

PowerVolume wiener_deconvolve(const PowerVolume& vol, const PSFKernel& psf, const WienerSpec& spec) {
  spec.validate();
  if ((psf.kernel.grid().spacing - vol.grid().spacing).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("wiener_deconvolve: kernel spacing differs from the volume");
  const auto& d = vol.dims();
  const std::size_t n = vol.size();

  const auto kernel = embed_kernel(psf, d);
  std::vector<cdouble> P(kernel.begin(), kernel.end());
  fft::forward_3d(P, d);
  double pmax = 0.0;
  for (const auto& p : P) pmax = std::max(pmax, std::abs(p));
  if (!(pmax > 0.0)) throw std::invalid_argument("wiener_deconvolve: PSF is all zero");
  const double floor = spec.epsilon_floor * pmax;

  std::vector<cdouble> V(vol.data().begin(), vol.data().end());
  fft::forward_3d(V, d);
  std::vector<double> S(n);
  for (std::size_t q = 0; q < n; ++q) S[q] = std::norm(V[q]) / static_cast<double>(n);
  if (spec.smooth_spectrum) S = box_smooth3(S, d);

  for (std::size_t q = 0; q < n; ++q) {
    cdouble p = P[q];
    const double mag = std::abs(p);
    if (mag < floor) p = mag > 0.0 ? p * (floor / mag) : cdouble(floor, 0.0);
    const double gain = S[q] > 0.0 ? std::max(S[q] - spec.noise_variance, 0.0) / S[q] : 0.0;
    V[q] *= gain / p;
  }
  fft::inverse_3d(V, d);
  PowerVolume out(vol.grid(), 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    const double x = V[q].real() / static_cast<double>(n);
    out[q] = spec.clamp_nonnegative ? std::max(0.0, x) : x;
  }
  return out;
}

std::pair<double, double> region_mean_sd(const PowerVolume& vol, const Box& region) {
  const auto idx = voxels_in_box(vol.grid(), region);
  if (idx.size() < 2) throw std::invalid_argument("noise region holds fewer than 2 voxels");
  double mean = 0.0;
  for (auto q : idx) mean += vol[q];
  mean /= static_cast<double>(idx.size());
  double ss = 0.0;
  for (auto q : idx) ss += (vol[q] - mean) * (vol[q] - mean);
  return {mean, std::sqrt(ss / static_cast<double>(idx.size() - 1))};
}

double estimate_noise_variance(const PowerVolume& vol, const Box& region) {
  const double sd = region_mean_sd(vol, region).second;
  return sd * sd;
}

std::string stable_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

PSFKernel cached_psf(const std::string& cache_dir, const ProbeModel& probe, const Pulse& pulse,
                     const ScanGeometry& geom, const AcquisitionParams& params,
                     const GridSpec& kernel_grid, const Vec3& point, int workers) {
  if (cache_dir.empty()) return simulate_psf(probe, pulse, geom, params, kernel_grid, point, workers);
  const nlohmann::json key = {
      {"probe", probe},
      {"pulse", {pulse.center_freq, pulse.fractional_bandwidth}},
      {"scan", geom},
      {"tx_angles_deg", params.tx_angles_deg},
      {"sample_rate_mhz", params.sample_rate},
      {"sound_speed", params.sound_speed},
      {"kernel_grid", kernel_grid},
      {"point_mm", {point[0], point[1], point[2]}}};
  const std::string path =
      (std::filesystem::path(cache_dir) / ("psf_" + stable_hash(key.dump()) + ".f32")).string();
  if (io::file_exists(path) && io::file_exists(io::sidecar(path))) {
    const auto meta = io::read_json(io::sidecar(path));
    if (meta.value("key", nlohmann::json()) == key) {
      PSFKernel psf;
      psf.kernel = io::read_volume(path);
      psf.center = point;
      return psf;
    }
  }
  PSFKernel psf = simulate_psf(probe, pulse, geom, params, kernel_grid, point, workers);
  for (auto& x : psf.kernel.data()) x = static_cast<float>(x);
  std::filesystem::create_directories(cache_dir);
  io::write_volume(path, psf.kernel, {{"key", key}});
  return psf;
}

}  // namespace ufdt
