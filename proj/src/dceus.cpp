// SPDX-License-Identifier: Apache-2.0
#include "ufdt/dceus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace ufdt {

BiquadCoefficients butterworth_lowpass(double wn) {
  if (!(wn > 0.0 && wn < 1.0))
    throw std::invalid_argument("butterworth_lowpass: cutoff must lie below the Nyquist frequency");
  const double k = std::tan(std::numbers::pi * wn / 2.0);
  const double s2 = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + s2 * k + k * k);
  BiquadCoefficients f;
  f.b = {k * k * norm, 2.0 * k * k * norm, k * k * norm};
  f.a = {1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - s2 * k + k * k) * norm};
  return f;
}

namespace {

/// Direct form II transposed pass with initial state zi.
std::vector<double> lfilter(const BiquadCoefficients& f, const std::vector<double>& x,
                            std::array<double, 2> z) {
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double out = f.b[0] * x[n] + z[0];
    z[0] = f.b[1] * x[n] - f.a[1] * out + z[1];
    z[1] = f.b[2] * x[n] - f.a[2] * out;
    y[n] = out;
  }
  return y;
}

/// Steady-state state for a unit step input.
std::array<double, 2> lfilter_zi(const BiquadCoefficients& f) {
  // (I - A^T) zi = b[1:] - a[1:] * b[0], A the companion matrix of a.
  const double m00 = 1.0 + f.a[1], m01 = -1.0, m10 = f.a[2], m11 = 1.0;
  const double r0 = f.b[1] - f.a[1] * f.b[0], r1 = f.b[2] - f.a[2] * f.b[0];
  const double det = m00 * m11 - m01 * m10;
  return {(r0 * m11 - m01 * r1) / det, (m00 * r1 - m10 * r0) / det};
}

}  // namespace

std::vector<double> filtfilt(const BiquadCoefficients& f, const std::vector<double>& x) {
  constexpr int pad = 9;
  const int n = static_cast<int>(x.size());
  if (n <= pad) throw std::invalid_argument("filtfilt: signal must be longer than 9 samples");
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (int i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (int i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = lfilter_zi(f);
  auto fwd = lfilter(f, ext, {zi[0] * ext.front(), zi[1] * ext.front()});
  std::reverse(fwd.begin(), fwd.end());
  auto bwd = lfilter(f, fwd, {zi[0] * fwd.front(), zi[1] * fwd.front()});
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + pad, bwd.end() - pad};
}

double trapezoid_mean(const std::vector<double>& y) {
  if (y.empty()) throw std::invalid_argument("trapezoid_mean: empty trace");
  if (y.size() == 1) return y.front();
  double acc = 0.0;
  for (std::size_t i = 1; i < y.size(); ++i) acc += 0.5 * (y[i - 1] + y[i]);
  return acc / static_cast<double>(y.size() - 1);
}

std::vector<double> region_trace(const IntensityMovie& movie, int r, int s) {
  std::vector<double> trace(movie.frame_count(), 0.0);
  for (int t = 0; t < movie.frame_count(); ++t) {
    double acc = 0.0;
    for (int di = 0; di < kRegionSize; ++di)
      for (int dj = 0; dj < kRegionSize; ++dj)
        acc += movie.at(r * kRegionSize + di, s * kRegionSize + dj, t);
    trace[t] = acc / (kRegionSize * kRegionSize);
  }
  return trace;
}

namespace {

ParamMap empty_map(const IntensityMovie& movie, MapKind kind) {
  if (movie.data.rows() != static_cast<Eigen::Index>(movie.nx) * movie.ny)
    throw std::invalid_argument("IntensityMovie: data rows must equal nx * ny");
  if (movie.frame_count() < 1) throw std::invalid_argument("IntensityMovie: no frames");
  ParamMap m;
  m.kind = kind;
  m.rx = movie.nx / kRegionSize;
  m.ry = movie.ny / kRegionSize;
  m.values = Eigen::MatrixXd::Zero(m.rx, m.ry);
  m.nonperfused.setConstant(m.rx, m.ry, false);
  return m;
}

double lowpass_wn(const IntensityMovie& movie, double cutoff) {
  const double nyquist = 0.5 / movie.frame_interval;
  if (!(cutoff > 0.0 && cutoff < nyquist))
    throw std::invalid_argument("low-pass cutoff must lie in (0, Nyquist)");
  return cutoff / nyquist;
}

}  // namespace

ParamMap toa_map(const IntensityMovie& movie, double noise_sd, const ToaOptions& options) {
  if (!(noise_sd > 0.0)) throw std::invalid_argument("toa_map: noise_sd must be positive");
  ParamMap m = empty_map(movie, MapKind::toa);
  std::optional<BiquadCoefficients> filter;
  if (options.use_filtered) filter = butterworth_lowpass(lowpass_wn(movie, options.lowpass_cutoff));
  for (int r = 0; r < m.rx; ++r)
    for (int s = 0; s < m.ry; ++s) {
      const auto raw = region_trace(movie, r, s);
      const double raw_max = *std::max_element(raw.begin(), raw.end());
      if (raw_max < 3.0 * noise_sd) {
        m.nonperfused(r, s) = true;
        m.values(r, s) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const auto trace = filter ? filtfilt(*filter, raw) : raw;
      const double peak = *std::max_element(trace.begin(), trace.end());
      const double level = 0.9 * peak * (1.0 - 1e-12);
      int k = 0;
      while (k < static_cast<int>(trace.size()) - 1 && trace[k] < level) ++k;
      m.values(r, s) = k * movie.frame_interval;
    }
  return m;
}

ParamMap moi_map(const IntensityMovie& movie, double lowpass_cutoff, double noise_sd) {
  ParamMap m = empty_map(movie, MapKind::moi);
  const auto filter = butterworth_lowpass(lowpass_wn(movie, lowpass_cutoff));
  for (int r = 0; r < m.rx; ++r)
    for (int s = 0; s < m.ry; ++s) {
      const auto raw = region_trace(movie, r, s);
      if (noise_sd > 0.0 && *std::max_element(raw.begin(), raw.end()) < 3.0 * noise_sd) {
        m.nonperfused(r, s) = true;
        m.values(r, s) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      m.values(r, s) = trapezoid_mean(filtfilt(filter, raw));
    }
  return m;
}

SpatialSummary spatial_summary(const ParamMap& map) {
  SpatialSummary out;
  double acc = 0.0;
  for (int r = 0; r < map.rx; ++r)
    for (int s = 0; s < map.ry; ++s)
      if (!map.nonperfused(r, s)) {
        acc += map.values(r, s);
        ++out.regions;
      }
  if (out.regions == 0) throw std::invalid_argument("spatial_summary: all regions are non-perfused");
  out.mean = acc / out.regions;
  double ss = 0.0;
  for (int r = 0; r < map.rx; ++r)
    for (int s = 0; s < map.ry; ++s)
      if (!map.nonperfused(r, s)) ss += (map.values(r, s) - out.mean) * (map.values(r, s) - out.mean);
  out.sd = std::sqrt(ss / out.regions);
  return out;
}

IntensityMovie movie_from_phantom(const PhantomSpec& spec, const GridSpec& plane,
                                  double frame_interval, double duration) {
  if (plane.dims[2] != 1) throw std::invalid_argument("movie_from_phantom: plane must have dims[2] == 1");
  if (!(frame_interval > 0.0) || !(duration >= frame_interval))
    throw std::invalid_argument("movie_from_phantom: invalid timing");
  const BolusField field(spec, plane);
  IntensityMovie movie;
  movie.nx = plane.dims[0];
  movie.ny = plane.dims[1];
  movie.frame_interval = frame_interval;
  const int n_frames = static_cast<int>(std::llround(duration / frame_interval));
  movie.data.resize(static_cast<Eigen::Index>(movie.nx) * movie.ny, n_frames);
  for (int t = 0; t < n_frames; ++t) {
    const auto frame = field.intensity_frame(t * frame_interval, static_cast<std::uint64_t>(t));
    for (int i = 0; i < movie.nx; ++i)
      for (int j = 0; j < movie.ny; ++j) movie.at(i, j, t) = frame(i, j, 0);
  }
  return movie;
}

void write_param_map_csv(std::ostream& os, const ParamMap& map) {
  os.precision(10);
  for (int s = 0; s < map.ry; ++s) {
    for (int r = 0; r < map.rx; ++r) {
      if (r) os << ',';
      if (map.nonperfused(r, s)) {
        os << "nan";
      } else {
        os << map.values(r, s);
      }
    }
    os << '\n';
  }
}

}  // namespace ufdt
