// SPDX-License-Identifier: Apache-2.0
#include "ufdt/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace ufdt::fft {
namespace {

using PlanKey = std::tuple<int, int, int, int, int>;  // rank, n0, n1, n2, sign

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan get_plan(int rank, const std::array<int, 3>& n, int sign) {
  static std::map<PlanKey, fftw_plan> cache;
  const PlanKey key{rank, n[0], rank > 1 ? n[1] : 0, rank > 2 ? n[2] : 0, sign};
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::size_t total = 1;
  for (int a = 0; a < rank; ++a) total *= static_cast<std::size_t>(n[a]);
  auto* buf = fftw_alloc_complex(total);
  fftw_plan p = fftw_plan_dft(rank, n.data(), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  if (!p) throw std::runtime_error("fft: plan creation failed");
  cache.emplace(key, p);
  return p;
}

void execute(int rank, const std::array<int, 3>& n, int sign, cdouble* data) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(get_plan(rank, n, sign), ptr, ptr);
}

}  // namespace

void forward_1d(std::span<cdouble> data) {
  if (data.empty()) return;
  execute(1, {static_cast<int>(data.size()), 1, 1}, FFTW_FORWARD, data.data());
}

void inverse_1d(std::span<cdouble> data) {
  if (data.empty()) return;
  execute(1, {static_cast<int>(data.size()), 1, 1}, FFTW_BACKWARD, data.data());
}

void forward_3d(std::vector<cdouble>& data, const std::array<int, 3>& dims) {
  if (data.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
    throw std::invalid_argument("fft::forward_3d: size mismatch");
  execute(3, dims, FFTW_FORWARD, data.data());
}

void inverse_3d(std::vector<cdouble>& data, const std::array<int, 3>& dims) {
  if (data.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
    throw std::invalid_argument("fft::inverse_3d: size mismatch");
  execute(3, dims, FFTW_BACKWARD, data.data());
}

int good_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

std::vector<cdouble> analytic_signal(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) return {};
  const int m = good_size(2 * n);
  std::vector<cdouble> buf(m, 0.0);
  for (int i = 0; i < n; ++i) buf[i] = x[i];
  forward_1d(buf);
  // Keep DC and Nyquist, double positive frequencies, zero negative ones.
  for (int k = 1; k < (m + 1) / 2; ++k) buf[k] *= 2.0;
  for (int k = m / 2 + 1; k < m; ++k) buf[k] = 0.0;
  inverse_1d(buf);
  std::vector<cdouble> out(n);
  const double scale = 1.0 / m;
  for (int i = 0; i < n; ++i) out[i] = buf[i] * scale;
  return out;
}

}  // namespace ufdt::fft
