// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace ufdt {

using cdouble = std::complex<double>;

/// Thin FFTW wrappers. Plans are created once per shape and cached; execution
/// is thread-safe. Transforms are unnormalized (inverse scales by N).
namespace fft {

void forward_1d(std::span<cdouble> data);
void inverse_1d(std::span<cdouble> data);

/// In-place 3D transform on a C-order (z fastest) array of the given dims.
void forward_3d(std::vector<cdouble>& data, const std::array<int, 3>& dims);
void inverse_3d(std::vector<cdouble>& data, const std::array<int, 3>& dims);

/// Analytic signal of a real sequence (negative frequencies suppressed).
std::vector<cdouble> analytic_signal(std::span<const double> x);

/// Smallest size >= n whose prime factors are all in {2, 3, 5}.
int good_size(int n);

}  // namespace fft
}  // namespace ufdt
