// SPDX-License-Identifier: Apache-2.0
#include "ufdt/clutter_filter.hpp"

#include "ufdt/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ufdt {

CasoratiMatrix to_casorati(const IQFrameStack& stack) {
  return {stack.frames, stack.grid.dims[0], stack.grid.dims[2]};
}

IQFrameStack from_casorati(const CasoratiMatrix& m, const IQFrameStack& like) {
  if (m.nx != like.grid.dims[0] || m.nz != like.grid.dims[2] || m.n_space() != m.nx * m.nz)
    throw std::invalid_argument("from_casorati: shape does not match the template stack");
  IQFrameStack out = like;
  out.frames = m.data;
  return out;
}

namespace {

/// Right singular vectors (columns, descending) and squared singular values
/// from the n_time x n_time Gram matrix, which is small for frame stacks.
void gram_eigen(const Eigen::MatrixXcd& a, Eigen::MatrixXcd& v, Eigen::VectorXd& sigma2) {
  const Eigen::MatrixXcd gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
  if (es.info() != Eigen::Success) throw std::runtime_error("svd_filter: eigen decomposition failed");
  const Eigen::Index n = gram.rows();
  v.resize(n, n);
  sigma2.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    v.col(k) = es.eigenvectors().col(n - 1 - k);
    sigma2[k] = std::max(0.0, es.eigenvalues()[n - 1 - k]);
  }
}

}  // namespace

Eigen::VectorXd singular_values(const CasoratiMatrix& m) {
  Eigen::MatrixXcd v;
  Eigen::VectorXd s2;
  gram_eigen(m.data, v, s2);
  const Eigen::Index r = std::min(m.n_space(), m.n_time());
  return s2.head(r).cwiseSqrt();
}

CasoratiMatrix svd_filter(const CasoratiMatrix& m, int n_cut) {
  const Eigen::Index r = std::min(m.n_space(), m.n_time());
  if (n_cut < 0 || n_cut >= r)
    throw std::invalid_argument("svd_filter: n_cut must lie in [0, min(n_space, n_time))");
  CasoratiMatrix out = m;
  if (n_cut == 0) return out;
  Eigen::MatrixXcd v;
  Eigen::VectorXd s2;
  gram_eigen(m.data, v, s2);
  const Eigen::MatrixXcd vk = v.leftCols(n_cut);
  out.data.noalias() -= (m.data * vk) * vk.adjoint();
  return out;
}

int choose_rank(const Eigen::VectorXd& s, double energy_fraction, std::optional<int> max_rank) {
  if (s.size() == 0) throw std::invalid_argument("choose_rank: empty singular value list");
  if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
    throw std::invalid_argument("choose_rank: energy_fraction must lie in (0, 1]");
  const double total = s.squaredNorm();
  int k = static_cast<int>(s.size());
  if (total > 0.0) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      acc += s[i] * s[i];
      if (acc >= energy_fraction * total * (1.0 - 1e-12)) {
        k = static_cast<int>(i) + 1;
        break;
      }
    }
  } else {
    k = 0;
  }
  if (max_rank) k = std::min(k, *max_rank);
  return k;
}

PowerSlice power_doppler(const CasoratiMatrix& m, const GridSpec& grid, const Pose& pose) {
  PowerSlice out;
  out.grid = grid;
  out.pose = pose;
  out.energy.resize(m.nx, m.nz);
  const double inv_t = m.n_time() > 0 ? 1.0 / static_cast<double>(m.n_time()) : 0.0;
  for (int j = 0; j < m.nz; ++j)
    for (int i = 0; i < m.nx; ++i) out.energy(i, j) = m.data.row(i + j * m.nx).squaredNorm() * inv_t;
  return out;
}

int select_rank(const CasoratiMatrix& m, const ClutterParams& params) {
  const int r = static_cast<int>(std::min(m.n_space(), m.n_time()));
  if (params.fixed_rank) {
    if (*params.fixed_rank < 0 || *params.fixed_rank >= r)
      throw std::invalid_argument("select_rank: fixed rank out of range");
    return *params.fixed_rank;
  }
  const int cap = std::max(0, static_cast<int>(std::floor(params.max_rank_fraction * m.n_time())));
  return std::min(choose_rank(singular_values(m), params.energy_fraction, cap), r - 1);
}

PowerSlice filtered_power(const IQFrameStack& stack, const ClutterParams& params) {
  const CasoratiMatrix m = to_casorati(stack);
  return power_doppler(svd_filter(m, select_rank(m, params)), stack.grid, stack.pose);
}

void write_power_slice(const std::string& path, const PowerSlice& s) {
  std::vector<double> flat(static_cast<std::size_t>(s.energy.size()));
  // Stored like a volume with dims (nx, 1, nz): z fastest.
  for (Eigen::Index i = 0; i < s.energy.rows(); ++i)
    for (Eigen::Index j = 0; j < s.energy.cols(); ++j)
      flat[static_cast<std::size_t>(i * s.energy.cols() + j)] = s.energy(i, j);
  io::write_f32(path, flat);
  io::write_json(io::sidecar(path), {{"grid", s.grid}, {"pose", s.pose}, {"frame", "probe"}});
}

PowerSlice read_power_slice(const std::string& path) {
  const auto meta = io::read_json(io::sidecar(path));
  PowerSlice s;
  s.grid = meta.at("grid").get<GridSpec>();
  s.pose = meta.at("pose").get<Pose>();
  const int nx = s.grid.dims[0], nz = s.grid.dims[2];
  const auto flat = io::read_f32(path, static_cast<std::size_t>(nx) * nz);
  s.energy.resize(nx, nz);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nz; ++j) s.energy(i, j) = flat[static_cast<std::size_t>(i) * nz + j];
  return s;
}

}  // namespace ufdt
