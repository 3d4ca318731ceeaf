// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ufdt/beamform.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>

namespace ufdt {

/// Space x time matrix; row i + j * nx holds slice pixel (i, j).
struct CasoratiMatrix {
  Eigen::MatrixXcd data;
  int nx = 0;
  int nz = 0;

  Eigen::Index n_space() const { return data.rows(); }
  Eigen::Index n_time() const { return data.cols(); }
};

CasoratiMatrix to_casorati(const IQFrameStack& stack);
IQFrameStack from_casorati(const CasoratiMatrix& m, const IQFrameStack& like);

/// Singular values of m, descending.
Eigen::VectorXd singular_values(const CasoratiMatrix& m);

/// Removes the n_cut largest singular components of m.
CasoratiMatrix svd_filter(const CasoratiMatrix& m, int n_cut);

/// Smallest k whose leading squared singular values reach `energy_fraction`
/// of the total, optionally capped at max_rank.
int choose_rank(const Eigen::VectorXd& singular_values, double energy_fraction = 0.95,
                std::optional<int> max_rank = std::nullopt);

/// Nonnegative energy image on a slice grid, pixels(i, j) as in IQImage.
struct PowerSlice {
  GridSpec grid;
  Eigen::MatrixXd energy;
  Pose pose;
};

/// Per-pixel mean of |value|^2 over time.
PowerSlice power_doppler(const CasoratiMatrix& m, const GridSpec& grid = {}, const Pose& pose = {});

/// How the SVD cutoff is chosen for each slice.
struct ClutterParams {
  std::optional<int> fixed_rank;   // used as-is when set
  double energy_fraction = 0.95;   // adaptive mode
  double max_rank_fraction = 0.25;  // adaptive cap as a fraction of n_time
};

int select_rank(const CasoratiMatrix& m, const ClutterParams& params);

/// Full slice chain: reshape, filter at the selected rank, energy.
PowerSlice filtered_power(const IQFrameStack& stack, const ClutterParams& params);

void write_power_slice(const std::string& path, const PowerSlice& slice);
PowerSlice read_power_slice(const std::string& path);

}  // namespace ufdt
